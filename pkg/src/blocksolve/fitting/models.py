"""Quadratic interpolation models with minimum-change symmetric Hessians.

All observable columns share one interpolation point set, so a single KKT
factorization produces every per-residual model. Updates minimize
||H_new - H_prev||_F subject to interpolating the stored values exactly,
the standard construction for model-based derivative-free solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError


@dataclass
class QuadraticModels:
    """One quadratic per observable column, expanded around ``center``.

    model_i(x) = c[i] + g[:, i].(x - center) + 0.5 (x - center).H[i].(x - center)
    """

    center: np.ndarray
    const: np.ndarray  # (o,)
    grad: np.ndarray  # (n, o)
    hess: np.ndarray  # (o, n, n)

    @property
    def n_models(self) -> int:
        return self.const.shape[0]

    def value(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.center
        quad = 0.5 * np.einsum("i,oij,j->o", d, self.hess, d)
        return self.const + self.grad.T @ d + quad

    def shift_center(self, new_center: np.ndarray) -> "QuadraticModels":
        d = np.asarray(new_center, dtype=float) - self.center
        const = self.value(new_center)
        grad = self.grad + np.einsum("oij,j->io", self.hess, d)
        return QuadraticModels(center=np.array(new_center, dtype=float),
                               const=const, grad=grad, hess=self.hess.copy())


def zero_models(center: np.ndarray, n_models: int) -> QuadraticModels:
    n = len(center)
    return QuadraticModels(
        center=np.array(center, dtype=float), const=np.zeros(n_models),
        grad=np.zeros((n, n_models)), hess=np.zeros((n_models, n, n)),
    )


def scaled_system_cond(points: np.ndarray, center: np.ndarray, delta: float) -> float:
    """Condition number of the scaled KKT interpolation system."""
    kkt = _kkt_matrix(points, center, delta)
    try:
        return float(np.linalg.cond(kkt))
    except np.linalg.LinAlgError:
        return float("inf")


def _kkt_matrix(points: np.ndarray, center: np.ndarray, delta: float) -> np.ndarray:
    d = (points - center) / delta  # (p, n)
    p, n = d.shape
    phi = 0.5 * (d @ d.T) ** 2
    lin = np.column_stack([np.ones(p), d])
    kkt = np.zeros((p + n + 1, p + n + 1))
    kkt[:p, :p] = phi
    kkt[:p, p:] = lin
    kkt[p:, :p] = lin.T
    return kkt


def interpolate_models(
    points: np.ndarray,
    values: np.ndarray,
    prev: QuadraticModels,
    delta: float,
) -> tuple[QuadraticModels, float]:
    """Minimum-Frobenius-change models interpolating ``values`` at ``points``.

    ``values`` is (p, o): one row of observables per interpolation point.
    Returns the models and the worst relative interpolation error after one
    refinement pass.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    p, n = points.shape
    center = prev.center
    d = (points - center) / delta
    kkt = _kkt_matrix(points, center, delta)

    models = prev
    for _ in range(2):  # direct solve plus one iterative-refinement pass
        rhs = np.zeros((p + n + 1, values.shape[1]))
        for col in range(values.shape[1]):
            rhs[:p, col] = values[:, col] - np.array(
                [models.value(points[row])[col] for row in range(p)]
            )
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("interpolation system is singular") from exc
        lam = sol[:p]  # (p, o)
        dc = sol[p]
        dg_scaled = sol[p + 1:]
        hess = models.hess.copy()
        for col in range(values.shape[1]):
            correction = (d.T * lam[:, col]) @ d  # sum_j lam_j d_j d_j^T
            hess[col] += correction / delta**2
        models = QuadraticModels(
            center=center.copy(),
            const=models.const + dc,
            grad=models.grad + dg_scaled / delta,
            hess=hess,
        )
        err = _max_relative_error(models, points, values)
        if err <= 1e-13:
            break
    return models, _max_relative_error(models, points, values)


def _max_relative_error(models: QuadraticModels, points: np.ndarray, values: np.ndarray) -> float:
    worst = 0.0
    for row in range(points.shape[0]):
        got = models.value(points[row])
        scale = np.maximum(np.abs(values[row]), 1.0)
        worst = max(worst, float(np.max(np.abs(got - values[row]) / scale)))
    return worst


def master_model_residuals(models: QuadraticModels) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate sum-of-squares model from per-residual models at the center.

    gradient 2 G^T r, Hessian 2 G^T G + sum_i r_i H_i, where G stacks the
    model gradients and r the model residual values at the center.
    """
    r = models.const
    g_stack = models.grad  # (n, o), column i is the gradient of residual i
    grad = 2.0 * g_stack @ r
    hess = 2.0 * (g_stack @ g_stack.T) + np.einsum("o,oij->ij", r, models.hess)
    return grad, (hess + hess.T) / 2.0


def master_model_scalar(models: QuadraticModels) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate model when the single column models the objective itself."""
    grad = models.grad[:, 0].copy()
    hess = models.hess[0]
    return grad, (hess + hess.T) / 2.0
