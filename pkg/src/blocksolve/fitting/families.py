"""Built-in synthetic fitting problem families.

Each family builds a :class:`ResidualProblem` plus a starting point and,
when known, the true minimizer. Noisy variants add seeded pseudo-noise that
is a deterministic function of the evaluation point, mimicking the
irreproducible digits of an iterative simulator while staying reproducible
across runs.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import ConfigError
from .problem import ResidualProblem

FAMILIES = ("linear", "rosenbrock", "exponential", "bound_quadratic")


def _point_noise(x: np.ndarray, scale: float, seed: int, size: int) -> np.ndarray:
    """Additive noise that depends deterministically on the point."""
    if scale == 0.0:
        return np.zeros(size)
    digest = hashlib.sha256(
        np.ascontiguousarray(x, dtype=np.float64).tobytes() + seed.to_bytes(8, "little", signed=True)
    ).digest()
    rng = np.random.default_rng(np.frombuffer(digest[:16], dtype=np.uint64))
    return scale * rng.standard_normal(size)


def make_problem(spec: dict):
    """Build (problem, x0, info) from a family spec dictionary.

    Keys: family (required), n, o, seed, noise; unknown families are
    rejected. ``info`` carries the known solution when the family has one.
    """
    spec = dict(spec)
    family = spec.pop("family", None)
    seed = int(spec.pop("seed", 0))
    noise = float(spec.pop("noise", 0.0))
    if family == "linear":
        return _linear(int(spec.pop("n", 3)), int(spec.pop("o", 5)), seed, noise)
    if family == "rosenbrock":
        return _rosenbrock(noise, seed)
    if family == "exponential":
        return _exponential(int(spec.pop("n", 8)), int(spec.pop("o", 40)), seed, noise)
    if family == "bound_quadratic":
        return _bound_quadratic()
    raise ConfigError(f"unknown problem family {family!r} (have {', '.join(FAMILIES)})")


def _linear(n, o, seed, noise):
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x11EA5])
    a = rng.standard_normal((o, n)) + np.eye(o, n)  # keep it well conditioned
    x_true = rng.uniform(-1.0, 1.0, size=n)
    b = a @ x_true
    problem = ResidualProblem(
        n=n, o=o,
        evaluator=lambda x: a @ x + _point_noise(x, noise, seed, o),
        data=b, sigma=np.ones(o), name=f"linear(n={n},o={o},seed={seed})",
    )
    x_star, *_ = np.linalg.lstsq(a, b, rcond=None)
    x0 = x_true + rng.uniform(-2.0, 2.0, size=n)
    return problem, x0, {"x_star": x_star, "f_star": 0.0, "design": a}


def _rosenbrock(noise, seed):
    def simulate(x):
        return np.array([-10.0 * (x[1] - x[0] ** 2), -(1.0 - x[0])]) + _point_noise(
            x, noise, seed, 2
        )

    problem = ResidualProblem(
        n=2, o=2, evaluator=simulate, data=np.zeros(2), sigma=np.ones(2),
        name="rosenbrock",
    )
    return problem, np.array([-1.2, 1.0]), {"x_star": np.array([1.0, 1.0]), "f_star": 0.0}


def _exponential(n, o, seed, noise):
    if n % 2:
        raise ConfigError("exponential family needs an even parameter count")
    terms = n // 2
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xE4B])
    t = np.linspace(0.0, 2.0, o)
    amp_true = rng.uniform(0.5, 2.0, size=terms)
    rate_true = np.sort(rng.uniform(0.3, 4.0, size=terms))
    x_true = np.concatenate([amp_true, rate_true])

    def simulate(x):
        amps, rates = x[:terms], x[terms:]
        s = np.sum(amps[:, None] * np.exp(-np.outer(rates, t)), axis=0)
        return s + _point_noise(x, noise, seed, o)

    clean = np.sum(amp_true[:, None] * np.exp(-np.outer(rate_true, t)), axis=0)
    lower = np.concatenate([np.full(terms, -10.0), np.full(terms, 0.0)])
    upper = np.concatenate([np.full(terms, 10.0), np.full(terms, 12.0)])
    problem = ResidualProblem(
        n=n, o=o, evaluator=simulate, data=clean, sigma=np.full(o, 1.0),
        lower=lower, upper=upper, name=f"exponential(n={n},o={o},seed={seed})",
    )
    x0 = np.concatenate([np.full(terms, 1.0), np.linspace(0.5, 3.0, terms)])
    return problem, x0, {"x_star": x_true, "f_star": 0.0}


def _bound_quadratic():
    problem = ResidualProblem(
        n=1, o=1, evaluator=lambda x: np.array([x[0]]), data=np.array([2.0]),
        sigma=np.ones(1), lower=np.array([-5.0]), upper=np.array([1.0]),
        name="bound_quadratic",
    )
    return problem, np.array([0.0]), {"x_star": np.array([1.0]), "f_star": 1.0}
