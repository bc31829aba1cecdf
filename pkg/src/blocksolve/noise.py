"""Computational noise estimation for scalar black boxes.

Samples a function at equispaced points along a line, builds the forward
difference table, and converts k-th difference magnitudes into noise-level
estimates: higher differences annihilate the smooth trend, leaving the
noise scaled by a known combinatorial factor gamma_k = (k!)^2 / (2k)!.
The selected order is the smallest one whose estimate is stable against the
next order and whose differences change sign often enough to look like
noise rather than curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ConfigError, EvaluatorError


def gamma_coefficient(k: int) -> float:
    """(k!)^2 / (2k)! without overflow."""
    return 1.0 / comb(2 * k, k)


@dataclass
class DifferenceTable:
    """Forward differences: columns[k][i] = T[i][k], with T[:,0] the samples."""

    columns: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def from_values(cls, values) -> "DifferenceTable":
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            raise ConfigError("difference table needs at least two values")
        cols = [values]
        while cols[-1].size > 1:
            cols.append(np.diff(cols[-1]))
        return cls(columns=cols)

    @property
    def order(self) -> int:
        return len(self.columns) - 1

    def column(self, k: int) -> np.ndarray:
        return self.columns[k]


def difference_table(values) -> DifferenceTable:
    return DifferenceTable.from_values(values)


@dataclass
class NoiseEstimate:
    sigma_abs: float
    sigma_rel: float
    order: int
    reliable: bool
    rel_undefined: bool
    samples: np.ndarray
    advisory: str = ""


def _sign_changes(column: np.ndarray) -> int:
    return int(np.sum(column[:-1] * column[1:] < 0.0))


def ecnoise(
    f,
    x,
    direction=None,
    h: float | None = None,
    m: int = 8,
    seed: int = 0,
) -> NoiseEstimate:
    """Estimate the noise level of ``f`` near ``x`` from m+1 line samples.

    Exactly m+1 evaluations are made at x + i*h*direction, i = 0..m. When no
    order passes the stability and sign-change screens the estimate is
    flagged unreliable with an advisory to rescale h.
    """
    if m < 4:
        raise ConfigError("need m >= 4 sample intervals")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if h is None:
        h = 1e-4 * max(1.0, float(np.linalg.norm(x)))
    if h <= 0:
        raise ConfigError("step h must be positive")
    if direction is None:
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xEC])
        direction = rng.standard_normal(x.shape)
        direction /= np.linalg.norm(direction)
    else:
        direction = np.asarray(direction, dtype=float)

    samples = np.empty(m + 1)
    for i in range(m + 1):
        point = x + i * h * direction
        try:
            samples[i] = float(f(point if x.size > 1 else point[0]))
        except Exception as exc:  # noqa: BLE001
            raise EvaluatorError(point, exc) from exc

    table = DifferenceTable.from_values(samples)
    sigmas = np.array([
        np.sqrt(gamma_coefficient(k) * float(np.mean(table.column(k) ** 2)))
        for k in range(1, m + 1)
    ])

    f0 = samples[0]
    rel_undefined = f0 == 0.0

    def estimate(k, sigma, reliable, advisory=""):
        return NoiseEstimate(
            sigma_abs=float(sigma),
            sigma_rel=float(sigma / abs(f0)) if not rel_undefined else float("nan"),
            order=k, reliable=reliable, rel_undefined=rel_undefined,
            samples=samples, advisory=advisory,
        )

    for k in range(1, m):
        s_k, s_next = sigmas[k - 1], sigmas[k]
        if s_k == 0.0 and s_next == 0.0:
            return estimate(k, 0.0, True)
        if min(s_k, s_next) == 0.0:
            continue
        if max(s_k, s_next) / min(s_k, s_next) > 4.0:
            continue
        if _sign_changes(table.column(k)) < (m - k) / 2.0 - 1.0:
            continue
        return estimate(k, s_k, True)
    return estimate(
        int(np.argmin(sigmas) + 1), float(sigmas.min()), False,
        advisory="no difference order passed the screens; rescale h "
                 "(too large: curvature dominates; too small: values collide)",
    )


def noise_map(f, points, h=None, m=8, seed=0):
    """Per-point noise estimates; failures are recorded and the map continues.

    Returns a list of (point id, NoiseEstimate or None, error message or "").
    """
    points = list(points)
    if not points:
        raise ConfigError("noise map needs at least one point")
    out = []
    for idx, x in enumerate(points):
        try:
            out.append((idx, ecnoise(f, x, h=h, m=m, seed=seed + idx), ""))
        except (EvaluatorError, ConfigError) as exc:
            out.append((idx, None, str(exc)))
    return out
