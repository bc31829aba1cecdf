"""Polynomial spectral filters.

A filter is a degree-d Chebyshev polynomial on a "damped" interval [a, b],
rescaled so it equals exactly one at a target point lying outside [a, b].
On [a, b] its magnitude is 1/|T_d(m(target))| < 1, so repeated application
suppresses every spectral component in the damped band while leaving the
target component untouched.

Evaluation uses the three-term recurrence on ratio-normalized terms
p_k = T_k(m(w)) / T_k(m(target)), which never forms the (potentially huge)
unnormalized Chebyshev values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class SpectralFilter:
    """Chebyshev filter normalized to one at ``target``, damped on ``interval``."""

    target: float
    interval: tuple[float, float]
    degree: int
    _alphas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a, b = self.interval
        if not b > a:
            raise ConfigError(f"damped interval must have positive width, got [{a}, {b}]")
        if self.degree < 1:
            raise ConfigError("filter degree must be at least 1")
        mt = self._map(self.target)
        if abs(mt) <= 1.0:
            raise ConfigError(
                f"target {self.target} lies inside the damped interval [{a}, {b}]"
            )
        # alphas[k] = T_{k-1}(m(target)) / T_k(m(target)); all magnitudes < 1
        alphas = np.empty(self.degree + 1)
        alphas[0] = np.nan  # unused
        alphas[1] = 1.0 / mt
        for k in range(1, self.degree):
            alphas[k + 1] = 1.0 / (2.0 * mt - alphas[k])
        object.__setattr__(self, "_alphas", alphas)

    def _map(self, w):
        a, b = self.interval
        return (2.0 * w - (a + b)) / (b - a)

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients in the Chebyshev basis of the mapped interval.

        The filter is (1/T_d(m(target))) * T_d, i.e. a single top coefficient.
        """
        coeffs = np.zeros(self.degree + 1)
        coeffs[-1] = float(np.prod(self._alphas[1:]))
        return coeffs

    def __call__(self, w):
        """Evaluate the filter at scalar or array arguments."""
        w = np.asarray(w, dtype=float)
        mw = self._map(w)
        p_prev = np.ones_like(mw)
        p = self._alphas[1] * mw
        for k in range(1, self.degree):
            a_next = self._alphas[k + 1]
            p, p_prev = a_next * (2.0 * mw * p) - a_next * self._alphas[k] * p_prev, p
        return p if p.ndim else float(p)

    def apply(self, matvec, x: np.ndarray) -> np.ndarray:
        """Apply the filter to the columns of ``x`` given a matvec for the operator."""
        a, b = self.interval
        width = b - a

        def mapped(v):
            return (2.0 * matvec(v) - (a + b) * v) / width

        p_prev = x
        p = self._alphas[1] * mapped(x)
        for k in range(1, self.degree):
            a_next = self._alphas[k + 1]
            p, p_prev = a_next * (2.0 * mapped(p)) - (a_next * self._alphas[k]) * p_prev, p
        return p
