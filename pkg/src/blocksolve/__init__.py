"""Block-structured solver toolkit.

Two solver families under one roof:

* fixed total-angular-momentum spectra: per-block null spaces of J^2 - J(J+1) I
  (randomized QR, shift-invert Lanczos, or polynomial-filtered subspace
  iteration), greedy block scheduling, projection, and diagonalization;
* derivative-free bound-constrained least-squares fitting with per-residual
  quadratic models, plus estimation of computational noise in black-box
  simulators.
"""

__version__ = "0.1.0"

from .operators import BlockedOperator, NullSpaceBasis, SymmetricOperatorBlock

__all__ = [
    "BlockedOperator",
    "NullSpaceBasis",
    "SymmetricOperatorBlock",
    "__version__",
]
