"""Core operator and basis containers.

A :class:`SymmetricOperatorBlock` stores one diagonal block of a sparse
symmetric operator as upper-triangle coordinate triplets; the symmetric
mirror is applied whenever the block is densified or converted to CSR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

ORTHONORMALITY_TOL = 1e-10


@dataclass
class SymmetricOperatorBlock:
    """One diagonal block of a sparse symmetric real operator.

    Entries are (row, col, value) triplets with row <= col; the (col, row)
    mirror is implied. Duplicate (row, col) pairs are rejected.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if self.dim <= 0:
            raise ConfigError(f"block dim must be positive, got {self.dim}")
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ConfigError("rows, cols, vals must have equal length")
        if len(self.rows):
            if self.rows.min() < 0 or self.cols.min() < 0 or \
                    self.rows.max() >= self.dim or self.cols.max() >= self.dim:
                raise ConfigError("entry index out of range")
            # store canonical upper triangle
            swap = self.rows > self.cols
            if swap.any():
                r = np.where(swap, self.cols, self.rows)
                c = np.where(swap, self.rows, self.cols)
                self.rows, self.cols = r, c
            keys = self.rows * self.dim + self.cols
            if len(np.unique(keys)) != len(keys):
                raise ConfigError("duplicate (row, col) entry in block")

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.dim, self.dim))
        a[self.rows, self.cols] = self.vals
        off = self.rows != self.cols
        a[self.cols[off], self.rows[off]] = self.vals[off]
        return a

    def to_csr(self) -> sp.csr_matrix:
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.vals, self.vals[off]])
        return sp.csr_matrix((v, (r, c)), shape=(self.dim, self.dim))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_csr() @ x

    def fro_norm(self) -> float:
        off = self.rows != self.cols
        return float(np.sqrt(np.sum(self.vals**2) + np.sum(self.vals[off] ** 2)))

    def gershgorin_bounds(self) -> tuple[float, float]:
        """Enclosing interval for the spectrum from Gershgorin discs."""
        diag = np.zeros(self.dim)
        radius = np.zeros(self.dim)
        on = self.rows == self.cols
        diag[self.rows[on]] = self.vals[on]
        off = ~on
        np.add.at(radius, self.rows[off], np.abs(self.vals[off]))
        np.add.at(radius, self.cols[off], np.abs(self.vals[off]))
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    @classmethod
    def from_dense(cls, a: np.ndarray, label: str = "") -> "SymmetricOperatorBlock":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("dense block must be square")
        if not np.allclose(a, a.T, atol=1e-12 * max(1.0, float(np.abs(a).max(initial=0.0)))):
            raise ConfigError("dense block is not symmetric")
        r, c = np.nonzero(np.triu(a))
        return cls(dim=a.shape[0], rows=r, cols=c, vals=a[r, c], label=label)


@dataclass
class NullSpaceBasis:
    """Orthonormal columns spanning the computed null space of a shifted block."""

    block_label: str
    vectors: np.ndarray  # dim x r, column-orthonormal
    residual_norm: float  # max over columns of ||(A - lambda I) z||_2
    tol_declared: float = np.inf

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ConfigError("basis vectors must be a 2-D array")

    @property
    def r(self) -> int:
        return self.vectors.shape[1]

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def orthonormality_defect(self) -> float:
        if self.r == 0:
            return 0.0
        g = self.vectors.T @ self.vectors - np.eye(self.r)
        return float(np.abs(g).max())


@dataclass
class BlockedOperator:
    """Block-diagonal symmetric operator, one block per ordered sector value."""

    sectors: list[float] = field(default_factory=list)
    blocks: list[SymmetricOperatorBlock] = field(default_factory=list)

    def __post_init__(self):
        if len(self.sectors) != len(self.blocks):
            raise ConfigError("sectors and blocks must align")
        if any(b <= a for a, b in zip(self.sectors, self.sectors[1:])):
            raise ConfigError("sector values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(zip(self.sectors, self.blocks))

    @property
    def total_dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def block_for(self, sector: float) -> SymmetricOperatorBlock:
        for m, b in self:
            if m == sector:
                return b
        raise KeyError(f"no block for sector {sector}")
