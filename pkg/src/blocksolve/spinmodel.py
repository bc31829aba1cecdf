"""Exactly solvable spin-1/2 test systems.

For n spin-1/2 particles the total-spin-squared operator is block diagonal
over the z-projection M, its eigenvalues are S(S+1) for S = |M| .. n/2, and
the null-space dimension of any block at S(S+1) has a closed combinatorial
form. A Heisenberg chain/ring supplies a Hamiltonian that commutes with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ConfigError
from .operators import BlockedOperator, SymmetricOperatorBlock


@dataclass(frozen=True)
class MSchemeBasis:
    """Ordered occupation-pattern basis of the M sector for n spin-1/2 sites.

    Bit i of a state is 1 when spin i points up; states are sorted ascending
    as integers so matrix entries are reproducible.
    """

    n: int
    m: float
    states: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, state: int) -> int:
        return self.states.index(state)


def _n_up(n: int, m: float) -> int:
    k = n / 2 + m
    k_int = round(k)
    if abs(k - k_int) > 1e-9 or k_int < 0 or k_int > n:
        raise ConfigError(f"infeasible projection M={m} for n={n}")
    return k_int


def build_basis(n: int, m: float) -> MSchemeBasis:
    """All n-bit patterns with (#up - #down)/2 = m, ascending as integers."""
    if n < 1:
        raise ConfigError("need at least one spin")
    k = _n_up(n, m)
    states = [s for s in range(1 << n) if bin(s).count("1") == k]
    return MSchemeBasis(n=n, m=m, states=tuple(states))


def sector_values(n: int) -> list[float]:
    """All z-projections M, increasing (half-integers when n is odd)."""
    return [(-n + 2 * k) / 2 for k in range(n + 1)]


def spin_values(n: int) -> list[float]:
    """All attainable total spins S, increasing."""
    start = 0.0 if n % 2 == 0 else 0.5
    out = []
    s = start
    while s <= n / 2 + 1e-9:
        out.append(s)
        s += 1.0
    return out


def multiplicity(n: int, s: float) -> int:
    """Number of spin-S multiplets of n spin-1/2 particles.

    Equals C(n, n/2 - S) - C(n, n/2 - S - 1) and therefore the null-space
    dimension of the S(S+1) shift in any sector block with |M| <= S.
    """
    k = n / 2 - s
    k_int = round(k)
    if abs(k - k_int) > 1e-9 or k_int < 0 or s < 0:
        raise ConfigError(f"invalid total spin S={s} for n={n}")
    second = comb(n, k_int - 1) if k_int - 1 >= 0 else 0
    return comb(n, k_int) - second


def build_jsq_block(basis: MSchemeBasis) -> SymmetricOperatorBlock:
    """Total-spin-squared operator restricted to one M sector.

    Diagonal entry for a pattern: 3n/4 + (aligned_pairs - antialigned_pairs)/2;
    off-diagonal entry 1 between patterns differing by one up-down swap.
    """
    n, states = basis.n, basis.states
    index = {s: i for i, s in enumerate(states)}
    k_up = _n_up(n, basis.m)
    k_dn = n - k_up
    aligned = comb(k_up, 2) + comb(k_dn, 2)
    anti = comb(n, 2) - aligned
    diag_val = 3 * n / 4 + (aligned - anti) / 2

    rows, cols, vals = [], [], []
    for i, s in enumerate(states):
        rows.append(i)
        cols.append(i)
        vals.append(diag_val)
        for a in range(n):
            for b in range(a + 1, n):
                if ((s >> a) & 1) != ((s >> b) & 1):
                    j = index[s ^ (1 << a) ^ (1 << b)]
                    if j > i:
                        rows.append(i)
                        cols.append(j)
                        vals.append(1.0)
    return SymmetricOperatorBlock(
        dim=len(states), rows=np.array(rows), cols=np.array(cols),
        vals=np.array(vals), label=f"n{n}/M{basis.m:g}",
    )


def _bonds(n: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    return bonds


def build_heisenberg(basis: MSchemeBasis, couplings, periodic: bool = False) -> SymmetricOperatorBlock:
    """Heisenberg H = sum_b J_b (s_i . s_j) restricted to the M sector.

    Couplings align with the chain bonds (0,1)..(n-2,n-1), plus (n-1,0) when
    periodic. Commutes with the sector's spin-squared block.
    """
    n, states = basis.n, basis.states
    bonds = _bonds(n, periodic)
    couplings = list(np.asarray(couplings, dtype=float))
    if len(couplings) != len(bonds):
        raise ConfigError(
            f"expected {len(bonds)} couplings for n={n} "
            f"{'ring' if periodic else 'chain'}, got {len(couplings)}"
        )
    index = {s: i for i, s in enumerate(states)}
    entries: dict[tuple[int, int], float] = {}

    def add(i, j, v):
        if v == 0.0:
            return
        key = (i, j) if i <= j else (j, i)
        entries[key] = entries.get(key, 0.0) + v

    for i, s in enumerate(states):
        for (a, b), j_ab in zip(bonds, couplings):
            same = ((s >> a) & 1) == ((s >> b) & 1)
            add(i, i, j_ab * (0.25 if same else -0.25))
            if not same:
                j = index[s ^ (1 << a) ^ (1 << b)]
                if j > i:  # each unordered state pair enters once per bond
                    add(i, j, j_ab * 0.5)

    if entries:
        keys = sorted(entries)
        rows = np.array([k[0] for k in keys])
        cols = np.array([k[1] for k in keys])
        vals = np.array([entries[k] for k in keys])
    else:
        rows = cols = np.array([], dtype=np.int64)
        vals = np.array([], dtype=np.float64)
    return SymmetricOperatorBlock(
        dim=len(states), rows=rows, cols=cols, vals=vals,
        label=f"n{n}/M{basis.m:g}/H",
    )


def spin_system(n: int, couplings=None, periodic: bool = False):
    """Blocked (jsq, hamiltonian) pair over all M sectors, increasing M."""
    bonds = _bonds(n, periodic)
    if couplings is None:
        couplings = [1.0] * len(bonds)
    sectors = sector_values(n)
    bases = [build_basis(n, m) for m in sectors]
    jsq = BlockedOperator(sectors=list(sectors), blocks=[build_jsq_block(b) for b in bases])
    ham = BlockedOperator(
        sectors=list(sectors),
        blocks=[build_heisenberg(b, couplings, periodic) for b in bases],
    )
    return jsq, ham
