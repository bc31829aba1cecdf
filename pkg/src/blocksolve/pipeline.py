"""End-to-end fixed total-angular-momentum spectrum computation.

Per sector block: compute the null space of (J^2 - J(J+1) I), project the
Hamiltonian block into it, diagonalize the projected operator, and map
eigenvectors back to the original basis. A dense full-spectrum filter over
expectation values of J^2 provides the reference answer.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError, NoStatesError, NumericalError
from .operators import BlockedOperator, NullSpaceBasis
from .scheduling import Assignment, cyclic_assign, greedy_assign, loads_for_blocks
from .spectral import dense_null_oracle, pasi_nullspace, rqr_nullspace, sil_nullspace

ALGOS = ("rqr", "sil", "pasi")


@dataclass(frozen=True)
class NullspaceOptions:
    """Per-algorithm knobs shared by the pipeline entry points."""

    tol: float = 1e-12
    rank_tol: float | None = None
    shift_offset: float = 0.5
    k_max: int | None = None
    degree: int = 50
    block_size: int = 8
    max_iters: int = 300
    gap: float = 2.0
    dense_cap: int = 4096


def compute_nullspace(block, lam, algo, seed=0, opts=None) -> NullSpaceBasis:
    opts = opts or NullspaceOptions()
    if algo == "rqr":
        return rqr_nullspace(block, lam, rank_tol=opts.rank_tol, seed=seed,
                             dense_cap=opts.dense_cap)
    if algo == "sil":
        return sil_nullspace(block, lam, shift_offset=opts.shift_offset,
                             k_max=opts.k_max, tol=opts.tol, seed=seed)
    if algo == "pasi":
        return pasi_nullspace(block, lam, degree=opts.degree,
                              block_size=opts.block_size, max_iters=opts.max_iters,
                              tol=opts.tol, seed=seed, gap=opts.gap)
    if algo == "oracle":
        return dense_null_oracle(block, lam, tol=1e-8, dense_cap=opts.dense_cap)
    raise ConfigError(f"unknown null-space algorithm {algo!r}")


def build_projector(
    jsq: BlockedOperator,
    j: float,
    algo: str,
    assignment: Assignment | None = None,
    opts: NullspaceOptions | None = None,
    workers: int | None = None,
    seed: int = 0,
) -> list[NullSpaceBasis]:
    """One null-space basis per sector block at lambda = j(j+1).

    Work runs on a thread pool; the result is assembled in block order and
    per-block seeds derive from the block index, so it is identical for any
    worker count. Raises when no block holds states of the requested j.
    """
    if j < 0:
        raise ConfigError(f"total angular momentum must be nonnegative, got {j}")
    lam = j * (j + 1)
    opts = opts or NullspaceOptions()
    pool_size = workers or (assignment.n_procs if assignment else 1)

    def task(idx_block):
        idx, block = idx_block
        block_seed = (seed * 1_000_003 + idx) & 0x7FFFFFFF
        try:
            return compute_nullspace(block, lam, algo, seed=block_seed, opts=opts)
        except (ConvergenceError, NumericalError) as exc:
            raise NumericalError(f"block {block.label!r}: {exc}") from exc

    items = list(enumerate(jsq.blocks))
    if pool_size <= 1:
        bases = [task(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            bases = list(pool.map(task, items))
    if sum(b.r for b in bases) == 0:
        raise NoStatesError(f"no states with requested J={j:g}")
    return bases


@dataclass
class ProjectedHamiltonian:
    """Dense symmetric Hamiltonian in the fixed-j invariant subspace."""

    matrix: np.ndarray
    j: float
    sectors: list[float]
    labels: list[str]
    block_r: list[int]
    bases: list[NullSpaceBasis] = field(repr=False, default_factory=list)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def offsets(self) -> list[int]:
        out = [0]
        for r in self.block_r:
            out.append(out[-1] + r)
        return out


def project_hamiltonian(
    ham: BlockedOperator, bases: list[NullSpaceBasis], j: float = float("nan")
) -> ProjectedHamiltonian:
    """Assemble Z^T H Z block by block (H and the bases share sector order)."""
    if len(ham.blocks) != len(bases):
        raise ConfigError(
            f"operator has {len(ham.blocks)} blocks but {len(bases)} bases given"
        )
    pieces = []
    for block, basis in zip(ham.blocks, bases):
        if block.dim != basis.dim:
            raise ConfigError(
                f"block {block.label!r} dim {block.dim} != basis dim {basis.dim}"
            )
        if basis.r == 0:
            pieces.append(np.zeros((0, 0)))
            continue
        hz = block.to_csr() @ basis.vectors
        hp = basis.vectors.T @ hz
        pieces.append((hp + hp.T) / 2.0)
    total = sum(p.shape[0] for p in pieces)
    matrix = np.zeros((total, total))
    off = 0
    for p in pieces:
        r = p.shape[0]
        matrix[off:off + r, off:off + r] = p
        off += r
    return ProjectedHamiltonian(
        matrix=matrix, j=j, sectors=list(ham.sectors),
        labels=[b.label for b in ham.blocks], block_r=[b.r for b in bases],
        bases=list(bases),
    )


def lanczos_lowest(matrix: np.ndarray, k: int, tol: float = 1e-10, seed: int = 0):
    """k lowest eigenpairs of a dense symmetric matrix by Lanczos.

    Full reorthogonalization plus lock-and-restart deflation, so degenerate
    eigenvalues are recovered with their multiplicity. Deterministic for a
    fixed seed. Returns (values ascending, vectors as columns).
    """
    matrix = np.asarray(matrix, dtype=float)
    dim = matrix.shape[0]
    if k > dim:
        raise ConfigError(f"requested {k} eigenpairs from a {dim}-dim operator")
    if k == 0:
        return np.zeros(0), np.zeros((dim, 0))
    scale = np.linalg.norm(matrix, "fro")
    accept = tol * max(scale, 1e-300)
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x4C414E43])

    locked_vals: list[float] = []
    locked = np.zeros((dim, 0))
    restarts = 0
    while len(locked_vals) < k:
        if restarts > k + 10:
            raise ConvergenceError(
                f"Lanczos failed to lock {k} eigenpairs in {restarts} restarts",
                partial_count=len(locked_vals),
            )
        restarts += 1
        room = dim - locked.shape[1]
        v = rng.standard_normal(dim)
        v -= locked @ (locked.T @ v)
        nv = np.linalg.norm(v)
        if nv < 1e-12 or room == 0:
            break
        v /= nv
        basis = [v]
        alphas: list[float] = []
        betas: list[float] = []
        new_pair = None
        for j_step in range(room):
            w = matrix @ basis[j_step]
            if j_step > 0:
                w -= betas[j_step - 1] * basis[j_step - 1]
            alphas.append(float(basis[j_step] @ w))
            w -= alphas[j_step] * basis[j_step]
            vmat = np.column_stack(basis)
            for _ in range(2):
                w -= vmat @ (vmat.T @ w)
                if locked.shape[1]:
                    w -= locked @ (locked.T @ w)
            beta = float(np.linalg.norm(w))
            betas.append(beta)
            breakdown = beta < 1e-13 * max(1.0, scale)
            exhausted = breakdown or len(alphas) == room
            if not exhausted:
                basis.append(w / beta)
            theta, s = scipy.linalg.eigh_tridiagonal(
                np.array(alphas), np.array(betas[:-1])
            )
            # only the lowest level is safe to lock: deflated copies of it
            # may still sit below every other converged Ritz value
            if exhausted or abs(betas[-1] * s[-1, 0]) <= accept:
                y = vmat @ s[:, 0]
                resid = float(np.linalg.norm(matrix @ y - theta[0] * y))
                if resid <= accept or exhausted:
                    new_pair = (float(theta[0]), y)
                    break
        if new_pair is None:
            continue
        locked_vals.append(new_pair[0])
        locked = np.linalg.qr(np.column_stack([locked, new_pair[1]]))[0]

    if len(locked_vals) < k:
        raise ConvergenceError(
            f"Lanczos exhausted the space with only {len(locked_vals)} of {k} pairs",
            partial_count=len(locked_vals),
        )
    order = np.argsort(locked_vals[:])
    vals = np.array(locked_vals)[order][:k]
    vecs = locked[:, order][:, :k]
    return vals, vecs


def backtransform(bases: list[NullSpaceBasis], y: np.ndarray) -> np.ndarray:
    """Map a projected-space vector back to the original basis, block by block."""
    total_r = sum(b.r for b in bases)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != total_r:
        raise ConfigError(f"projected vector length {y.shape[0]} != total rank {total_r}")
    out = np.zeros(sum(b.dim for b in bases))
    off_r = off_d = 0
    for b in bases:
        if b.r:
            out[off_d:off_d + b.dim] = b.vectors @ y[off_r:off_r + b.r]
        off_r += b.r
        off_d += b.dim
    return out


@dataclass
class SpectrumResult:
    """Fixed-j spectrum: energies, states, and per-state residual checks."""

    j: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None  # projected space, one column per state
    wavefunctions: np.ndarray  # original basis (all blocks concatenated)
    h_residuals: np.ndarray
    jsq_residuals: np.ndarray
    block_r: list[int]
    total_count: int


def _state_residuals(ham, jsq, lam, v):
    hv = _blockwise_apply(ham, v)
    jv = _blockwise_apply(jsq, v)
    energy = float(v @ hv)
    return energy, float(np.linalg.norm(hv - energy * v)), float(abs(v @ jv - lam))


def _blockwise_apply(op: BlockedOperator, v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    off = 0
    for block in op.blocks:
        out[off:off + block.dim] = block.to_csr() @ v[off:off + block.dim]
        off += block.dim
    return out


def solve_fixedj(
    jsq: BlockedOperator,
    ham: BlockedOperator,
    j: float,
    algo: str = "pasi",
    k: int = 5,
    n_procs: int = 1,
    policy: str = "greedy",
    workers: int | None = None,
    seed: int = 0,
    opts: NullspaceOptions | None = None,
    eig_tol: float = 1e-11,
):
    """Full pipeline; returns (SpectrumResult, bases, assignment, timings)."""
    if policy not in ("greedy", "cyclic"):
        raise ConfigError(f"unknown scheduling policy {policy!r}")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    loads = loads_for_blocks([b.dim for b in jsq.blocks])
    if policy == "greedy":
        assignment = greedy_assign(loads, n_procs)
    else:
        assignment = cyclic_assign(loads, n_procs)
    timings["schedule"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    bases = build_projector(jsq, j, algo, assignment, opts, workers, seed)
    timings["nullspace"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    projected = project_hamiltonian(ham, bases, j=j)
    timings["project"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lam = j * (j + 1)
    offsets = projected.offsets()
    total = projected.dim
    k_eff = min(k, total)
    merged = []  # (energy, block index, local projected vector)
    for bi, r in enumerate(projected.block_r):
        if r == 0:
            continue
        sub = projected.matrix[offsets[bi]:offsets[bi] + r, offsets[bi]:offsets[bi] + r]
        vals, vecs = lanczos_lowest(sub, min(k_eff, r), tol=eig_tol,
                                    seed=(seed * 7 + bi) & 0x7FFFFFFF)
        for i, val in enumerate(vals):
            merged.append((float(val), bi, vecs[:, i]))
    merged.sort(key=lambda t: (t[0], t[1]))
    merged = merged[:k_eff]

    eigenvalues = np.array([e for e, _, _ in merged])
    eigenvectors = np.zeros((total, len(merged)))
    waves = np.zeros((jsq.total_dim, len(merged)))
    h_res = np.zeros(len(merged))
    j_res = np.zeros(len(merged))
    for col, (energy, bi, ylocal) in enumerate(merged):
        y = np.zeros(total)
        y[offsets[bi]:offsets[bi] + projected.block_r[bi]] = ylocal
        eigenvectors[:, col] = y
        v = backtransform(bases, y)
        nv = np.linalg.norm(v)
        if nv > 0:
            v = v / nv
        waves[:, col] = v
        _, h_res[col], j_res[col] = _state_residuals(ham, jsq, lam, v)
    timings["solve"] = time.perf_counter() - t0

    result = SpectrumResult(
        j=j, eigenvalues=eigenvalues, eigenvectors=eigenvectors,
        wavefunctions=waves, h_residuals=h_res, jsq_residuals=j_res,
        block_r=list(projected.block_r), total_count=total,
    )
    return result, bases, assignment, timings


def brute_force_filter(
    ham: BlockedOperator,
    jsq: BlockedOperator,
    j: float,
    k_many: int | None = None,
    tol: float = 1e-8,
    dense_cap: int = 4096,
) -> SpectrumResult:
    """Reference fixed-j spectrum: diagonalize everything, keep matching states.

    Each Hamiltonian block is densely diagonalized; within each degenerate
    eigenspace the J^2 operator is diagonalized first so the selection by
    |<v|J^2|v> - j(j+1)| <= tol is well defined even for symmetric couplings.
    """
    if ham.total_dim > dense_cap:
        raise ConfigError(
            f"total dimension {ham.total_dim} exceeds dense cap {dense_cap}"
        )
    lam = j * (j + 1)
    found = []  # (energy, block index, in-block vector)
    for bi, (hblk, jblk) in enumerate(zip(ham.blocks, jsq.blocks)):
        w, v = np.linalg.eigh(hblk.to_dense())
        jd = jblk.to_dense()
        deg_tol = 1e-9 * max(1.0, float(np.abs(w).max(initial=0.0)))
        start = 0
        while start < len(w):
            stop = start + 1
            while stop < len(w) and w[stop] - w[stop - 1] <= deg_tol:
                stop += 1
            group = v[:, start:stop]
            jsub = group.T @ (jd @ group)
            jvals, jrot = np.linalg.eigh((jsub + jsub.T) / 2.0)
            rotated = group @ jrot
            for i, q in enumerate(jvals):
                if abs(q - lam) <= tol:
                    energy = float(w[start:stop].mean()) if stop - start > 1 else float(w[start])
                    found.append((energy, bi, rotated[:, i]))
            start = stop
    found.sort(key=lambda t: (t[0], t[1]))
    total_found = len(found)
    if k_many is not None:
        found = found[:k_many]

    dims = [b.dim for b in ham.blocks]
    offs = np.concatenate([[0], np.cumsum(dims)])
    waves = np.zeros((ham.total_dim, len(found)))
    h_res = np.zeros(len(found))
    j_res = np.zeros(len(found))
    energies = np.zeros(len(found))
    for col, (energy, bi, vloc) in enumerate(found):
        vfull = np.zeros(ham.total_dim)
        vfull[offs[bi]:offs[bi] + dims[bi]] = vloc
        waves[:, col] = vfull
        energies[col], h_res[col], j_res[col] = _state_residuals(ham, jsq, lam, vfull)
    return SpectrumResult(
        j=j, eigenvalues=energies, eigenvectors=None, wavefunctions=waves,
        h_residuals=h_res, jsq_residuals=j_res,
        block_r=[0] * len(ham.blocks), total_count=total_found,
    )
