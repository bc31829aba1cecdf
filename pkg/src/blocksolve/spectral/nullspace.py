"""Null-space computation for shifted symmetric blocks.

Three routes to an orthonormal basis of {z : (A - lambda I) z = 0}:

* :func:`rqr_nullspace` densifies the block and uses two unpivoted QR
  factorizations (one to draw a random orthogonal mixing, one on the mixed
  operator); the trailing left-orthogonal columns span the null space.
* :func:`sil_nullspace` runs Lanczos on the inverse of the shifted block,
  locking converged null vectors and restarting so degenerate null spaces
  are recovered in full.
* :func:`pasi_nullspace` runs subspace iteration accelerated by a Chebyshev
  filter of the squared shifted block, growing the block size adaptively
  until a converged non-null vector certifies the count.

:func:`dense_null_oracle` is the reference path (full eigendecomposition)
and :func:`principal_angles` compares the computed subspaces.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from ..errors import (
    BlockTooLargeError,
    ConfigError,
    ConvergenceError,
    NumericalError,
    ShiftSingularError,
)
from ..operators import NullSpaceBasis, SymmetricOperatorBlock
from .filters import SpectralFilter

DENSE_CAP_DEFAULT = 4096


def _empty_basis(label: str, dim: int, tol: float) -> NullSpaceBasis:
    return NullSpaceBasis(
        block_label=label, vectors=np.zeros((dim, 0)), residual_norm=0.0,
        tol_declared=tol,
    )


def _column_residuals(a_csr, lam: float, v: np.ndarray) -> float:
    if v.shape[1] == 0:
        return 0.0
    r = a_csr @ v - lam * v
    return float(np.max(np.linalg.norm(r, axis=0)))


def rqr_nullspace(
    block: SymmetricOperatorBlock,
    lam: float,
    rank_tol: float | None = None,
    seed: int = 0,
    dense_cap: int = DENSE_CAP_DEFAULT,
) -> NullSpaceBasis:
    """Randomized unpivoted-QR null space of (A - lam I).

    The shifted block is mixed by a Haar-random orthogonal matrix (QR of a
    Gaussian), then factored by a second unpivoted QR. The random mixing
    makes the unpivoted triangular factor rank-revealing with overwhelming
    probability; the rank cut is ``rank_tol`` times the largest diagonal
    magnitude of the triangular factor. Deterministic for a fixed seed.
    """
    dim = block.dim
    if dim > dense_cap:
        raise BlockTooLargeError(dim, dense_cap)
    if rank_tol is not None and rank_tol <= 0:
        raise ConfigError("rank_tol must be positive")
    shifted = block.to_dense()
    shifted[np.diag_indices(dim)] -= lam
    if rank_tol is None:
        rank_tol = dim * np.finfo(float).eps * np.linalg.norm(shifted, "fro")

    a_csr = block.to_csr()
    fro_a = block.fro_norm()
    accept = 1e-8 * max(fro_a, 1e-300)
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x52515233])
    for _ in range(3):
        mixing, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        q_full, r_fact = np.linalg.qr(shifted @ mixing.T, mode="complete")
        diag = np.abs(np.diag(r_fact))
        cut = rank_tol * diag.max(initial=0.0)
        r = int(np.sum(diag <= cut))
        if r == 0:
            return _empty_basis(block.label, dim, accept)
        vectors = q_full[:, dim - r:]
        residual = _column_residuals(a_csr, lam, vectors)
        if residual <= accept:
            return NullSpaceBasis(
                block_label=block.label, vectors=vectors,
                residual_norm=residual, tol_declared=accept,
            )
        # rank mis-detection is possible in principle; remix and retry
    raise NumericalError(
        f"randomized QR null space failed residual check on block {block.label!r}"
    )


def dense_null_oracle(
    block: SymmetricOperatorBlock,
    lam: float,
    tol: float = 1e-8,
    dense_cap: int = DENSE_CAP_DEFAULT,
) -> NullSpaceBasis:
    """Reference null space via full symmetric eigendecomposition."""
    if block.dim > dense_cap:
        raise BlockTooLargeError(block.dim, dense_cap)
    vals, vecs = np.linalg.eigh(block.to_dense())
    sel = np.abs(vals - lam) <= tol
    vectors = vecs[:, sel]
    residual = _column_residuals(block.to_csr(), lam, vectors)
    return NullSpaceBasis(
        block_label=block.label, vectors=vectors,
        residual_norm=residual, tol_declared=tol,
    )


def principal_angles(basis1: NullSpaceBasis, basis2: NullSpaceBasis) -> np.ndarray:
    """Canonical angles between two bases, in radians, descending.

    Uses the sine-corrected formulation (scipy) rather than plain
    arccos of singular values of V1^T V2: the plain formula cannot resolve
    angles below ~1e-7 in double precision, which the agreement tolerances
    here require.
    """
    if basis1.dim != basis2.dim:
        raise ConfigError(
            f"basis dimension mismatch: {basis1.dim} vs {basis2.dim}"
        )
    for b in (basis1, basis2):
        if b.r and b.orthonormality_defect() > 1e-8:
            raise ConfigError("principal_angles requires orthonormal bases")
    if min(basis1.r, basis2.r) == 0:
        return np.zeros(0)
    angles = scipy.linalg.subspace_angles(basis1.vectors, basis2.vectors)
    return np.clip(angles, 0.0, np.pi / 2)


# ---------------------------------------------------------------------------
# shift-invert Lanczos


def _lanczos_sweep(solve, dim, locked, rng, theta_star, radius, tol_op, max_steps):
    """One deflated Lanczos sweep on the inverted shifted operator.

    Returns (new_null_vectors, steps_used, concluded) where ``concluded``
    means the sweep gave evidence that no null directions remain.
    """
    v = rng.standard_normal(dim)
    if locked is not None and locked.shape[1]:
        v -= locked @ (locked.T @ v)
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return [], 0, True
    v /= nv

    basis = [v]
    alphas: list[float] = []
    betas: list[float] = []
    steps = 0
    for j in range(max_steps):
        w = solve(basis[j])
        steps += 1
        if locked is not None and locked.shape[1]:
            w -= locked @ (locked.T @ w)
        if j > 0:
            w -= betas[j - 1] * basis[j - 1]
        alphas.append(float(basis[j] @ w))
        w -= alphas[j] * basis[j]
        vmat = np.column_stack(basis)
        for _ in range(2):  # full reorthogonalization
            w -= vmat @ (vmat.T @ w)
            if locked is not None and locked.shape[1]:
                w -= locked @ (locked.T @ w)
        beta = float(np.linalg.norm(w))
        betas.append(beta)
        breakdown = beta < 1e-12 * max(1.0, max(abs(a) for a in alphas))
        exhausted = breakdown or len(alphas) == dim
        if not exhausted and j < max_steps - 1:
            basis.append(w / beta)
        theta, s = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas[:-1]))
        resid = np.abs(betas[-1] * s[-1, :])
        if exhausted:
            resid = np.zeros_like(resid)
        in_cluster = np.abs(theta - theta_star) < radius
        conv = resid <= tol_op
        if np.any(in_cluster & conv) and (exhausted or np.all(conv[in_cluster])):
            vecs = [vmat @ s[:, i] for i in np.nonzero(in_cluster & conv)[0]]
            return vecs, steps, False
        if not np.any(in_cluster):
            top = int(np.argmax(np.abs(theta)))
            if exhausted or (j >= 7 and conv[top]):
                return [], steps, True
        if exhausted:
            # Krylov space is exact yet no cluster member: nothing left
            return [], steps, True
    return [], steps, False


def sil_nullspace(
    block: SymmetricOperatorBlock,
    lam: float,
    shift_offset: float = 0.5,
    k_max: int | None = None,
    tol: float = 1e-12,
    seed: int = 0,
) -> NullSpaceBasis:
    """Shift-invert Lanczos null space of (A - lam I).

    Factors (A - (lam + shift_offset) I) once and iterates on its inverse,
    where the null cluster sits at -1/shift_offset, well separated from the
    rest of the inverted spectrum whenever eigenvalue gaps exceed the
    offset. Converged null vectors are locked and the iteration restarts on
    the deflated operator until no null direction remains, so degenerate
    null spaces come out complete. Deterministic for a fixed seed.
    """
    if shift_offset == 0.0:
        raise ConfigError("shift_offset must be nonzero: the exact shift is singular")
    dim = block.dim
    sigma = lam + shift_offset
    shifted = (block.to_csr() - sigma * sp.identity(dim, format="csr")).tocsc()
    try:
        lu = scipy.sparse.linalg.splu(shifted)
    except RuntimeError as exc:
        raise ShiftSingularError(
            f"shift {sigma} hit an eigenvalue of block {block.label!r}; "
            f"retry with a new offset"
        ) from exc

    theta_star = -1.0 / shift_offset
    radius = abs(theta_star) / 2.0
    fro_a = block.fro_norm()
    accept = tol * max(fro_a, 1e-300)
    budget = k_max if k_max is not None else 40 * dim + 200
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x53494C21])

    locked = np.zeros((dim, 0))
    used = 0
    while True:
        room = min(dim - locked.shape[1], budget - used)
        if room <= 0:
            if dim - locked.shape[1] <= 0:
                break
            raise ConvergenceError(
                f"shift-invert Lanczos hit the {budget}-step budget on block "
                f"{block.label!r} with {locked.shape[1]} null vectors found",
                partial_count=locked.shape[1],
            )
        # the sweep only needs to identify converged cluster members; the
        # polish below enforces the declared residual, so its threshold can
        # stay clear of the floating-point floor
        vecs, steps, concluded = _lanczos_sweep(
            lu.solve, dim, locked, rng, theta_star, radius,
            tol_op=max(tol, 1e-11), max_steps=room,
        )
        used += steps
        if vecs:
            locked = np.linalg.qr(np.column_stack([locked] + vecs))[0]
        elif concluded:
            break
        elif used >= budget:
            raise ConvergenceError(
                f"shift-invert Lanczos hit the {budget}-step budget on block "
                f"{block.label!r} with {locked.shape[1]} null vectors found",
                partial_count=locked.shape[1],
            )

    if locked.shape[1] == 0:
        return _empty_basis(block.label, dim, accept)

    # inverse iteration polish: the factorization amplifies the null cluster
    a_csr = block.to_csr()
    vectors = locked
    residual = _column_residuals(a_csr, lam, vectors)
    for _ in range(40):
        if residual <= accept:
            break
        vectors = np.linalg.qr(lu.solve(vectors))[0]
        residual = _column_residuals(a_csr, lam, vectors)
    else:
        raise NumericalError(
            f"shift-invert polish stalled on block {block.label!r} "
            f"(residual {residual:.3e})"
        )
    return NullSpaceBasis(
        block_label=block.label, vectors=vectors,
        residual_norm=residual, tol_declared=accept,
    )


# ---------------------------------------------------------------------------
# polynomial-filtered subspace iteration


def pasi_nullspace(
    block: SymmetricOperatorBlock,
    lam: float,
    spectrum_bounds: tuple[float, float] | None = None,
    degree: int = 50,
    block_size: int = 8,
    max_iters: int = 300,
    tol: float = 1e-12,
    seed: int = 0,
    gap: float = 2.0,
) -> NullSpaceBasis:
    """Filtered-subspace-iteration null space of (A - lam I).

    Builds a Chebyshev filter in the squared shifted variable t = (w-lam)^2
    that equals one at t=0 and is damped on [gap^2, max distance^2], then
    runs subspace iteration on the filtered operator with Rayleigh-Ritz
    extraction. The iterate block doubles whenever every current vector has
    converged as a null vector, and the count is certified once a converged
    vector with Ritz value away from ``lam`` appears.
    """
    dim = block.dim
    bounds_supplied = spectrum_bounds is not None
    if spectrum_bounds is None:
        spectrum_bounds = block.gershgorin_bounds()
    lo, hi = spectrum_bounds
    pad = 1e-9 * max(1.0, abs(lo), abs(hi))
    if gap <= 0:
        raise ConfigError("gap must be positive")

    a_csr = block.to_csr()
    fro_a = block.fro_norm()
    accept = tol * max(fro_a, 1e-300)
    if not (lo - pad <= lam <= hi + pad):
        if bounds_supplied:
            raise ConfigError(
                f"target {lam} outside declared spectrum bounds [{lo}, {hi}]"
            )
        # Gershgorin bounds enclose the spectrum, so a target outside them
        # is certainly not an eigenvalue: the null space is empty
        return _empty_basis(block.label, dim, accept)
    band_lo = gap * gap
    band_hi = max((hi - lam) ** 2, (lo - lam) ** 2)

    if band_hi < band_lo * (1.0 - 1e-12):
        # the whole declared spectrum lies within one gap of the target:
        # the block is either entirely null or the bounds are inconsistent
        vectors = np.eye(dim)
        residual = _column_residuals(a_csr, lam, vectors)
        if residual <= accept:
            return NullSpaceBasis(
                block_label=block.label, vectors=vectors,
                residual_norm=residual, tol_declared=accept,
            )
        raise ConfigError(
            f"spectrum bounds [{lo}, {hi}] leave no damped band around {lam}"
        )
    if band_hi <= band_lo * (1.0 + 1e-12):
        # unwanted spectrum collapses to one point; give the filter a band
        band_hi = band_lo * 1.5

    filt = SpectralFilter(
        target=0.0, interval=(band_lo, band_hi), degree=max(1, degree // 2),
    )

    def squared_shifted(x):
        y = a_csr @ x - lam * x
        return a_csr @ y - lam * y

    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x50415349])
    bs = min(max(block_size, 1), dim)
    x = np.linalg.qr(rng.standard_normal((dim, bs)))[0]
    # worst-case damping of the band per filter application
    damping = abs(float(filt.coefficients[-1]))

    def no_null_remains(null_vectors):
        """Completeness certificate: the filter preserves null components
        exactly, so a filtered random vector orthogonal to the captured null
        vectors decays to nothing only if no null direction is missing."""
        if damping >= 0.9:
            return False
        n_apply = min(200, int(np.ceil(np.log(1e-7) / np.log(damping))) + 1)
        for _ in range(2):
            z = rng.standard_normal(dim)
            if null_vectors.shape[1]:
                z -= null_vectors @ (null_vectors.T @ z)
            nz = np.linalg.norm(z)
            if nz < 1e-8:
                continue
            z /= nz
            for _ in range(n_apply):
                z = filt.apply(squared_shifted, z)
                if null_vectors.shape[1]:
                    z -= null_vectors @ (null_vectors.T @ z)
            if np.linalg.norm(z) > 1e-6:
                return False
        return True

    last_converged = 0
    for _ in range(max_iters):
        x = filt.apply(squared_shifted, x)
        x = np.linalg.qr(x)[0]
        ax = a_csr @ x
        ritz_vals, rot = np.linalg.eigh((x.T @ ax + ax.T @ x) / 2.0)
        x = x @ rot
        ax = ax @ rot
        resid = np.linalg.norm(ax - x * ritz_vals, axis=0)
        in_window = np.abs(ritz_vals - lam) <= gap / 2.0
        null_mask = in_window & (resid <= accept)
        last_converged = int(np.sum(null_mask))
        if last_converged == bs and bs < dim:
            # saturated with converged null vectors: the space may be larger
            grow = min(2 * bs, dim) - bs
            extra = rng.standard_normal((dim, grow))
            extra -= x @ (x.T @ extra)
            x = np.linalg.qr(np.column_stack([x, extra]))[0]
            bs = x.shape[1]
            continue
        vectors = x[:, null_mask]
        if vectors.shape[1] == dim or no_null_remains(vectors):
            return NullSpaceBasis(
                block_label=block.label, vectors=vectors,
                residual_norm=_column_residuals(a_csr, lam, vectors),
                tol_declared=accept,
            )
    raise ConvergenceError(
        f"filtered subspace iteration did not converge in {max_iters} sweeps "
        f"on block {block.label!r}",
        partial_count=last_converged,
    )
