import numpy as np
import pytest

from blocksolve.errors import BlockTooLargeError, ConfigError, ShiftSingularError
from blocksolve.operators import SymmetricOperatorBlock
from blocksolve.spectral import (
    SpectralFilter,
    dense_null_oracle,
    pasi_nullspace,
    principal_angles,
    rqr_nullspace,
    sil_nullspace,
)
from blocksolve.spinmodel import build_basis, build_jsq_block, multiplicity, spin_values

ALGOS = {
    "rqr": lambda blk, lam, seed: rqr_nullspace(blk, lam, seed=seed),
    "sil": lambda blk, lam, seed: sil_nullspace(blk, lam, seed=seed),
    "pasi": lambda blk, lam, seed: pasi_nullspace(blk, lam, seed=seed),
}


def diag_block(values, label="diag"):
    return SymmetricOperatorBlock.from_dense(np.diag(np.asarray(values, float)), label)


def spin_block(n, m):
    return build_jsq_block(build_basis(n, m))


# ---------------------------------------------------------------- filters


@pytest.mark.parametrize(
    "target,interval,degree",
    [(0.0, (4.0, 900.0), 25), (0.0, (4.0, 36.0), 8), (12.0, (13.5, 400.0), 50),
     (-3.0, (0.5, 10.0), 1), (5.0, (-40.0, 4.0), 13)],
)
def test_filter_is_one_at_target(target, interval, degree):
    filt = SpectralFilter(target=target, interval=interval, degree=degree)
    assert abs(filt(target) - 1.0) <= 1e-12


@pytest.mark.parametrize(
    "target,interval,degree",
    [(0.0, (4.0, 900.0), 25), (12.0, (13.5, 400.0), 50), (5.0, (-40.0, 4.0), 13)],
)
def test_filter_below_one_on_band(target, interval, degree):
    filt = SpectralFilter(target=target, interval=interval, degree=degree)
    samples = np.linspace(interval[0], interval[1], 1000)
    assert np.abs(filt(samples)).max() < 1.0


def test_filter_target_inside_band_rejected():
    with pytest.raises(ConfigError):
        SpectralFilter(target=5.0, interval=(4.0, 36.0), degree=10)


def test_filter_coefficients_single_chebyshev_term():
    filt = SpectralFilter(target=0.0, interval=(4.0, 36.0), degree=6)
    coeffs = filt.coefficients
    assert coeffs.shape == (7,)
    assert np.all(coeffs[:-1] == 0.0)
    #  top coefficient is 1/T_d(m(target))
    m0 = (2 * 0.0 - 40.0) / 32.0
    t_d = np.polynomial.chebyshev.chebval(m0, [0] * 6 + [1])
    np.testing.assert_allclose(coeffs[-1], 1.0 / t_d, rtol=1e-12)


def test_filter_matrix_apply_matches_scalar_eval():
    vals = np.array([0.0, 6.0, 12.0, 20.0])
    blk = diag_block(vals)
    filt = SpectralFilter(target=0.0, interval=(5.0, 25.0), degree=9)
    x = np.eye(4)
    y = filt.apply(lambda v: blk.to_csr() @ v, x)
    np.testing.assert_allclose(np.diag(y), filt(vals), rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------- rqr


def test_rqr_diagonal_case():
    nb = rqr_nullspace(diag_block([0.0, 2.0, 6.0]), 0.0, rank_tol=1e-10, seed=1)
    assert nb.r == 1
    np.testing.assert_allclose(np.abs(nb.vectors.ravel()), [1, 0, 0], atol=1e-12)


def test_rqr_no_null_space():
    nb = rqr_nullspace(diag_block([2.0, 2.0, 2.0]), 0.0, seed=1)
    assert nb.r == 0
    assert nb.vectors.shape == (3, 0)
    assert nb.residual_norm == 0.0


def test_rqr_four_spin_block():
    # independent oracles: dense eigen-count and C(4,2) - C(4,1) = 2
    blk = spin_block(4, 0)
    nb = rqr_nullspace(blk, 0.0, seed=3)
    assert nb.r == 2
    assert nb.r == dense_null_oracle(blk, 0.0).r
    assert nb.r == multiplicity(4, 0)


def test_rqr_dense_cap():
    with pytest.raises(BlockTooLargeError):
        rqr_nullspace(spin_block(4, 0), 0.0, dense_cap=4)


def test_rqr_determinism():
    blk = spin_block(6, 0)
    a = rqr_nullspace(blk, 2.0, seed=11)
    b = rqr_nullspace(blk, 2.0, seed=11)
    assert a.r == b.r
    assert np.array_equal(a.vectors, b.vectors)


# ---------------------------------------------------------------- sil


def test_sil_diagonal_case():
    nb = sil_nullspace(diag_block([0.0, 2.0, 6.0]), 0.0, shift_offset=0.5, seed=1)
    assert nb.r == 1
    np.testing.assert_allclose(np.abs(nb.vectors.ravel()), [1, 0, 0], atol=1e-10)


def test_sil_empty():
    assert sil_nullspace(diag_block([2.0, 2.0, 6.0]), 0.0, seed=1).r == 0


def test_sil_four_spin_j1():
    blk = spin_block(4, 0)
    nb = sil_nullspace(blk, 2.0, seed=5)
    assert nb.r == 3 == multiplicity(4, 1)


def test_sil_singular_shift_detected():
    # offset 2 puts the shift exactly on the eigenvalue 2
    with pytest.raises(ShiftSingularError):
        sil_nullspace(diag_block([0.0, 2.0, 6.0]), 0.0, shift_offset=2.0, seed=1)


def test_sil_zero_offset_rejected():
    with pytest.raises(ConfigError):
        sil_nullspace(diag_block([0.0, 2.0]), 0.0, shift_offset=0.0)


# ---------------------------------------------------------------- pasi


def test_pasi_diagonal_interior_target():
    nb = pasi_nullspace(diag_block([0.0, 2.0, 6.0, 12.0]), 6.0, seed=1)
    assert nb.r == 1
    np.testing.assert_allclose(np.abs(nb.vectors.ravel()), [0, 0, 1, 0], atol=1e-8)


def test_pasi_six_spin_block():
    blk = spin_block(6, 0)
    nb = pasi_nullspace(blk, 0.0, seed=2)
    assert nb.r == 5 == multiplicity(6, 0)  # C(6,3) - C(6,2) = 20 - 15


def test_pasi_target_outside_supplied_bounds():
    with pytest.raises(ConfigError):
        pasi_nullspace(diag_block([0.0, 2.0]), 6.0, spectrum_bounds=(0.0, 2.0), seed=1)


def test_pasi_whole_space_null():
    nb = pasi_nullspace(diag_block([3.0, 3.0, 3.0]), 3.0, gap=2.0, seed=4)
    assert nb.r == 3


# ---------------------------------------------------------------- oracle


def test_oracle_zero_matrix():
    nb = dense_null_oracle(diag_block([0.0, 0.0]), 0.0)
    assert nb.r == 2
    np.testing.assert_allclose(np.abs(nb.vectors), np.eye(2), atol=1e-14)


def test_oracle_diag_shift():
    assert dense_null_oracle(diag_block([0.0, 2.0]), 2.0).r == 1


def test_oracle_two_spin_singlet():
    blk = spin_block(2, 0)
    nb = dense_null_oracle(blk, 0.0)
    assert nb.r == 1
    expect = np.array([1.0, -1.0]) / np.sqrt(2)
    overlap = abs(float(nb.vectors[:, 0] @ expect))
    np.testing.assert_allclose(overlap, 1.0, atol=1e-12)


def test_oracle_cap():
    with pytest.raises(BlockTooLargeError):
        dense_null_oracle(spin_block(6, 0), 0.0, dense_cap=10)


# ---------------------------------------------------------------- angles


def NullBasis(vectors):
    from blocksolve.operators import NullSpaceBasis

    return NullSpaceBasis(block_label="t", vectors=np.asarray(vectors, float),
                          residual_norm=0.0)


def test_angles_identical():
    nb = dense_null_oracle(spin_block(4, 0), 2.0)
    assert principal_angles(nb, nb).max() <= 1e-12


def test_angles_orthogonal_spans():
    e1 = NullBasis([[1.0], [0.0]])
    e2 = NullBasis([[0.0], [1.0]])
    np.testing.assert_allclose(principal_angles(e1, e2), [np.pi / 2], atol=1e-12)


def test_angles_forty_five_degrees():
    e1 = NullBasis([[1.0], [0.0]])
    mix = NullBasis([[1 / np.sqrt(2)], [1 / np.sqrt(2)]])
    np.testing.assert_allclose(principal_angles(e1, mix), [np.pi / 4], atol=1e-12)


def test_angles_dimension_mismatch():
    with pytest.raises(ConfigError):
        principal_angles(NullBasis(np.eye(2)), NullBasis(np.eye(3)))


# ------------------------------------------------- cross-algorithm checks


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_cross_algorithm_agreement(n):
    from blocksolve.spinmodel import sector_values

    for s in spin_values(n):
        lam = s * (s + 1)
        for m in sector_values(n):
            blk = spin_block(n, m)
            oracle = dense_null_oracle(blk, lam)
            bases = {name: fn(blk, lam, 17) for name, fn in ALGOS.items()}
            rs = {name: b.r for name, b in bases.items()}
            assert all(r == oracle.r for r in rs.values()), (n, s, m, rs, oracle.r)
            names = list(bases)
            for i in range(len(names)):
                for k in range(i + 1, len(names)):
                    angles = principal_angles(bases[names[i]], bases[names[k]])
                    if angles.size:
                        assert angles.max() <= 1e-8


@pytest.mark.parametrize("algo", list(ALGOS))
def test_invariants_orthonormality_and_residual(algo):
    for (n, m, s) in [(4, 0, 0), (6, 0, 1), (6, 1, 2), (5, 0.5, 1.5)]:
        blk = spin_block(n, m)
        nb = ALGOS[algo](blk, s * (s + 1), 23)
        assert nb.orthonormality_defect() <= 1e-10
        if nb.r:
            resid = blk.to_csr() @ nb.vectors - s * (s + 1) * nb.vectors
            assert np.abs(resid).max() <= 1e-8 * blk.fro_norm()


@pytest.mark.parametrize("algo", list(ALGOS))
def test_determinism_across_runs(algo):
    blk = spin_block(6, 1)
    a = ALGOS[algo](blk, 2.0, 31)
    b = ALGOS[algo](blk, 2.0, 31)
    assert a.r == b.r
    angles = principal_angles(a, b)
    if angles.size:
        assert angles.max() <= 1e-12
    assert np.array_equal(a.vectors, b.vectors)


def test_empty_null_space_is_not_an_error():
    blk = spin_block(4, 2)  # stretched block, eigenvalue 6 only
    for fn in ALGOS.values():
        nb = fn(blk, 0.0, 3)
        assert nb.r == 0
        assert nb.residual_norm == 0.0


def test_scaled_spectrum_with_retuned_knobs():
    # scaling the operator shrinks the eigenvalue gaps to 0.8; the default
    # shift offset and filter gap assume gaps of 2 and must be retuned
    base = spin_block(6, 0)
    blk = SymmetricOperatorBlock(
        dim=base.dim, rows=base.rows, cols=base.cols, vals=0.4 * base.vals,
        label="scaled",
    )
    lam = 0.4 * 2.0  # the former eigenvalue 2, J=1
    expect = multiplicity(6, 1)
    oracle = dense_null_oracle(blk, lam)
    assert oracle.r == expect
    a = rqr_nullspace(blk, lam, seed=1)
    b = sil_nullspace(blk, lam, shift_offset=0.2, seed=1)
    c = pasi_nullspace(blk, lam, gap=0.8, seed=1)
    assert a.r == b.r == c.r == expect
    for other in (a, b, c):
        angles = principal_angles(oracle, other)
        assert angles.max() <= 1e-8
