import numpy as np
import pytest

from blocksolve import mmio
from blocksolve.errors import ConfigError
from blocksolve.operators import NullSpaceBasis
from blocksolve.spinmodel import build_basis, build_jsq_block, spin_system


def test_block_roundtrip(tmp_path):
    blk = build_jsq_block(build_basis(4, 0))
    path = tmp_path / "blk.mtx"
    mmio.write_block(path, blk)
    back = mmio.read_block(path, label=blk.label)
    np.testing.assert_allclose(back.to_dense(), blk.to_dense(), atol=1e-14)
    assert back.dim == blk.dim


def test_block_file_is_coordinate_symmetric(tmp_path):
    blk = build_jsq_block(build_basis(2, 0))
    path = tmp_path / "blk.mtx"
    mmio.write_block(path, blk)
    header = path.read_text().splitlines()[0]
    assert "coordinate" in header and "symmetric" in header


def test_basis_roundtrip(tmp_path):
    vec = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 2)))[0]
    basis = NullSpaceBasis(block_label="b", vectors=vec, residual_norm=0.0)
    path = tmp_path / "basis.mtx"
    mmio.write_basis(path, basis)
    header = path.read_text().splitlines()[0]
    assert "array" in header
    back = mmio.read_basis(path)
    np.testing.assert_allclose(back.vectors, vec, atol=1e-14)


def test_missing_file():
    with pytest.raises(ConfigError):
        mmio.read_block("/nonexistent/block.mtx")


def test_malformed_block(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("this is not a matrix market file\n")
    with pytest.raises(ConfigError):
        mmio.read_block(path)


def test_manifest_roundtrip(tmp_path):
    jsq, ham = spin_system(4, periodic=True)
    manifest = mmio.write_blocked_operators(tmp_path / "model", jsq, ham)
    jsq2, ham2 = mmio.read_blocked_operators(manifest)
    assert jsq2.sectors == jsq.sectors
    for a, b in zip(jsq.blocks, jsq2.blocks):
        np.testing.assert_allclose(a.to_dense(), b.to_dense(), atol=1e-14)
    for a, b in zip(ham.blocks, ham2.blocks):
        np.testing.assert_allclose(a.to_dense(), b.to_dense(), atol=1e-14)


def test_manifest_without_hamiltonian(tmp_path):
    jsq, _ = spin_system(2)
    manifest = mmio.write_blocked_operators(tmp_path / "m", jsq)
    jsq2, ham2 = mmio.read_blocked_operators(manifest)
    assert ham2 is None
    assert jsq2.total_dim == 4


def test_manifest_bad_schema(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text('{"schema": "other/v9", "blocks": []}')
    with pytest.raises(ConfigError):
        mmio.read_blocked_operators(path)


def test_manifest_malformed_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        mmio.read_blocked_operators(path)
