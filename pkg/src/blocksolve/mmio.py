"""Matrix Market and block-manifest I/O.

Operator blocks travel as Matrix Market coordinate symmetric files, null
bases as Matrix Market dense array files, and a JSON manifest ties a
block-diagonal operator together (sector values, dims, labels, file paths).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ConfigError
from .operators import BlockedOperator, NullSpaceBasis, SymmetricOperatorBlock

MANIFEST_SCHEMA = "blocksolve/block-manifest/v1"


def write_block(path, block: SymmetricOperatorBlock) -> None:
    """Write a block as a Matrix Market coordinate symmetric file."""
    lower = sp.coo_matrix(
        (block.vals, (block.cols, block.rows)), shape=(block.dim, block.dim)
    )
    scipy.io.mmwrite(str(path), lower, symmetry="symmetric")


def read_block(path, label: str = "") -> SymmetricOperatorBlock:
    """Read a Matrix Market coordinate file as a symmetric block."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"block file not found: {path}")
    try:
        mat = scipy.io.mmread(str(path))
    except Exception as exc:
        raise ConfigError(f"cannot parse Matrix Market file {path}: {exc}") from exc
    mat = sp.coo_matrix(mat)
    if mat.shape[0] != mat.shape[1]:
        raise ConfigError(f"block file {path} is not square")
    # mmread mirrors symmetric storage; keep the upper triangle
    keep = mat.row <= mat.col
    return SymmetricOperatorBlock(
        dim=mat.shape[0],
        rows=mat.row[keep],
        cols=mat.col[keep],
        vals=mat.data[keep],
        label=label or path.stem,
    )


def write_basis(path, basis: NullSpaceBasis) -> None:
    """Write null-space vectors as a Matrix Market dense array file."""
    scipy.io.mmwrite(str(path), basis.vectors)


def read_basis(path, label: str = "") -> NullSpaceBasis:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"basis file not found: {path}")
    vectors = np.asarray(scipy.io.mmread(str(path)))
    return NullSpaceBasis(
        block_label=label or path.stem, vectors=vectors,
        residual_norm=float("nan"),
    )


def write_blocked_operators(
    directory,
    jsq: BlockedOperator,
    ham: BlockedOperator | None = None,
    manifest_name: str = "manifest.json",
) -> Path:
    """Emit every block plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (m, block) in enumerate(jsq):
        jsq_file = f"jsq_{i:03d}.mtx"
        write_block(directory / jsq_file, block)
        entry = {
            "sector": m,
            "dim": block.dim,
            "label": block.label,
            "jsq": jsq_file,
        }
        if ham is not None:
            ham_file = f"ham_{i:03d}.mtx"
            write_block(directory / ham_file, ham.blocks[i])
            entry["hamiltonian"] = ham_file
        entries.append(entry)
    manifest = {"schema": MANIFEST_SCHEMA, "blocks": entries}
    path = directory / manifest_name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_blocked_operators(manifest_path):
    """Load (jsq, hamiltonian-or-None) from a manifest file."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ConfigError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed manifest {manifest_path}: {exc}") from exc
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ConfigError(
            f"unsupported manifest schema {manifest.get('schema')!r} "
            f"(expected {MANIFEST_SCHEMA})"
        )
    base = manifest_path.parent
    sectors, jsq_blocks, ham_blocks = [], [], []
    has_ham = None
    for entry in manifest.get("blocks", []):
        sectors.append(float(entry["sector"]))
        jsq_blocks.append(read_block(base / entry["jsq"], label=entry.get("label", "")))
        if "hamiltonian" in entry:
            if has_ham is False:
                raise ConfigError("manifest mixes blocks with and without hamiltonians")
            has_ham = True
            ham_blocks.append(
                read_block(base / entry["hamiltonian"], label=entry.get("label", "") + "/H")
            )
        else:
            if has_ham is True:
                raise ConfigError("manifest mixes blocks with and without hamiltonians")
            has_ham = False
    jsq = BlockedOperator(sectors=sectors, blocks=jsq_blocks)
    ham = BlockedOperator(sectors=list(sectors), blocks=ham_blocks) if has_ham else None
    return jsq, ham
