"""Backend selection for the integer hot loops.

The compiled extension is used when it imported and every input fits in
int64; an OverflowError from it, or any object-dtype input, routes the call to
the exact pure-Python implementation.  Set ``CUBEAVG_PURE_PYTHON=1`` to skip
the extension entirely.
"""

import os

import numpy as np

from . import _pykernels

_ck = None
if os.environ.get("CUBEAVG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _ck
    except ImportError:  # extension not built
        _ck = None

BACKEND = "cython" if _ck is not None else "python"

_I64_MAX = 2**63 - 1


def to_int64(a):
    """``a`` as a C-contiguous int64 array, or None if some entry does not fit."""
    arr = np.asarray(a)
    if arr.dtype == np.int64:
        return np.ascontiguousarray(arr)
    if arr.dtype.kind in "iub":
        return np.ascontiguousarray(arr, dtype=np.int64)
    flat = arr.ravel().tolist()
    if any(v > _I64_MAX or v < -_I64_MAX for v in flat):
        return None
    return np.asarray(flat, dtype=np.int64).reshape(arr.shape)


def int_array(values):
    """Python ints -> int64 array when they fit, object array otherwise."""
    values = list(values)
    if all(-_I64_MAX <= v <= _I64_MAX for v in values):
        return np.asarray(values, dtype=np.int64)
    out = np.empty(len(values), dtype=object)
    out[:] = values
    return out


def _compiled(name, *arrays):
    if _ck is None:
        return None
    converted = []
    for a in arrays:
        if isinstance(a, np.ndarray) or isinstance(a, list):
            c = to_int64(a)
            if c is None:
                return None
            converted.append(c)
        else:
            converted.append(a)
    try:
        return getattr(_ck, name)(*converted)
    except OverflowError:
        return None


def orbit_labels(perm, backend=None):
    perm = np.ascontiguousarray(perm, dtype=np.int64)
    if (backend or BACKEND) == "cython" and _ck is not None:
        return _ck.orbit_labels(perm)
    return _pykernels.orbit_labels(perm)


def tensor_cell_sums(coords, weights, labels, ncells, values, backend=None):
    """Per-cell ``sum weights[e] * prod_j values[coords[e, j]]`` as Python ints."""
    if (backend or BACKEND) == "cython":
        out = _compiled("tensor_cell_sums", coords, weights, labels, int(ncells), values)
        if out is not None:
            return out.tolist()
    return _pykernels.tensor_cell_sums(coords, weights, labels, int(ncells), values)


def cube_sums(tables, lengths, mults, masks, values, backend=None):
    """Per-point multiplicity-weighted sums of products along the cube vertices."""
    if (backend or BACKEND) == "cython":
        out = _compiled("cube_sums", tables, lengths, mults, masks, values)
        if out is not None:
            return out.tolist()
    return _pykernels.cube_sums(tables, lengths, mults, masks, values)


def residue_integrals(tables, lengths, masks, values, point_weights, backend=None):
    """Per-residue (row-major) weighted integrals of products along the cube vertices."""
    if (backend or BACKEND) == "cython":
        out = _compiled("residue_integrals", tables, lengths, masks, values, point_weights)
        if out is not None:
            return out.tolist()
    return _pykernels.residue_integrals(tables, lengths, masks, values, point_weights)
