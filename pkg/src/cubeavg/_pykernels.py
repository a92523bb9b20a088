"""Pure-Python versions of the compiled kernels.

Same signatures as ``_ckernels`` but exact for arbitrarily large integers:
arithmetic runs on numpy object arrays holding Python ints.
"""

import numpy as np


def orbit_labels(perm):
    """Smallest index on each cycle, by pointer doubling."""
    perm = np.asarray(perm, dtype=np.int64)
    n = perm.shape[0]
    labels = np.arange(n, dtype=np.int64)
    jump = perm.copy()
    covered = 1
    while covered < n:
        labels = np.minimum(labels, labels[jump])
        jump = jump[jump]
        covered *= 2
    return labels


def _obj(a):
    return np.asarray(a).astype(object)


def tensor_cell_sums(coords, weights, labels, ncells, values):
    coords = np.asarray(coords)
    vals = _obj(values)
    prod = _obj(weights)
    for j in range(coords.shape[1]):
        prod = prod * vals[coords[:, j]]
    sums = [0] * ncells
    if len(prod) == 0:
        return sums
    labels = np.asarray(labels, dtype=np.int64)
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    starts = np.flatnonzero(np.r_[True, sorted_labels[1:] != sorted_labels[:-1]])
    totals = np.add.reduceat(prod[order], starts)
    for c, s in zip(sorted_labels[starts], totals):
        sums[int(c)] = int(s)
    return sums


def _residue_grid(lengths):
    """Every residue vector ``r`` in row-major order, one column per direction."""
    axes = [np.arange(int(L), dtype=np.int64) for L in lengths]
    if not axes:
        return np.zeros((1, 0), dtype=np.int64)
    return np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)


def _vertex_products(tables, grid, masks, vals, n):
    """``prod_q vals[q][T_eps^r x]`` for every residue (rows) and point (columns)."""
    term = np.ones((grid.shape[0], n), dtype=object)
    base = np.broadcast_to(np.arange(n, dtype=np.int64), (grid.shape[0], n))
    for q, mask in enumerate(masks):
        y = base
        for i in reversed(range(grid.shape[1])):
            if int(mask) >> i & 1:
                y = tables[i][grid[:, i][:, None], y]
        term = term * vals[q][y]
    return term


def cube_sums(tables, lengths, mults, masks, values):
    n = values.shape[1]
    tables = np.asarray(tables)
    grid = _residue_grid(lengths)
    weight = np.ones(grid.shape[0], dtype=object)
    for i in range(grid.shape[1]):
        weight = weight * _obj(mults[i])[grid[:, i]]
    keep = weight != 0
    grid, weight = grid[keep], weight[keep]
    if len(grid) == 0 or n == 0:
        return [0] * n
    term = _vertex_products(tables, grid, masks, [_obj(v) for v in values], n)
    return [int(v) for v in (term * weight[:, None]).sum(axis=0)]


def residue_integrals(tables, lengths, masks, values, point_weights):
    n = values.shape[1]
    tables = np.asarray(tables)
    grid = _residue_grid(lengths)
    if n == 0:
        return [0] * len(grid)
    term = _vertex_products(tables, grid, masks, [_obj(v) for v in values], n)
    return [int(v) for v in (term * _obj(point_weights)[None, :]).sum(axis=1)]
