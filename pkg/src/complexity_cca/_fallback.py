"""Pure numpy versions of the compiled averaging kernels.

Same signatures and results as ``_kernels``; used when the extension is not
built or when ``COMPLEXITY_CCA_PURE_PYTHON`` is set.
"""

import numpy as np


def _row_ids(indptr):
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def row_means_1d(indptr, indices, values):
    counts = np.diff(indptr)
    sums = np.bincount(_row_ids(indptr), weights=values[indices], minlength=len(counts))
    out = np.zeros(len(counts))
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


def row_means_2d(indptr, indices, values):
    counts = np.diff(indptr)
    rows = _row_ids(indptr)
    picked = values[indices]
    out = np.zeros((len(counts), values.shape[1]))
    for j in range(values.shape[1]):
        out[:, j] = np.bincount(rows, weights=picked[:, j], minlength=len(counts))
    nz = counts > 0
    out[nz] /= counts[nz, None]
    return out


def reciprocal_step(prod_ptr, prod_idx, ctry_ptr, ctry_idx, country_scores):
    prod = row_means_1d(prod_ptr, prod_idx, country_scores)
    return row_means_1d(ctry_ptr, ctry_idx, prod), prod
