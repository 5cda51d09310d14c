"""Pure-numpy projected SOR sweep, the fallback for the compiled core.

Vectorization relies on the caller ordering nodes by color so that nodes
updated together never neighbor each other; under that contract the result
is identical to a sequential Gauss-Seidel pass in the same order.
"""

from __future__ import annotations

import numpy as np


def psor_sweep(indptr, indices, data, diag, rhs, x, order, clamp, relax,
               matrix=None, color_slices=None):
    """One projected SOR pass over `order`; returns the max |update|.

    `matrix` (CSR) and `color_slices` (list of (start, stop) into `order`)
    enable the vectorized path; without them a plain Python loop runs.
    """
    if matrix is not None and color_slices is not None:
        maxupd = 0.0
        for start, stop in color_slices:
            idx = order[start:stop]
            if len(idx) == 0:
                continue
            ax = matrix @ x
            s = ax[idx] - diag[idx] * x[idx]
            xnew = (1.0 - relax) * x[idx] + relax * (rhs[idx] - s) / diag[idx]
            xnew = np.where(clamp[idx].astype(bool), np.maximum(xnew, 0.0), xnew)
            upd = np.abs(xnew - x[idx])
            if len(upd):
                maxupd = max(maxupd, float(upd.max()))
            x[idx] = xnew
        return maxupd

    maxupd = 0.0
    for i in order:
        s = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j != i:
                s += data[jj] * x[j]
        xnew = (1.0 - relax) * x[i] + relax * (rhs[i] - s) / diag[i]
        if clamp[i] and xnew < 0.0:
            xnew = 0.0
        maxupd = max(maxupd, abs(xnew - x[i]))
        x[i] = xnew
    return maxupd
