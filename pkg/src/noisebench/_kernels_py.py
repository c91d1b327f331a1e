"""Pure-numpy implementation of the kernels in ``_kernels.pyx``.

Same signatures and in-place semantics; used when the extension is not
built or when ``NOISEBENCH_BACKEND=python``.
"""

import numpy as np

BACKEND_NAME = "python"


def _apply(rho, S, axes_rows, w):
    k = len(axes_rows)
    axes = list(axes_rows) + [w + a for a in axes_rows]
    t = rho.reshape((2,) * (2 * w))
    t = np.moveaxis(t, axes, list(range(2 * k)))
    shape = t.shape
    t = (S @ t.reshape(4**k, -1)).reshape(shape)
    rho[...] = np.moveaxis(t, list(range(2 * k)), axes).reshape(rho.shape)


def apply_superop_1q(rho, S, q, w):
    if S.shape != (4, 4):
        raise ValueError("single-qubit superoperator must be 4x4")
    _apply(rho, S, (q,), w)


def apply_superop_2q(rho, S, q1, q2, w):
    if S.shape != (16, 16):
        raise ValueError("two-qubit superoperator must be 16x16")
    _apply(rho, S, (q1, q2), w)


def readout_sweep(probs, p01, p10, q, w):
    t = probs.reshape(2**q, 2, -1)
    p0 = t[:, 0, :].copy()
    p1 = t[:, 1, :].copy()
    t[:, 0, :] = (1.0 - p01) * p0 + p10 * p1
    t[:, 1, :] = p01 * p0 + (1.0 - p10) * p1
