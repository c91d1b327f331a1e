# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled density-matrix kernels.

All routines mutate their first argument in place.  Qubit 0 is the most
significant bit of a basis index.  A superoperator ``S`` acts on the
row-major flattened block ``rho[rows(a), cols(b)]`` with flat index
``a * k + b`` (``k`` = local dimension), i.e. ``S = sum_i kron(K_i, conj(K_i))``.
"""

ctypedef double complex cplx

BACKEND_NAME = "compiled"


def apply_superop_1q(cplx[:, ::1] rho, const cplx[:, ::1] S, int q, int w):
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t mask = (<Py_ssize_t>1) << (w - 1 - q)
    cdef Py_ssize_t i, j, i1, j1
    cdef cplx r0, r1, r2, r3
    cdef cplx s[16]
    cdef int a, b
    if S.shape[0] != 4 or S.shape[1] != 4:
        raise ValueError("single-qubit superoperator must be 4x4")
    for a in range(4):
        for b in range(4):
            s[4 * a + b] = S[a, b]
    with nogil:
        for i in range(dim):
            if i & mask:
                continue
            i1 = i | mask
            for j in range(dim):
                if j & mask:
                    continue
                j1 = j | mask
                r0 = rho[i, j]
                r1 = rho[i, j1]
                r2 = rho[i1, j]
                r3 = rho[i1, j1]
                rho[i, j] = s[0] * r0 + s[1] * r1 + s[2] * r2 + s[3] * r3
                rho[i, j1] = s[4] * r0 + s[5] * r1 + s[6] * r2 + s[7] * r3
                rho[i1, j] = s[8] * r0 + s[9] * r1 + s[10] * r2 + s[11] * r3
                rho[i1, j1] = s[12] * r0 + s[13] * r1 + s[14] * r2 + s[15] * r3


def apply_superop_2q(cplx[:, ::1] rho, const cplx[:, ::1] S, int q1, int q2, int w):
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t m1 = (<Py_ssize_t>1) << (w - 1 - q1)
    cdef Py_ssize_t m2 = (<Py_ssize_t>1) << (w - 1 - q2)
    cdef Py_ssize_t both = m1 | m2
    cdef Py_ssize_t i, j
    cdef Py_ssize_t rows[4]
    cdef Py_ssize_t cols[4]
    cdef double vr[16]
    cdef double vi[16]
    # nonzero entries of S in row order: row_start[r]..row_start[r+1]
    cdef int nz_col[256]
    cdef double nz_re[256]
    cdef double nz_im[256]
    cdef int row_start[17]
    cdef double accr, acci, sr, si
    cdef int a, b, k, r, nnz = 0
    cdef cplx z
    if S.shape[0] != 16 or S.shape[1] != 16:
        raise ValueError("two-qubit superoperator must be 16x16")
    for r in range(16):
        row_start[r] = nnz
        for k in range(16):
            z = S[r, k]
            if z.real != 0.0 or z.imag != 0.0:
                nz_col[nnz] = k
                nz_re[nnz] = z.real
                nz_im[nnz] = z.imag
                nnz += 1
    row_start[16] = nnz
    with nogil:
        for i in range(dim):
            if i & both:
                continue
            rows[0] = i
            rows[1] = i | m2
            rows[2] = i | m1
            rows[3] = i | both
            for j in range(dim):
                if j & both:
                    continue
                cols[0] = j
                cols[1] = j | m2
                cols[2] = j | m1
                cols[3] = j | both
                for a in range(4):
                    for b in range(4):
                        z = rho[rows[a], cols[b]]
                        vr[4 * a + b] = z.real
                        vi[4 * a + b] = z.imag
                for a in range(4):
                    for b in range(4):
                        r = 4 * a + b
                        accr = 0.0
                        acci = 0.0
                        for k in range(row_start[r], row_start[r + 1]):
                            sr = nz_re[k]
                            si = nz_im[k]
                            accr = accr + sr * vr[nz_col[k]] - si * vi[nz_col[k]]
                            acci = acci + sr * vi[nz_col[k]] + si * vr[nz_col[k]]
                        rho[rows[a], cols[b]].real = accr
                        rho[rows[a], cols[b]].imag = acci


def readout_sweep(double[::1] probs, double p01, double p10, int q, int w):
    cdef Py_ssize_t dim = probs.shape[0]
    cdef Py_ssize_t mask = (<Py_ssize_t>1) << (w - 1 - q)
    cdef Py_ssize_t i
    cdef double p0, p1
    with nogil:
        for i in range(dim):
            if i & mask:
                continue
            p0 = probs[i]
            p1 = probs[i | mask]
            probs[i] = (1.0 - p01) * p0 + p10 * p1
            probs[i | mask] = p01 * p0 + (1.0 - p10) * p1
