# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels for the U3/CU3 ring ansatz.

Mirrors ``qtrl._kernels_py`` function for function. Amplitude index bit
``n - 1 - q`` belongs to qubit ``q`` (qubit 0 is the most significant bit).

Complex arithmetic is spelled out on interleaved (re, im) doubles: C99
complex multiplication without -ffast-math goes through a slow libgcc call.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


cdef struct Mat2:
    # row-major 2x2 complex matrix
    double r[4]
    double i[4]


cdef inline void _u3(double mu, double phi, double lam, Mat2* m) noexcept nogil:
    cdef double c = cos(0.5 * mu), s = sin(0.5 * mu)
    cdef double cp = cos(phi), sp = sin(phi), cl = cos(lam), sl = sin(lam)
    cdef double cpl = cos(phi + lam), spl = sin(phi + lam)
    m.r[0] = c
    m.i[0] = 0.0
    m.r[1] = -cl * s
    m.i[1] = -sl * s
    m.r[2] = cp * s
    m.i[2] = sp * s
    m.r[3] = cpl * c
    m.i[3] = spl * c


cdef inline void _u3_derivs(double mu, double phi, double lam, Mat2* dmu, Mat2* dphi, Mat2* dlam) noexcept nogil:
    cdef double c = cos(0.5 * mu), s = sin(0.5 * mu)
    cdef double cp = cos(phi), sp = sin(phi), cl = cos(lam), sl = sin(lam)
    cdef double cpl = cos(phi + lam), spl = sin(phi + lam)
    cdef int k
    dmu.r[0] = -0.5 * s
    dmu.i[0] = 0.0
    dmu.r[1] = -0.5 * cl * c
    dmu.i[1] = -0.5 * sl * c
    dmu.r[2] = 0.5 * cp * c
    dmu.i[2] = 0.5 * sp * c
    dmu.r[3] = -0.5 * cpl * s
    dmu.i[3] = -0.5 * spl * s
    for k in range(4):
        dphi.r[k] = 0.0
        dphi.i[k] = 0.0
        dlam.r[k] = 0.0
        dlam.i[k] = 0.0
    # i * e^{i phi} s
    dphi.r[2] = -sp * s
    dphi.i[2] = cp * s
    dphi.r[3] = -spl * c
    dphi.i[3] = cpl * c
    # -i * e^{i lam} s
    dlam.r[1] = sl * s
    dlam.i[1] = -cl * s
    dlam.r[3] = -spl * c
    dlam.i[3] = cpl * c


cdef inline Py_ssize_t _insert_zero(Py_ssize_t x, Py_ssize_t bit) noexcept nogil:
    # insert a 0 at bit position ``bit`` (given as a mask)
    return ((x & ~(bit - 1)) << 1) | (x & (bit - 1))


cdef inline Py_ssize_t _pair_index(Py_ssize_t g, Py_ssize_t tmask, Py_ssize_t cmask) noexcept nogil:
    # g-th amplitude index with target bit 0 (and control bit 1 when cmask != 0)
    if cmask == 0:
        return _insert_zero(g, tmask)
    if cmask < tmask:
        return _insert_zero(_insert_zero(g, cmask), tmask) | cmask
    return _insert_zero(_insert_zero(g, tmask), cmask) | cmask


cdef void _apply(double* st, Py_ssize_t dim, Py_ssize_t tmask, Py_ssize_t cmask, Mat2* m) noexcept nogil:
    cdef Py_ssize_t g, j0, j1, count = dim >> (2 if cmask else 1)
    cdef double ar, ai, br, bi
    for g in range(count):
        j0 = 2 * _pair_index(g, tmask, cmask)
        j1 = j0 + 2 * tmask
        ar = st[j0]
        ai = st[j0 + 1]
        br = st[j1]
        bi = st[j1 + 1]
        st[j0] = m.r[0] * ar - m.i[0] * ai + m.r[1] * br - m.i[1] * bi
        st[j0 + 1] = m.r[0] * ai + m.i[0] * ar + m.r[1] * bi + m.i[1] * br
        st[j1] = m.r[2] * ar - m.i[2] * ai + m.r[3] * br - m.i[3] * bi
        st[j1 + 1] = m.r[2] * ai + m.i[2] * ar + m.r[3] * bi + m.i[3] * br


cdef void _overlap(double* lv, double* psi, Py_ssize_t dim, Py_ssize_t tmask, Py_ssize_t cmask, Mat2* acc) noexcept nogil:
    # acc[r, s] = sum over amplitude pairs of conj(lv_r) * psi_s
    cdef Py_ssize_t g, j0, j1, count = dim >> (2 if cmask else 1)
    cdef double l0r, l0i, l1r, l1i, p0r, p0i, p1r, p1i
    cdef int k
    for k in range(4):
        acc.r[k] = 0.0
        acc.i[k] = 0.0
    for g in range(count):
        j0 = 2 * _pair_index(g, tmask, cmask)
        j1 = j0 + 2 * tmask
        l0r = lv[j0]
        l0i = lv[j0 + 1]
        l1r = lv[j1]
        l1i = lv[j1 + 1]
        p0r = psi[j0]
        p0i = psi[j0 + 1]
        p1r = psi[j1]
        p1i = psi[j1 + 1]
        acc.r[0] += l0r * p0r + l0i * p0i
        acc.i[0] += l0r * p0i - l0i * p0r
        acc.r[1] += l0r * p1r + l0i * p1i
        acc.i[1] += l0r * p1i - l0i * p1r
        acc.r[2] += l1r * p0r + l1i * p0i
        acc.i[2] += l1r * p0i - l1i * p0r
        acc.r[3] += l1r * p1r + l1i * p1i
        acc.i[3] += l1r * p1i - l1i * p1r


cdef inline double _contract(Mat2* d, Mat2* acc) noexcept nogil:
    # 2 Re sum_rs d[r, s] * acc[r, s]
    cdef double t = 0.0
    cdef int k
    for k in range(4):
        t += d.r[k] * acc.r[k] - d.i[k] * acc.i[k]
    return 2.0 * t


cdef inline Py_ssize_t _mask(int n, int q) noexcept nogil:
    return (<Py_ssize_t> 1) << (n - 1 - q)


def apply_u3(cnp.complex128_t[::1] state, int n, int qubit, double mu, double phi, double lam):
    cdef Mat2 m
    _u3(mu, phi, lam, &m)
    with nogil:
        _apply(<double*> &state[0], state.shape[0], _mask(n, qubit), 0, &m)


def apply_cu3(cnp.complex128_t[::1] state, int n, int control, int target, double mu, double phi, double lam):
    cdef Mat2 m
    _u3(mu, phi, lam, &m)
    with nogil:
        _apply(<double*> &state[0], state.shape[0], _mask(n, target), _mask(n, control), &m)


cdef void _forward(double[:, :, ::1] angles, int n, double* st, Py_ssize_t dim) noexcept nogil:
    cdef int b, q
    cdef Mat2 m
    for b in range(angles.shape[0]):
        for q in range(n):
            _u3(angles[b, q, 0], angles[b, q, 1], angles[b, q, 2], &m)
            _apply(st, dim, _mask(n, q), 0, &m)
        if n == 1:
            continue
        for q in range(n):
            _u3(angles[b, q, 3], angles[b, q, 4], angles[b, q, 5], &m)
            _apply(st, dim, _mask(n, (q + 1) % n), _mask(n, q), &m)


def run_ansatz(double[:, :, ::1] angles, int n):
    cdef Py_ssize_t dim = (<Py_ssize_t> 1) << n
    out = np.zeros(dim, dtype=np.complex128)
    cdef cnp.complex128_t[::1] st = out
    st[0] = 1.0
    with nogil:
        _forward(angles, n, <double*> &st[0], dim)
    return out


def ansatz_gradient(double[:, :, ::1] angles, int n, double[::1] upstream):
    """Return (d loss / d angles, final state) for loss = sum_i upstream[i] * |psi_i|^2.

    Adjoint sweep: the state is un-computed gate by gate while the co-state
    ``upstream * psi`` is propagated backwards through the same inverses.
    """
    cdef Py_ssize_t dim = (<Py_ssize_t> 1) << n
    cdef Py_ssize_t i, tmask, cmask
    cdef int b, q, off, depth = angles.shape[0]
    cdef Mat2 m, dmu, dphi, dlam, acc

    final = np.zeros(dim, dtype=np.complex128)
    psi_arr = np.empty(dim, dtype=np.complex128)
    lam_arr = np.empty(dim, dtype=np.complex128)
    grad = np.zeros((depth, n, 6), dtype=np.float64)
    cdef cnp.complex128_t[::1] fin_v = final
    cdef cnp.complex128_t[::1] psi_v = psi_arr
    cdef cnp.complex128_t[::1] lam_v = lam_arr
    cdef double[:, :, ::1] g = grad
    cdef double* fin = <double*> &fin_v[0]
    cdef double* psi = <double*> &psi_v[0]
    cdef double* lv = <double*> &lam_v[0]

    fin[0] = 1.0
    with nogil:
        _forward(angles, n, fin, dim)
        for i in range(2 * dim):
            psi[i] = fin[i]
            lv[i] = upstream[i >> 1] * fin[i]

        for b in range(depth - 1, -1, -1):
            for off in range(3, -1, -3):
                if off == 3 and n == 1:
                    continue
                for q in range(n - 1, -1, -1):
                    if off == 3:
                        tmask = _mask(n, (q + 1) % n)
                        cmask = _mask(n, q)
                    else:
                        tmask = _mask(n, q)
                        cmask = 0
                    # inverse of U3(mu, phi, lam) is U3(-mu, -lam, -phi)
                    _u3(-angles[b, q, off], -angles[b, q, off + 2], -angles[b, q, off + 1], &m)
                    _apply(psi, dim, tmask, cmask, &m)
                    _overlap(lv, psi, dim, tmask, cmask, &acc)
                    _u3_derivs(angles[b, q, off], angles[b, q, off + 1], angles[b, q, off + 2],
                               &dmu, &dphi, &dlam)
                    g[b, q, off] = _contract(&dmu, &acc)
                    g[b, q, off + 1] = _contract(&dphi, &acc)
                    g[b, q, off + 2] = _contract(&dlam, &acc)
                    _apply(lv, dim, tmask, cmask, &m)
    return grad, final
