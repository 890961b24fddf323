"""Pure numpy statevector kernels (fallback for the compiled ``_kernels``).

Same signatures and conventions as the extension: states are contiguous
complex128 arrays of length ``2**n``; qubit 0 is the most significant bit.
"""

import numpy as np


def u3_matrix(mu, phi, lam):
    c, s = np.cos(0.5 * mu), np.sin(0.5 * mu)
    ep, el = np.exp(1j * phi), np.exp(1j * lam)
    return np.array([[c, -el * s], [ep * s, ep * el * c]], dtype=np.complex128)


def u3_derivs(mu, phi, lam):
    c, s = np.cos(0.5 * mu), np.sin(0.5 * mu)
    ep, el = np.exp(1j * phi), np.exp(1j * lam)
    dmu = np.array([[-0.5 * s, -0.5 * el * c], [0.5 * ep * c, -0.5 * ep * el * s]])
    dphi = np.array([[0, 0], [1j * ep * s, 1j * ep * el * c]])
    dlam = np.array([[0, -1j * el * s], [0, 1j * ep * el * c]])
    return dmu, dphi, dlam


def _pair_views(state, n, target, control=None):
    """Views (a, b) of the amplitudes with target bit 0 / 1 (and control bit 1)."""
    shaped = state.reshape((2,) * n)
    idx0 = [slice(None)] * n
    idx1 = [slice(None)] * n
    # length-1 slices keep these as views even when every axis is fixed
    idx0[target] = slice(0, 1)
    idx1[target] = slice(1, 2)
    if control is not None:
        idx0[control] = slice(1, 2)
        idx1[control] = slice(1, 2)
    return shaped[tuple(idx0)], shaped[tuple(idx1)]


def _apply(state, n, target, control, m):
    a, b = _pair_views(state, n, target, control)
    a_old = a.copy()
    a *= m[0, 0]
    a += m[0, 1] * b
    b *= m[1, 1]
    b += m[1, 0] * a_old


def apply_u3(state, n, qubit, mu, phi, lam):
    _apply(state, n, qubit, None, u3_matrix(mu, phi, lam))


def apply_cu3(state, n, control, target, mu, phi, lam):
    _apply(state, n, target, control, u3_matrix(mu, phi, lam))


def _gates(angles, n):
    """Yield (target, control, angle offset, block) in application order.

    A single qubit has no ring partner, so its CU3 layer is skipped.
    """
    for b in range(angles.shape[0]):
        for q in range(n):
            yield q, None, 0, b
        if n == 1:
            continue
        for q in range(n):
            yield (q + 1) % n, q, 3, b


def run_ansatz(angles, n):
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    for target, control, off, b in _gates(angles, n):
        q = target if control is None else control
        mu, phi, lam = angles[b, q, off:off + 3]
        _apply(state, n, target, control, u3_matrix(mu, phi, lam))
    return state


def ansatz_gradient(angles, n, upstream):
    final = run_ansatz(angles, n)
    psi = final.copy()
    lam_v = upstream * psi
    grad = np.zeros(angles.shape, dtype=np.float64)
    for target, control, off, b in reversed(list(_gates(angles, n))):
        q = target if control is None else control
        mu, phi, lam = angles[b, q, off:off + 3]
        inv = u3_matrix(-mu, -lam, -phi)
        _apply(psi, n, target, control, inv)
        p0, p1 = _pair_views(psi, n, target, control)
        l0, l1 = _pair_views(lam_v, n, target, control)
        acc = np.array([
            [np.vdot(l0, p0), np.vdot(l0, p1)],
            [np.vdot(l1, p0), np.vdot(l1, p1)],
        ])
        for j, d in enumerate(u3_derivs(mu, phi, lam)):
            grad[b, q, off + j] = 2.0 * np.sum(d * acc).real
        _apply(lam_v, n, target, control, inv)
    return grad, final
