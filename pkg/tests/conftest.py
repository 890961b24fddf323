import numpy as np
import pytest


def central_diff(f, x, h=1e-5):
    """Central finite differences of scalar ``f`` at every entry of ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (f(xp) - f(xm)) / (2 * h)
    return grad


def grad_mismatch(analytic, numeric, small=1e-6, abs_tol=1e-8):
    """Largest relative error; entries where both are tiny are checked absolutely.

    Returns ``(max_rel_error, worst_abs_error_on_small_entries)``.
    """
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = np.maximum(np.abs(a), np.abs(n))
    big = scale >= small
    rel = np.max(np.abs(a[big] - n[big]) / scale[big]) if big.any() else 0.0
    tiny = np.max(np.abs(a[~big] - n[~big])) if (~big).any() else 0.0
    return rel, tiny


# Independent dense-matrix oracle for the circuit, built from Kronecker products.

def u3_dense(mu, phi, lam):
    return np.array([
        [np.cos(mu / 2), -np.exp(1j * lam) * np.sin(mu / 2)],
        [np.exp(1j * phi) * np.sin(mu / 2), np.exp(1j * (phi + lam)) * np.cos(mu / 2)],
    ])


def embed(ops, n):
    """Kronecker product of per-qubit 2x2 operators (qubit 0 leftmost / most significant)."""
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, ops.get(q, np.eye(2)))
    return out


def u3_full(n, q, mu, phi, lam):
    return embed({q: u3_dense(mu, phi, lam)}, n)


def cu3_full(n, c, t, mu, phi, lam):
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    return embed({c: p0}, n) + embed({c: p1, t: u3_dense(mu, phi, lam)}, n)


def oracle_circuit(angles):
    depth, n, _ = angles.shape
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    for b in range(depth):
        for q in range(n):
            psi = u3_full(n, q, *angles[b, q, :3]) @ psi
        if n > 1:
            for q in range(n):
                psi = cu3_full(n, q, (q + 1) % n, *angles[b, q, 3:]) @ psi
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance results, printed once at the end of the session.

ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
