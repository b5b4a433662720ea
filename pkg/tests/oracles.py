"""Independent reference computations used to check the library.

None of these use the pencil code: product vectors are found by a grid search
over the Riemann sphere of xi, and the pairing by brute-force summation.
"""

import numpy as np
from scipy.optimize import minimize


def unit(i, j, n):
    Z = np.zeros((2, n), dtype=complex)
    Z[i - 1, j - 1] = 1.0
    return Z


def xi_of(theta, phi):
    return np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)])


def _distance_to_D(P_perp, xi, n):
    """Smallest ``|P_perp (eta (x) xi)|`` over unit ``eta`` and the minimizing ``eta``."""
    Q = np.kron(xi.reshape(2, 1), np.eye(n))  # columns kron(xi, e_j)
    _, s, Vh = np.linalg.svd(P_perp @ Q)
    return s[-1], Vh[-1].conj()


def grid_product_vectors(matrices, n, grid=(48, 96), accept=1e-7):
    """Rays ``(eta, xi)`` of product vectors in span(matrices), found by grid search plus refinement."""
    V = np.array([np.asarray(Z).reshape(-1) for Z in matrices]).T
    Qd, _ = np.linalg.qr(V)
    P_perp = np.eye(2 * n) - Qd @ Qd.conj().T
    thetas = np.linspace(0, np.pi / 2, grid[0])
    phis = np.linspace(0, 2 * np.pi, grid[1], endpoint=False)
    T, Ph = np.meshgrid(thetas, phis, indexing="ij")
    xis = np.stack([np.cos(T), np.exp(1j * Ph) * np.sin(T)], axis=-1).reshape(-1, 2)
    Q = xis[:, :, None, None] * np.eye(n)[None, None, :, :]  # (G, 2, n, n): kron(xi, e_j) columns
    M = P_perp[None] @ Q.reshape(-1, 2 * n, n)
    F = np.linalg.svd(M, compute_uv=False)[:, -1].reshape(grid)

    def f(x):
        return _distance_to_D(P_perp, xi_of(x[0], x[1]), n)[0] ** 2

    starts = [(0.0, 0.0)] if F[0, 0] < 0.25 else []  # the pole xi = e_1 is a single point
    for a in range(1, grid[0]):
        for b in range(grid[1]):
            nb = [F[a2, b2 % grid[1]] for a2 in (a - 1, a, a + 1) for b2 in (b - 1, b, b + 1) if 1 <= a2 < grid[0]]
            # the last row is the pole xi = e_2; keep one start there
            if F[a, b] <= min(nb) and F[a, b] < 0.25 and (a < grid[0] - 1 or b == int(np.argmin(F[a]))):
                starts.append((thetas[a], phis[b]))
    found = []
    for x0 in starts:
        res = minimize(f, list(x0), method="Nelder-Mead", options={"xatol": 1e-11, "fatol": 1e-26, "maxiter": 2000})
        xi = xi_of(*res.x)
        g, eta = _distance_to_D(P_perp, xi, n)
        if g < accept:
            z = np.kron(xi, eta)
            if all(1 - abs(np.vdot(z, w)) > 1e-6 for w in found):
                found.append(z / np.linalg.norm(z))
    return found


def brute_pairing(A, cp=(), ccp=()):
    """``sum_{ijkl} A[(i,k),(j,l)] Tr(phi(e_ij) e_kl^t)`` by explicit loops."""
    Z = np.asarray(cp[0] if cp else ccp[0])
    m, n = Z.shape
    total = 0j
    for i in range(m):
        for j in range(m):
            E = np.zeros((m, m))
            E[i, j] = 1.0
            phi = np.zeros((n, n), dtype=complex)
            for V in cp:
                phi += V.conj().T @ E @ V
            for W in ccp:
                phi += W.conj().T @ E.T @ W
            for k in range(n):
                for l in range(n):
                    ekl = np.zeros((n, n))
                    ekl[k, l] = 1.0
                    total += A[i * n + k, j * n + l] * np.trace(phi @ ekl.T)
    return total


def same_ray_sets(us, vs, eps=1e-6):
    if len(us) != len(vs):
        return False
    for u in us:
        u = u / np.linalg.norm(u)
        if not any(1 - abs(np.vdot(u, v / np.linalg.norm(v))) < eps for v in vs):
            return False
    return True


def planted_subspace(n, planted, extra, rng):
    """``planted`` random product matrices plus ``extra`` random matrices."""
    mats = []
    for _ in range(planted):
        xi = rng.normal(size=2) + 1j * rng.normal(size=2)
        eta = rng.normal(size=n) + 1j * rng.normal(size=n)
        mats.append(np.outer(xi, eta))
    for _ in range(extra):
        mats.append(rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n)))
    return mats
