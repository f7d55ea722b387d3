"""Independent reference computations used by the tests."""

import numpy as np


def psd_project(X):
    X = 0.5 * (X + np.swapaxes(X, -1, -2))
    w, V = np.linalg.eigh(X)
    return (V * np.clip(w, 0.0, None)[..., None, :]) @ np.swapaxes(V, -1, -2)


def frob_residual(A, X, Qm):
    return np.linalg.norm(A @ X @ A.T - Qm, axis=(-2, -1))


def projected_gradient(A, Qm, restarts=500, iters=300, rng=None):
    """Minimize ``|A X A^T - Qm|_F`` over PSD ``X`` by accelerated projected gradient.

    All restarts run in one batch from random PSD starting points. Returns
    the smallest residual reached by any restart.
    """
    rng = np.random.default_rng(rng)
    m = A.shape[1]
    G = rng.standard_normal((restarts, m, m))
    scale = np.linalg.norm(Qm) / max(np.linalg.norm(A, 2) ** 2, 1e-300)
    X = psd_project(G @ np.swapaxes(G, -1, -2) * scale / m)
    Y, t = X.copy(), 1.0
    step = 1.0 / (2.0 * np.linalg.norm(A, 2) ** 4)
    AtQA = A.T @ Qm @ A
    AtA = A.T @ A
    best = frob_residual(A, X, Qm).min()
    for _ in range(iters):
        grad = 2.0 * (AtA @ Y @ AtA - AtQA)
        Xn = psd_project(Y - step * grad)
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Y = Xn + ((t - 1.0) / tn) * (Xn - X)
        X, t = Xn, tn
        best = min(best, frob_residual(A, X, Qm).min())
    return float(best)


def random_instance(rng, p_max=8, ms=(1, 2, 4)):
    """Random ``(A, Qm, p, m, gamma)`` with ``A = Ji^{-T} M`` and diagonal ``Qm >= 0``."""
    from phshape.discretize import build_Ji
    from phshape.shaping import build_patch_map

    m = int(rng.choice(ms))
    ks = [k for k in range(1, p_max // m + 1)]
    p = m * int(rng.choice(ks))
    gamma = float(rng.uniform(0.2, 0.8))
    Ji = build_Ji(p, gamma)
    M = build_patch_map(p, m).M
    A = np.linalg.solve(Ji.T, M)
    d = rng.uniform(0.0, 5.0, p)
    d[rng.random(p) < 0.2] = 0.0
    return A, np.diag(d), p, m, gamma
