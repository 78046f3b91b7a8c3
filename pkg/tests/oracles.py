"""Independent reference computations used by the test-suite.

Nothing here imports the code under test.
"""

import numpy as np


def brute_force_dft(f):
    """O(n^2) DFT on s_j = -pi + j 2pi/n, k = -n/2 .. n/2-1."""
    f = np.asarray(f, dtype=float)
    n = f.size
    s = -np.pi + 2 * np.pi * np.arange(n) / n
    out = np.empty(n, dtype=complex)
    for idx, k in enumerate(range(-n // 2, n // 2)):
        acc = 0j
        for j in range(n):
            acc += f[j] * np.exp(-1j * k * s[j])
        out[idx] = acc / n
    return out


def smoothed_gradient_lasso(A, y, L, alpha, iters_per_stage=40_000, mus=None):
    """Long-run accelerated proximal-gradient oracle for a batch of problems.

    Minimises ``1/2||A x - y||^2 + alpha * sum huber_mu(L x)`` for a
    decreasing sequence of smoothing widths ``mu``; the Huber function is the
    Moreau envelope of |.|, so its gradient is ``(t - prox_{mu|.|}(t)) / mu``.
    FISTA with function-value restarts, warm-started across ``mu``.

    Parameters are stacked along a leading batch axis: ``A``/``L`` (B, n, n),
    ``y`` (B, n), ``alpha`` (B,). Returns ``(x, true_objective)``.
    """
    A, L, y = np.asarray(A, float), np.asarray(L, float), np.asarray(y, float)
    alpha = np.broadcast_to(np.asarray(alpha, float), (y.shape[0],))
    if mus is None:
        mus = 10.0 ** -np.arange(0, 10)
    AtA = np.einsum("bki,bkj->bij", A, A)
    Aty = np.einsum("bki,bk->bi", A, y)
    a_norm2 = np.linalg.norm(A, ord=2, axis=(1, 2)) ** 2
    l_norm2 = np.linalg.norm(L, ord=2, axis=(1, 2)) ** 2

    def smooth_obj(x, mu):
        r = np.einsum("bij,bj->bi", A, x) - y
        t = np.abs(np.einsum("bij,bj->bi", L, x))
        h = np.where(t <= mu, t * t / (2 * mu), t - mu / 2)
        return 0.5 * np.sum(r * r, axis=1) + alpha * h.sum(axis=1)

    def grad(x, mu):
        t = np.einsum("bij,bj->bi", L, x)
        shrunk = np.sign(t) * np.maximum(np.abs(t) - mu, 0.0)
        g1 = (t - shrunk) / mu
        return np.einsum("bij,bj->bi", AtA, x) - Aty + alpha[:, None] * np.einsum("bji,bj->bi", L, g1)

    x = np.zeros_like(y)
    for mu in mus:
        step = 1.0 / (a_norm2 + alpha * l_norm2 / mu)
        v = x.copy()
        theta = np.ones(y.shape[0])
        f_old = smooth_obj(x, mu)
        for _ in range(iters_per_stage):
            x_new = v - step[:, None] * grad(v, mu)
            f_new = smooth_obj(x_new, mu)
            restart = f_new > f_old
            theta_new = 0.5 * (1 + np.sqrt(1 + 4 * theta**2))
            mom = ((theta - 1) / theta_new)[:, None]
            v = np.where(restart[:, None], x, x_new + mom * (x_new - x))
            theta = np.where(restart, 1.0, theta_new)
            x = np.where(restart[:, None], x, x_new)
            f_old = np.where(restart, f_old, f_new)
    r = np.einsum("bij,bj->bi", A, x) - y
    obj = 0.5 * np.sum(r * r, axis=1) + alpha * np.abs(np.einsum("bij,bj->bi", L, x)).sum(axis=1)
    return x, obj
