"""Pure-numpy implementations of the hot loops.

Both functions vectorize across trajectories (or time slices) instead of
looping in Python; their results agree with the compiled kernels to
floating-point round-off.
"""

import numpy as np

SQRT_HALF = np.sqrt(0.5)


def weak_walk(logw, eigenvalues, delta_p, u, z, outcomes, snap_steps, snaps):
    """Advance repeated weak-measurement walks in log-probability space.

    Parameters
    ----------
    logw : (n, d) float64, modified in place
        log |alpha_i|^2 per trajectory, normalized so that logsumexp = 0.
    eigenvalues : (d,) float64
    delta_p : float
        Apparatus Gaussian width.
    u, z : (n, m) float64
        Uniform draws selecting the component and standard normal draws
        giving the Gaussian offset, one pair per step.
    outcomes : (n, m) float64, output
    snap_steps : (k,) int64
        Completed-step counts (1..m, increasing) at which ``logw`` is copied.
    snaps : (n, k, d) float64, output
    """
    n, m = u.shape
    d = eigenvalues.shape[0]
    width = delta_p * SQRT_HALF
    inv_var = 1.0 / (delta_p * delta_p)
    has_mass = np.isfinite(logw)
    last_nonzero = d - 1 - np.argmax(has_mass[:, ::-1], axis=1)
    snap = 0
    for j in range(m):
        cum = np.cumsum(np.exp(logw), axis=1)
        above = u[:, j, None] < cum
        k = np.where(above.any(axis=1), np.argmax(above, axis=1), last_nonzero)
        p = eigenvalues[k] + z[:, j] * width
        outcomes[:, j] = p
        logw -= (p[:, None] - eigenvalues) ** 2 * inv_var
        top = np.max(logw, axis=1, keepdims=True)
        logw -= top + np.log(np.sum(np.exp(logw - top), axis=1, keepdims=True))
        while snap < snap_steps.shape[0] and snap_steps[snap] == j + 1:
            snaps[:, snap, :] = logw
            snap += 1


def _step_unitaries(h0, v, g, dt):
    h = h0[None, :, :] + g[:, None, None] * v[None, :, :]
    a = 0.5 * (h[:, 0, 0].real + h[:, 1, 1].real)
    bz = 0.5 * (h[:, 0, 0].real - h[:, 1, 1].real)
    h01 = h[:, 0, 1]
    b = np.sqrt(bz * bz + (h01 * h01.conj()).real)
    c = np.cos(b * dt)
    # sin(b dt)/b with the b -> 0 limit dt
    s = np.where(b > 0, np.sin(b * dt) / np.where(b > 0, b, 1.0), dt)
    phase = np.exp(-1j * a * dt)
    out = np.empty((g.size, 2, 2), dtype=complex)
    out[:, 0, 0] = phase * (c - 1j * s * bz)
    out[:, 1, 1] = phase * (c + 1j * s * bz)
    out[:, 0, 1] = phase * (-1j * s * h01)
    out[:, 1, 0] = phase * (-1j * s * h01.conj())
    return out


def propagate_two_level(h0, v, g, dt, psi):
    """Propagate a two-level state under H(t_k) = h0 + g[k] v, slice by slice.

    Each slice uses the closed-form exponential of a 2x2 Hermitian matrix; the
    ordered product of all slices is formed by pairwise reduction.
    """
    us = _step_unitaries(np.asarray(h0, complex), np.asarray(v, complex), np.asarray(g, float), dt)
    while us.shape[0] > 1:
        if us.shape[0] % 2:
            us = np.concatenate([us, np.eye(2, dtype=complex)[None]], axis=0)
        us = us[1::2] @ us[0::2]
    return us[0] @ np.asarray(psi, complex)
