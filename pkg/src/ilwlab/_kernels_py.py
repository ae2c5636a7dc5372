"""Pure numpy implementations of the hot kernels.

Reference versions of everything in ``_kernels.pyx``; used when the
compiled extension is missing or ``ILWLAB_PURE_PYTHON=1`` is set.
"""
import itertools
import math

import numpy as np

_ML_BLOCK = 1 << 16


def mittag_leffler_sum(delta, n, terms):
    """6 n^2 sum_{k=1}^{terms} 1 / (k^2 pi^2 + delta^2 n^2), smallest terms first."""
    c = (delta * n) ** 2
    partial = []
    hi = terms
    while hi >= 1:
        lo = max(1, hi - _ML_BLOCK + 1)
        k = np.arange(hi, lo - 1, -1, dtype=float)
        kp = k * math.pi
        partial.append(np.sum(1.0 / (kp * kp + c)))
        hi = lo - 1
    return 6.0 * n * n * math.fsum(partial)


def hermite(k, x, sigma):
    """H_k(x; sigma) by upward recursion, elementwise over ``x``."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x)
    h_prev = np.ones_like(x)
    h = x.copy()
    for j in range(2, k + 1):
        h, h_prev = x * h - (j - 1) * sigma * h_prev, h
    return h


def hermite_row_mean(k, grid, sigma):
    """Row means of H_k(grid; sigma) for a 2-d array."""
    return hermite(k, grid, sigma).mean(axis=1)


def energy_cross(xa, wa, xb, wb, chunk=1024):
    """sum_ij wa_i wb_j |xa_i - xb_j| (Euclidean norm over the last axis)."""
    xa = np.ascontiguousarray(xa, dtype=float)
    xb = np.ascontiguousarray(xb, dtype=float)
    total = 0.0
    for start in range(0, xa.shape[0], chunk):
        block = xa[start:start + chunk]
        d = np.sqrt(((block[:, None, :] - xb[None, :, :]) ** 2).sum(axis=-1))
        total += float(wa[start:start + chunk] @ d @ wb)
    return total


def chaos_convolution(inv_symbol, k, n):
    """sum over 0 < |n_j| <= N with n_1 + ... + n_k = n of prod_j inv_symbol[|n_j|].

    ``inv_symbol[m]`` holds 1/S(m) for m = 1..N (index 0 unused).
    """
    N = len(inv_symbol) - 1
    freqs = [m for m in range(-N, N + 1) if m != 0]
    total = 0.0
    for combo in itertools.product(freqs, repeat=k - 1):
        last = n - sum(combo)
        if last == 0 or abs(last) > N:
            continue
        p = inv_symbol[abs(last)]
        for m in combo:
            p *= inv_symbol[abs(m)]
        total += p
    return total


def _nl_term(low, n_low, k, sigma, M):
    spec = np.zeros(low.shape[:-1] + (M // 2 + 1,), dtype=complex)
    spec[..., 1:low.shape[-1] + 1] = low
    u = np.fft.irfft(spec, n=M, axis=-1) * (M / (2.0 * math.pi))
    w = hermite(k, u, sigma)
    wh = np.fft.rfft(w, axis=-1)[..., 1:low.shape[-1] + 1] * (2.0 * math.pi / M)
    return 1j * n_low * wh


def ifrk4_advance(c_low, omega, k, sigma, dt, nsteps, M):
    """Lawson IF-RK4: advance low-mode coefficients (..., N) by nsteps of dt."""
    u = np.array(c_low, dtype=complex)
    N = u.shape[-1]
    w = np.asarray(omega[:N], dtype=float)
    n_low = np.arange(1, N + 1)
    e1 = np.exp(1j * w * dt)
    e2 = np.exp(1j * w * dt / 2)
    for _ in range(nsteps):
        k1 = _nl_term(u, n_low, k, sigma, M)
        k2 = _nl_term(e2 * (u + 0.5 * dt * k1), n_low, k, sigma, M)
        k3 = _nl_term(e2 * u + 0.5 * dt * k2, n_low, k, sigma, M)
        k4 = _nl_term(e1 * u + dt * e2 * k3, n_low, k, sigma, M)
        u = e1 * u + (dt / 6.0) * (e1 * k1 + 2.0 * e2 * (k2 + k3) + k4)
    return u


def ifrk4_advance_rows(c_low, omega, k, sigma, T, dts, M):
    """Advance each row of (R, N) coefficients to time T with its own step bound dts[r].

    Row r takes ceil(|T| / dts[r]) equal steps.  Returns (coeffs, steps per row).
    """
    c = np.array(c_low, dtype=complex)
    steps = np.maximum(1, np.ceil(np.abs(T) / np.asarray(dts, dtype=float) - 1e-9)).astype(np.int64)
    out = np.empty_like(c)
    # rows sharing a step count run as one batch
    for m in np.unique(steps):
        rows = steps == m
        out[rows] = ifrk4_advance(c[rows], omega, k, sigma, T / m, int(m), M)
    return out, steps
