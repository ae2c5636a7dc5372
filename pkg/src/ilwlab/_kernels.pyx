# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same signatures as ``_kernels_py``."""
import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, sqrt, fabs, cos, sin

cnp.import_array()


def mittag_leffler_sum(double delta, double n, long terms):
    cdef double c = (delta * n) * (delta * n)
    cdef double s = 0.0, comp = 0.0, y, t, kp
    cdef long k
    # Kahan summation, smallest terms first
    for k in range(terms, 0, -1):
        kp = k * M_PI
        y = 1.0 / (kp * kp + c) - comp
        t = s + y
        comp = (t - s) - y
        s = t
    return 6.0 * n * n * s


def hermite(int k, x, double sigma):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i, m = flat.shape[0]
    cdef int j
    cdef double xi, h, hp, tmp
    for i in range(m):
        xi = flat[i]
        if k == 0:
            out[i] = 1.0
            continue
        hp = 1.0
        h = xi
        for j in range(2, k + 1):
            tmp = xi * h - (j - 1) * sigma * hp
            hp = h
            h = tmp
        out[i] = h
    return out.reshape(np.shape(x))


def hermite_row_mean(int k, grid, double sigma):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1], r, c
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(rows)
    cdef int j
    cdef double xi, h, hp, tmp, acc
    for r in range(rows):
        acc = 0.0
        for c in range(cols):
            xi = g[r, c]
            if k == 0:
                h = 1.0
            else:
                hp = 1.0
                h = xi
                for j in range(2, k + 1):
                    tmp = xi * h - (j - 1) * sigma * hp
                    hp = h
                    h = tmp
            acc += h
        out[r] = acc / cols
    return out


def energy_cross(xa, wa, xb, wb, chunk=None):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a = np.ascontiguousarray(xa, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] b = np.ascontiguousarray(xb, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] va = np.ascontiguousarray(wa, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vb = np.ascontiguousarray(wb, dtype=np.float64)
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1], i, j, d
    cdef double total = 0.0, row, acc, diff
    for i in range(na):
        row = 0.0
        for j in range(nb):
            acc = 0.0
            for d in range(dim):
                diff = a[i, d] - b[j, d]
                acc += diff * diff
            row += vb[j] * sqrt(acc)
        total += va[i] * row
    return total


def chaos_convolution(inv_symbol, int k, long n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inv = np.ascontiguousarray(inv_symbol, dtype=np.float64)
    cdef long N = inv.shape[0] - 1
    if k == 1:
        if n == 0 or abs(n) > N:
            return 0.0
        return inv[abs(n)]
    return _conv(inv, N, k, n)


cdef double _conv(double[::1] inv, long N, int k, long n):
    # recursion over the first k-1 frequencies; the last one is pinned by n
    cdef long m
    cdef double total = 0.0
    if k == 1:
        if n == 0 or n > N or n < -N:
            return 0.0
        return inv[n if n > 0 else -n]
    for m in range(-N, N + 1):
        if m == 0:
            continue
        # remaining k-1 frequencies sum to at most (k-1)N in modulus
        if fabs(<double>(n - m)) > (k - 1) * N:
            continue
        total += inv[m if m > 0 else -m] * _conv(inv, N, k - 1, n - m)
    return total


cdef inline double _herm(double x, int k, double sigma) noexcept nogil:
    cdef double h, hp, tmp
    cdef int p
    if k == 0:
        return 1.0
    hp = 1.0
    h = x
    for p in range(2, k + 1):
        tmp = x * h - (p - 1) * sigma * hp
        hp = h
        h = tmp
    return h


cdef void _nl_term(double[:, ::1] ct, double[:, ::1] st, double[:, ::1] ctt,
                   double[:, ::1] stt, double[::1] ar, double[::1] ai,
                   int N, int M, int k, double sigma, double[::1] ev, double[::1] od,
                   double[::1] outr, double[::1] outi) noexcept nogil:
    # i n F[H_k(u; sigma)](n) for the low modes, by direct DFT.  Grid points
    # j and M - j share cos and flip sin, so only j <= M/2 is synthesized.
    cdef int n, j, half = M // 2
    cdef double cs, sn, sr, si, wa, wb, scale = 2.0 * M_PI / M
    for j in range(half + 1):
        cs = 0.0
        sn = 0.0
        for n in range(N):
            cs += ar[n] * ctt[j, n]
            sn += ai[n] * stt[j, n]
        wa = _herm((cs - sn) / M_PI, k, sigma)
        if j == 0 or j == half:
            ev[j] = wa
            od[j] = 0.0
        else:
            wb = _herm((cs + sn) / M_PI, k, sigma)
            ev[j] = wa + wb
            od[j] = wa - wb
    for n in range(N):
        sr = 0.0
        si = 0.0
        for j in range(half + 1):
            sr += ev[j] * ct[n, j]
            si -= od[j] * st[n, j]
        sr *= scale
        si *= scale
        # multiply by i (n + 1)
        outr[n] = -(n + 1) * si
        outi[n] = (n + 1) * sr


cdef class _Tables:
    # DFT tables and RK4 workspace for one (N, M)
    cdef int N, M
    cdef double[:, ::1] ct, st, ctt, stt
    cdef double[::1] ev, od, ar, ai, k1r, k1i, k2r, k2i, k3r, k3i, k4r, k4i
    cdef double[::1] e1r, e1i, e2r, e2i

    def __init__(self, int N, int M):
        self.N = N
        self.M = M
        xs = 2.0 * np.pi * np.arange(M // 2 + 1) / M
        nn = np.arange(1, N + 1)[:, None]
        self.ct = np.ascontiguousarray(np.cos(nn * xs))
        self.st = np.ascontiguousarray(np.sin(nn * xs))
        # transposed copies keep both DFT directions on contiguous rows
        self.ctt = np.ascontiguousarray(np.asarray(self.ct).T)
        self.stt = np.ascontiguousarray(np.asarray(self.st).T)
        self.ev = np.empty(M // 2 + 1)
        self.od = np.empty(M // 2 + 1)
        self.ar, self.ai = np.empty(N), np.empty(N)
        self.k1r, self.k1i = np.empty(N), np.empty(N)
        self.k2r, self.k2i = np.empty(N), np.empty(N)
        self.k3r, self.k3i = np.empty(N), np.empty(N)
        self.k4r, self.k4i = np.empty(N), np.empty(N)
        self.e1r, self.e1i = np.empty(N), np.empty(N)
        self.e2r, self.e2i = np.empty(N), np.empty(N)

    cdef void set_step(self, double[::1] w, double dt):
        cdef int n
        for n in range(self.N):
            self.e1r[n] = cos(w[n] * dt)
            self.e1i[n] = sin(w[n] * dt)
            self.e2r[n] = cos(w[n] * dt * 0.5)
            self.e2i[n] = sin(w[n] * dt * 0.5)

    cdef void run(self, double[::1] ur, double[::1] ui, int k, double sigma,
                  double dt, long nsteps) noexcept nogil:
        cdef int n, N = self.N, M = self.M
        cdef long s
        cdef double xr, xi, yr, yi, h6 = dt / 6.0, hh = 0.5 * dt
        for s in range(nsteps):
            _nl_term(self.ct, self.st, self.ctt, self.stt, ur, ui, N, M, k, sigma,
                     self.ev, self.od, self.k1r, self.k1i)
            # stage 2: e2 * (u + dt/2 k1)
            for n in range(N):
                xr = ur[n] + hh * self.k1r[n]
                xi = ui[n] + hh * self.k1i[n]
                self.ar[n] = self.e2r[n] * xr - self.e2i[n] * xi
                self.ai[n] = self.e2r[n] * xi + self.e2i[n] * xr
            _nl_term(self.ct, self.st, self.ctt, self.stt, self.ar, self.ai, N, M, k, sigma,
                     self.ev, self.od, self.k2r, self.k2i)
            # stage 3: e2 * u + dt/2 k2
            for n in range(N):
                self.ar[n] = self.e2r[n] * ur[n] - self.e2i[n] * ui[n] + hh * self.k2r[n]
                self.ai[n] = self.e2r[n] * ui[n] + self.e2i[n] * ur[n] + hh * self.k2i[n]
            _nl_term(self.ct, self.st, self.ctt, self.stt, self.ar, self.ai, N, M, k, sigma,
                     self.ev, self.od, self.k3r, self.k3i)
            # stage 4: e1 * u + dt * e2 * k3
            for n in range(N):
                self.ar[n] = (self.e1r[n] * ur[n] - self.e1i[n] * ui[n]
                              + dt * (self.e2r[n] * self.k3r[n] - self.e2i[n] * self.k3i[n]))
                self.ai[n] = (self.e1r[n] * ui[n] + self.e1i[n] * ur[n]
                              + dt * (self.e2r[n] * self.k3i[n] + self.e2i[n] * self.k3r[n]))
            _nl_term(self.ct, self.st, self.ctt, self.stt, self.ar, self.ai, N, M, k, sigma,
                     self.ev, self.od, self.k4r, self.k4i)
            for n in range(N):
                # e1 (u + dt/6 k1) + dt/3 e2 (k2 + k3) + dt/6 k4
                xr = ur[n] + h6 * self.k1r[n]
                xi = ui[n] + h6 * self.k1i[n]
                yr = self.k2r[n] + self.k3r[n]
                yi = self.k2i[n] + self.k3i[n]
                ur[n] = ((self.e1r[n] * xr - self.e1i[n] * xi)
                         + 2.0 * h6 * (self.e2r[n] * yr - self.e2i[n] * yi) + h6 * self.k4r[n])
                ui[n] = ((self.e1r[n] * xi + self.e1i[n] * xr)
                         + 2.0 * h6 * (self.e2r[n] * yi + self.e2i[n] * yr) + h6 * self.k4i[n])


def ifrk4_advance(c_low, omega, int k, double sigma, double dt, long nsteps, int M):
    """Lawson IF-RK4: advance low-mode coefficients (1-d complex) by nsteps of dt."""
    c = np.asarray(c_low, dtype=np.complex128)
    cdef int N = c.shape[0]
    cdef double[::1] w = np.ascontiguousarray(omega[:N], dtype=np.float64)
    cdef double[::1] ur = np.ascontiguousarray(c.real, dtype=np.float64).copy()
    cdef double[::1] ui = np.ascontiguousarray(c.imag, dtype=np.float64).copy()
    cdef _Tables tab = _Tables(N, M)
    tab.set_step(w, dt)
    with nogil:
        tab.run(ur, ui, k, sigma, dt, nsteps)
    return np.asarray(ur) + 1j * np.asarray(ui)


def ifrk4_advance_rows(c_low, omega, int k, double sigma, double T, dts, int M):
    """Advance each row of (R, N) coefficients to time T with its own step bound dts[r].

    Row r takes ceil(|T| / dts[r]) equal steps.  Returns (coeffs, steps per row).
    """
    c = np.asarray(c_low, dtype=np.complex128)
    cdef int R = c.shape[0], N = c.shape[1], r, n
    cdef double[::1] w = np.ascontiguousarray(omega[:N], dtype=np.float64)
    cdef double[:, ::1] re = np.ascontiguousarray(c.real, dtype=np.float64).copy()
    cdef double[:, ::1] im = np.ascontiguousarray(c.imag, dtype=np.float64).copy()
    steps = np.maximum(1, np.ceil(np.abs(T) / np.asarray(dts, dtype=float) - 1e-9)).astype(np.int64)
    cdef long[::1] st = steps
    cdef _Tables tab = _Tables(N, M)
    cdef double h
    for r in range(R):
        h = T / st[r]
        tab.set_step(w, h)
        with nogil:
            tab.run(re[r], im[r], k, sigma, h, st[r])
    return np.asarray(re) + 1j * np.asarray(im), steps
