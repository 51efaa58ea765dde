# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.

Operation-for-operation mirror of ``_pycore``; the two backends must produce
bit-identical output for the same inputs. Any change here has to be applied
there as well (``tests/test_backends.py`` enforces this).
"""

from libc.math cimport log, exp, expm1, pow, cos, sqrt, fabs, ceil, NAN, INFINITY
from libc.stdlib cimport malloc, realloc, free
from libc.stdint cimport uint64_t, int64_t

BACKEND = "compiled"

cdef extern from *:
    """
    #include <stdint.h>
    static inline void exs_philox(uint64_t *c, uint64_t k0, uint64_t k1) {
        const uint64_t M0 = 0xD2E7470EE14C6C93ULL, M1 = 0xCA5A826395121157ULL;
        const uint64_t W0 = 0x9E3779B97F4A7C15ULL, W1 = 0xBB67AE8584CAA73BULL;
        int r;
        for (r = 0; r < 10; r++) {
            unsigned __int128 p0 = (unsigned __int128)M0 * c[0];
            unsigned __int128 p1 = (unsigned __int128)M1 * c[2];
            uint64_t hi0 = (uint64_t)(p0 >> 64), lo0 = (uint64_t)p0;
            uint64_t hi1 = (uint64_t)(p1 >> 64), lo1 = (uint64_t)p1;
            uint64_t n0 = hi1 ^ c[1] ^ k0;
            uint64_t n2 = hi0 ^ c[3] ^ k1;
            c[0] = n0; c[1] = lo1; c[2] = n2; c[3] = lo0;
            k0 += W0; k1 += W1;
        }
    }
    """
    void exs_philox(uint64_t *c, uint64_t k0, uint64_t k1) nogil

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.1102230246251565e-16

OK = 0
ERR_ITERATION_CAP = 1
K_UNIT, K_DECAY, K_ONE_MINUS = 0, 1, 2
R_CONST, R_BETA = 0, 1
M_EXACT, M_FIXED, M_STOP_BOUNDED, M_STOP_MEAN = 0, 1, 2, 3
V_OU_GAMMA, V_GL = 0, 1

cdef enum:
    C_OK = 0
    C_ERR_CAP = 1
    C_ERR_MEM = 2
    CK_UNIT = 0
    CK_DECAY = 1
    CK_ONE_MINUS = 2
    CR_CONST = 0
    CR_BETA = 1
    CM_EXACT = 0
    CM_FIXED = 1
    CM_STOP_BOUNDED = 2
    CM_STOP_MEAN = 3
    CV_OU_GAMMA = 0


cdef struct Stream:
    uint64_t k0
    uint64_t k1
    uint64_t ctr
    uint64_t blk
    int has
    uint64_t w[4]


cdef struct Law:
    int kernel
    int rkind
    double c
    double a
    double b
    double lam
    double h
    int nmix
    double *mlam
    double *mcum
    double bound


cdef struct Stats:
    int64_t count
    int64_t rej
    int err


cdef inline void st_init(Stream *st, uint64_t seed, uint64_t sid, uint64_t ctr) noexcept nogil:
    st.k0 = seed
    st.k1 = sid
    st.ctr = ctr
    st.has = 0
    st.blk = 0


cdef inline uint64_t next_u64(Stream *st) noexcept nogil:
    cdef uint64_t b = st.ctr >> 2
    if st.has == 0 or b != st.blk:
        st.w[0] = b
        st.w[1] = 0
        st.w[2] = 0
        st.w[3] = 0
        exs_philox(st.w, st.k0, st.k1)
        st.blk = b
        st.has = 1
    cdef uint64_t w = st.w[st.ctr & 3]
    st.ctr += 1
    return w


cdef uint64_t c_split_id(uint64_t seed, uint64_t sid, uint64_t index) noexcept nogil:
    cdef uint64_t c[4]
    c[0] = index
    c[1] = 1
    c[2] = 0
    c[3] = 0
    exs_philox(c, seed, sid)
    return c[0]


def split_id(seed, stream_id, index):
    return c_split_id(<uint64_t>seed, <uint64_t>stream_id, <uint64_t>(index & 0xFFFFFFFFFFFFFFFF))


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64-10 block function."""
    cdef uint64_t c[4]
    c[0] = c0
    c[1] = c1
    c[2] = c2
    c[3] = c3
    exs_philox(c, <uint64_t>k0, <uint64_t>k1)
    return c[0], c[1], c[2], c[3]


cdef inline double uniform01(Stream *st) noexcept nogil:
    return <double>(next_u64(st) >> 11) * INV_2_53


cdef inline double uniform_open(Stream *st) noexcept nogil:
    return (<double>(next_u64(st) >> 11) + 0.5) * INV_2_53


cdef inline double normal(Stream *st) noexcept nogil:
    cdef double u1 = uniform_open(st)
    cdef double u2 = uniform01(st)
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef double std_gamma(Stream *st, double a) noexcept nogil:
    cdef double g, u, d, c, x, v, xx
    if a == 1.0:
        return -log(uniform_open(st))
    if a < 1.0:
        g = std_gamma(st, a + 1.0)
        u = uniform_open(st)
        return g * pow(u, 1.0 / a)
    d = a - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = normal(st)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform_open(st)
        xx = x * x
        if u < 1.0 - 0.0331 * xx * xx:
            return d * v
        if log(u) < 0.5 * xx + d * (1.0 - v + log(v)):
            return d * v


cdef inline double log_std_gamma(Stream *st, double a) noexcept nogil:
    cdef double g, u
    if a < 1.0:
        g = std_gamma(st, a + 1.0)
        u = uniform_open(st)
        return log(g) + log(u) / a
    return log(std_gamma(st, a))


cdef inline double beta(Stream *st, double a, double b) noexcept nogil:
    cdef double lx, ly, t, e
    if a == 1.0 and b == 1.0:
        return uniform_open(st)
    if b == 1.0:
        return exp(log(uniform_open(st)) / a)
    if a == 1.0:
        return -expm1(log(uniform_open(st)) / b)
    lx = log_std_gamma(st, a)
    ly = log_std_gamma(st, b)
    t = ly - lx
    if t > 0.0:
        e = exp(-t)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(t))


# --------------------------------------------------------------------------
# single-draw wrappers

def draw_u64(seed, sid, ctr):
    cdef Stream st
    st_init(&st, seed, sid, ctr)
    cdef uint64_t w = next_u64(&st)
    return w, st.ctr


def draw_uniform(seed, sid, ctr):
    cdef Stream st
    st_init(&st, seed, sid, ctr)
    cdef double x = uniform01(&st)
    return x, st.ctr


def draw_normal(seed, sid, ctr):
    cdef Stream st
    st_init(&st, seed, sid, ctr)
    cdef double x = normal(&st)
    return x, st.ctr


def draw_gamma(seed, sid, ctr, double shape):
    cdef Stream st
    st_init(&st, seed, sid, ctr)
    cdef double x = std_gamma(&st, shape)
    return x, st.ctr


def draw_beta(seed, sid, ctr, double a, double b):
    cdef Stream st
    st_init(&st, seed, sid, ctr)
    cdef double x = beta(&st, a, b)
    return x, st.ctr


def uniform_array(seed, sid, ctr, double[::1] out):
    cdef Stream st
    cdef Py_ssize_t i
    st_init(&st, seed, sid, ctr)
    with nogil:
        for i in range(out.shape[0]):
            out[i] = uniform01(&st)
    return st.ctr


def uniform_open_array(seed, sid, ctr, double[::1] out):
    cdef Stream st
    cdef Py_ssize_t i
    st_init(&st, seed, sid, ctr)
    with nogil:
        for i in range(out.shape[0]):
            out[i] = uniform_open(&st)
    return st.ctr


def normal_array(seed, sid, ctr, double[::1] out):
    cdef Stream st
    cdef Py_ssize_t i
    st_init(&st, seed, sid, ctr)
    with nogil:
        for i in range(out.shape[0]):
            out[i] = normal(&st)
    return st.ctr


def gamma_array(seed, sid, ctr, double shape, double[::1] out):
    cdef Stream st
    cdef Py_ssize_t i
    st_init(&st, seed, sid, ctr)
    with nogil:
        for i in range(out.shape[0]):
            out[i] = std_gamma(&st, shape)
    return st.ctr


def beta_array(seed, sid, ctr, double a, double b, double[::1] out):
    cdef Stream st
    cdef Py_ssize_t i
    st_init(&st, seed, sid, ctr)
    with nogil:
        for i in range(out.shape[0]):
            out[i] = beta(&st, a, b)
    return st.ctr


# --------------------------------------------------------------------------
# Dirichlet-mean machinery

cdef class _LawHolder:
    """Keeps the mixture arrays alive while a ``Law`` struct points into them."""
    cdef Law law
    cdef double[::1] mlam
    cdef double[::1] mcum

    def __init__(self, law):
        import numpy as np
        kernel, rkind, c, a, b, lam, h, mlam, mcum, bound = law
        self.mlam = np.ascontiguousarray(np.asarray(mlam, dtype=np.float64).reshape(-1))
        self.mcum = np.ascontiguousarray(np.asarray(mcum, dtype=np.float64).reshape(-1))
        self.law.kernel = kernel
        self.law.rkind = rkind
        self.law.c = c
        self.law.a = a
        self.law.b = b
        self.law.lam = lam
        self.law.h = h
        self.law.nmix = self.mlam.shape[0]
        self.law.mlam = &self.mlam[0] if self.law.nmix > 0 else NULL
        self.law.mcum = &self.mcum[0] if self.law.nmix > 0 else NULL
        self.law.bound = bound


cdef inline double draw_r(Stream *st, Law *law) noexcept nogil:
    if law.rkind == CR_CONST:
        return law.c
    return law.c * beta(st, law.a, law.b)


cdef double sample_y(Stream *st, Law *law) noexcept nogil:
    cdef double lam = law.lam
    cdef double ul, r, u, y
    cdef int j
    if law.nmix > 0:
        ul = uniform01(st)
        j = 0
        while j < law.nmix - 1 and not (ul < law.mcum[j]):
            j += 1
        lam = law.mlam[j]
    r = draw_r(st, law)
    if law.kernel == CK_UNIT:
        return r
    u = uniform_open(st)
    if law.kernel == CK_DECAY:
        return r * exp(-lam * u * law.h)
    y = -expm1(-lam * u * law.h)
    y = r * y
    if law.nmix > 0:
        y = y / lam
    return y


def y_array(seed, sid, ctr, law, double[::1] out):
    cdef Stream st
    cdef Py_ssize_t i
    cdef _LawHolder lh = _LawHolder(law)
    st_init(&st, seed, sid, ctr)
    with nogil:
        for i in range(out.shape[0]):
            out[i] = sample_y(&st, &lh.law)
    return st.ctr


cdef inline double hterm(double x, double m, double yv, double delta) noexcept nogil:
    cdef double d = yv - m
    cdef double z, w
    if d == 0.0:
        return INFINITY
    z = (x - m) / d
    if z < 0.0 or z > 1.0:
        return 0.0
    w = 1.0 - z
    if w == 0.0 and delta < 1.0:
        return INFINITY
    return delta * pow(w, delta - 1.0) / fabs(d)


cdef double cftp_block(Stream *st, Law *law, double delta, double c_y,
                       uint64_t cap, Stats *stats) noexcept nogil:
    cdef double c_h = delta
    cdef uint64_t start = st.ctr
    cdef Py_ssize_t size = 0, capacity = 64, k
    cdef double *ys = <double *>malloc(capacity * sizeof(double))
    cdef double *y2s = <double *>malloc(capacity * sizeof(double))
    cdef double *tmp
    cdef double u = 0.0, y = 0.0, y2 = 0.0, m, thr, yi, yi2, lo, hi
    cdef double up, t, one_minus_v, v, x = 0.0, dens
    cdef int xi
    if ys == NULL or y2s == NULL:
        free(ys)
        free(y2s)
        stats.err = C_ERR_MEM
        return NAN
    while True:
        u = uniform01(st)
        y = sample_y(st, law)
        y2 = sample_y(st, law)
        if size == capacity:
            capacity *= 2
            tmp = <double *>realloc(ys, capacity * sizeof(double))
            if tmp == NULL:
                free(ys)
                free(y2s)
                stats.err = C_ERR_MEM
                return NAN
            ys = tmp
            tmp = <double *>realloc(y2s, capacity * sizeof(double))
            if tmp == NULL:
                free(ys)
                free(y2s)
                stats.err = C_ERR_MEM
                return NAN
            y2s = tmp
        ys[size] = y
        y2s[size] = y2
        size += 1
        if u <= fabs(y - y2) * c_h / (2.0 * c_y):
            break
        if st.ctr - start > cap:
            free(ys)
            free(y2s)
            stats.err = C_ERR_CAP
            return NAN
    m = (y if y < y2 else y2) + 2.0 * c_y * u / c_h
    stats.count += size
    thr = c_h / c_y
    k = size - 2
    while k >= 0:
        yi = ys[k]
        yi2 = y2s[k]
        lo = yi if yi < yi2 else yi2
        hi = yi if yi > yi2 else yi2
        while True:
            up = uniform_open(st)
            xi = uniform01(st) < 0.5
            t = log(uniform_open(st)) / delta
            one_minus_v = exp(t)
            v = -expm1(t)
            x = one_minus_v * m + v * (yi if xi else yi2)
            if x < lo or x > hi:
                break
            dens = hterm(x, m, yi, delta) + hterm(x, m, yi2, delta)
            if up * dens > thr:
                break
            stats.rej += 1
            if st.ctr - start > cap:
                free(ys)
                free(y2s)
                stats.err = C_ERR_CAP
                return NAN
        m = x
        k -= 1
    free(ys)
    free(y2s)
    return m


cdef double dm_exact(Stream *st, Law *law, double delta, uint64_t cap,
                     Stats *stats) noexcept nogil:
    cdef int nb, j
    cdef double dj, total, acc, g
    cdef double *ms
    cdef double *gs
    if law.kernel == CK_UNIT and law.rkind == CR_CONST:
        return law.c
    if delta <= 1.0:
        return cftp_block(st, law, delta, law.bound, cap, stats)
    nb = <int>ceil(delta)
    dj = delta / nb
    ms = <double *>malloc(nb * sizeof(double))
    gs = <double *>malloc(nb * sizeof(double))
    if ms == NULL or gs == NULL:
        free(ms)
        free(gs)
        stats.err = C_ERR_MEM
        return NAN
    for j in range(nb):
        ms[j] = cftp_block(st, law, dj, law.bound, cap, stats)
        if stats.err != C_OK:
            free(ms)
            free(gs)
            return NAN
    total = 0.0
    for j in range(nb):
        g = std_gamma(st, dj)
        gs[j] = g
        total += g
    acc = 0.0
    for j in range(nb):
        acc += gs[j] / total * ms[j]
    free(ms)
    free(gs)
    return acc


cdef double dm_truncated(Stream *st, Law *law, double delta, int method,
                         int64_t n_fixed, double eps, double tail_scale,
                         Stats *stats) noexcept nogil:
    cdef double acc = 0.0, prod = 1.0, t, r, v, w, y
    cdef int64_t n = 0
    while True:
        n += 1
        t = log(uniform_open(st)) / delta
        r = exp(t)
        v = -expm1(t)
        w = v * prod
        acc += w * sample_y(st, law)
        prod *= r
        if method == CM_FIXED:
            if n >= n_fixed:
                break
        elif tail_scale * prod < eps:
            break
    y = sample_y(st, law)
    stats.count += n
    return acc + prod * y


cdef inline double dm_draw_c(Stream *st, Law *law, double delta, int method,
                             int64_t n_fixed, double eps, double tail_scale,
                             uint64_t cap, Stats *stats) noexcept nogil:
    if method == CM_EXACT:
        return dm_exact(st, law, delta, cap, stats)
    return dm_truncated(st, law, delta, method, n_fixed, eps, tail_scale, stats)


def dm_draw(seed, sid, ctr, law, double delta, int method, int64_t n_fixed,
            double eps, double tail_scale, uint64_t cap):
    """Single Dirichlet-mean draw; see ``_pycore.dm_draw``."""
    cdef Stream st
    cdef Stats stats
    cdef _LawHolder lh = _LawHolder(law)
    cdef double val
    st_init(&st, seed, sid, ctr)
    stats.count = 0
    stats.rej = 0
    stats.err = C_OK
    with nogil:
        val = dm_draw_c(&st, &lh.law, delta, method, n_fixed, eps, tail_scale,
                        cap, &stats)
    return val, stats.count, stats.rej, stats.err, st.ctr


def dm_batch(seed, sid, start, law, double delta, int method, int64_t n_fixed,
             double eps, double tail_scale, uint64_t cap, double[::1] out_val,
             int64_t[::1] out_count, int64_t[::1] out_rej):
    """Fill arrays with draws; draw i uses the child stream ``split(start+i)``."""
    cdef _LawHolder lh = _LawHolder(law)
    cdef uint64_t s = seed, p = sid, st0 = start
    cdef Stream st
    cdef Stats stats
    cdef Py_ssize_t i
    cdef int err = C_OK
    with nogil:
        for i in range(out_val.shape[0]):
            st_init(&st, s, c_split_id(s, p, st0 + i), 0)
            stats.count = 0
            stats.rej = 0
            stats.err = C_OK
            out_val[i] = dm_draw_c(&st, &lh.law, delta, method, n_fixed, eps,
                                   tail_scale, cap, &stats)
            out_count[i] = stats.count
            out_rej[i] = stats.rej
            if stats.err != C_OK:
                err = stats.err
                break
    return err


def dm_coupled_batch(seed, sid, start, law, double delta, int64_t n,
                     uint64_t cap, double[::1] out_exact, double[::1] out_trunc):
    """Coupled (exact, fixed-N truncated) pairs; draw i uses ``split(start+i)``."""
    cdef _LawHolder lh = _LawHolder(law)
    cdef uint64_t s = seed, p = sid, st0 = start
    cdef Stream st
    cdef Stats stats
    cdef Py_ssize_t i
    cdef int64_t j
    cdef int err = C_OK
    cdef double acc, prod, t, r, v, y, tail
    with nogil:
        for i in range(out_exact.shape[0]):
            st_init(&st, s, c_split_id(s, p, st0 + i), 0)
            stats.count = 0
            stats.rej = 0
            stats.err = C_OK
            acc = 0.0
            prod = 1.0
            for j in range(n):
                t = log(uniform_open(&st)) / delta
                r = exp(t)
                v = -expm1(t)
                acc += v * prod * sample_y(&st, &lh.law)
                prod *= r
            t = log(uniform_open(&st)) / delta
            r = exp(t)
            v = -expm1(t)
            y = sample_y(&st, &lh.law)
            tail = dm_exact(&st, &lh.law, delta, cap, &stats)
            out_trunc[i] = acc + prod * y
            out_exact[i] = acc + v * prod * y + r * prod * tail
            if stats.err != C_OK:
                err = stats.err
                break
    return err


cdef void joint_pair_c(Stream *st, int rkind, double c, double a, double b,
                       double lam, double h, double delta, int method,
                       int64_t n_fixed, double eps, double r_bound,
                       Stats *stats, double *o1, double *o2, double *gout) noexcept nogil:
    cdef double g = std_gamma(st, delta)
    cdef double acc1 = 0.0, acc2 = 0.0, prod = 1.0, t, r, v, w, rr, u
    cdef int64_t n = 0
    while True:
        n += 1
        t = log(uniform_open(st)) / delta
        r = exp(t)
        v = -expm1(t)
        w = v * prod
        rr = c if rkind == CR_CONST else c * beta(st, a, b)
        u = uniform_open(st)
        acc1 += w * rr
        acc2 += w * rr * exp(-lam * u * h)
        prod *= r
        if method == CM_FIXED:
            if n >= n_fixed:
                break
        elif r_bound * prod < eps:
            break
    rr = c if rkind == CR_CONST else c * beta(st, a, b)
    u = uniform_open(st)
    acc1 += prod * rr
    acc2 += prod * rr * exp(-lam * u * h)
    stats.count += n
    o1[0] = g * acc1
    o2[0] = g * acc2
    gout[0] = g


def joint_pair(seed, sid, ctr, int rkind, double c, double a, double b,
               double lam, double h, double delta, int method, int64_t n_fixed,
               double eps, double r_bound):
    """Shared-stick draw of (int dZ, int e^{-lam(T-s)} dZ, gamma increment)."""
    cdef Stream st
    cdef Stats stats
    cdef double o1, o2, g
    st_init(&st, seed, sid, ctr)
    stats.count = 0
    stats.rej = 0
    stats.err = C_OK
    joint_pair_c(&st, rkind, c, a, b, lam, h, delta, method, n_fixed, eps,
                 r_bound, &stats, &o1, &o2, &g)
    return o1, o2, g, stats.count, st.ctr


# --------------------------------------------------------------------------
# path simulation

def simulate_chunk(seed, sid, start, int variant, double rho, double theta,
                   int rkind, double c, double a, double b, double drift,
                   lams_in, v0s_in, times_in, double s0, int method,
                   int64_t n_fixed, double eps, uint64_t cap, bint superposed,
                   int path_mode, bint skip_last_normal, bint independent_lev,
                   double[:, ::1] out_price, double[:, ::1] out_tau,
                   double[:, ::1] out_lev, double[:, :, ::1] out_v,
                   double[:, :, ::1] out_o1, double[:, :, ::1] out_o2,
                   int64_t[::1] out_work, int64_t[::1] out_normals):
    """Simulate ``out_price.shape[0]`` paths; see ``_pycore.simulate_chunk``."""
    import numpy as np
    cdef double[::1] lams = np.ascontiguousarray(lams_in, dtype=np.float64)
    cdef double[::1] v0s = np.ascontiguousarray(v0s_in, dtype=np.float64)
    cdef double[::1] times = np.ascontiguousarray(times_in, dtype=np.float64)
    cdef Py_ssize_t nf = lams.shape[0], m = times.shape[0], n = out_price.shape[0]
    cdef double[::1] mcum = np.empty(nf, dtype=np.float64)
    cdef double[::1] v = np.empty(nf, dtype=np.float64)
    cdef uint64_t s = seed, p = sid, st0 = start
    cdef Py_ssize_t i, k, j
    cdef double lam_tot = 0.0, lev_scale, r_bound, acc
    cdef Stream st
    cdef Stats stats
    cdef Law law
    cdef double price, t_prev, dt, tau, lev, delta, bound, e, bb, g, mm
    cdef double o1, o2, jump, lam, mu, x
    cdef int jm
    cdef int64_t normals
    cdef int err = C_OK
    for j in range(nf):
        lam_tot += lams[j]
    lev_scale = c if variant == CV_OU_GAMMA else 1.0
    r_bound = c
    acc = 0.0
    for j in range(nf):
        acc += lams[j] / lam_tot
        mcum[j] = acc
    with nogil:
        for i in range(n):
            st_init(&st, s, c_split_id(s, p, st0 + i), 0)
            stats.count = 0
            stats.rej = 0
            stats.err = C_OK
            for j in range(nf):
                v[j] = v0s[j]
            price = s0
            t_prev = 0.0
            normals = 0
            for k in range(m):
                dt = times[k] - t_prev
                t_prev = times[k]
                tau = 0.0
                lev = 0.0
                if theta > 0.0 and superposed:
                    delta = theta * lam_tot * dt
                    bound = 0.0
                    for j in range(nf):
                        e = -expm1(-lams[j] * dt)
                        tau += e * v[j] / lams[j]
                        bb = r_bound * e / lams[j]
                        if bb > bound:
                            bound = bb
                    law.kernel = CK_ONE_MINUS
                    law.rkind = rkind
                    law.c = c
                    law.a = a
                    law.b = b
                    law.lam = lams[0]
                    law.h = dt
                    law.nmix = <int>nf
                    law.mlam = &lams[0]
                    law.mcum = &mcum[0]
                    law.bound = bound
                    g = std_gamma(&st, delta)
                    mm = dm_draw_c(&st, &law, delta, method, n_fixed, eps,
                                   bound, cap, &stats)
                    tau += g * mm
                    lev = lev_scale * g
                    for j in range(nf):
                        v[j] = NAN
                        out_o1[i, k, j] = NAN
                        out_o2[i, k, j] = NAN
                elif theta > 0.0:
                    for j in range(nf):
                        lam = lams[j]
                        delta = theta * lam * dt
                        e = -expm1(-lam * dt)
                        law.kernel = CK_ONE_MINUS
                        law.lam = lam
                        law.h = dt
                        law.nmix = 0
                        law.mlam = NULL
                        law.mcum = NULL
                        law.c = c
                        if variant == CV_OU_GAMMA:
                            law.rkind = CR_CONST
                            law.a = 0.0
                            law.b = 0.0
                            law.bound = c * e
                            g = std_gamma(&st, delta)
                            mm = dm_draw_c(&st, &law, delta, method, n_fixed,
                                           eps, c * e, cap, &stats)
                            o1 = c * g
                            jump = g * mm
                            o2 = o1 - jump
                            lev += o1
                        elif path_mode == 0 and method == CM_EXACT:
                            law.rkind = rkind
                            law.a = a
                            law.b = b
                            law.bound = r_bound * e
                            g = std_gamma(&st, delta)
                            mm = dm_draw_c(&st, &law, delta, method, n_fixed,
                                           eps, r_bound * e, cap, &stats)
                            jump = g * mm
                            o1 = NAN
                            o2 = NAN
                            lev += g
                        else:
                            jm = CM_STOP_BOUNDED if method == CM_EXACT else method
                            joint_pair_c(&st, rkind, c, a, b, lam, dt, delta, jm,
                                         n_fixed, eps, r_bound, &stats, &o1,
                                         &o2, &g)
                            jump = o1 - o2
                            lev += g
                        if stats.err != C_OK:
                            break
                        tau += (e * v[j] + jump) / lam
                        v[j] = (1.0 - e) * v[j] + o2
                        out_o1[i, k, j] = o1
                        out_o2[i, k, j] = o2
                else:
                    for j in range(nf):
                        e = -expm1(-lams[j] * dt)
                        tau += e * v[j] / lams[j]
                        v[j] = (1.0 - e) * v[j]
                        out_o1[i, k, j] = 0.0
                        out_o2[i, k, j] = 0.0
                if stats.err != C_OK:
                    break
                if independent_lev and theta > 0.0:
                    lev = lev_scale * std_gamma(&st, theta * lam_tot * dt)
                mu = drift * dt - 0.5 * tau + rho * lev
                if k == m - 1 and skip_last_normal:
                    out_price[i, k] = NAN
                else:
                    x = mu + sqrt(tau) * normal(&st)
                    normals += 1
                    price = price * exp(x)
                    out_price[i, k] = price
                out_tau[i, k] = tau
                out_lev[i, k] = lev
                for j in range(nf):
                    out_v[i, k, j] = v[j]
            if stats.err != C_OK:
                err = stats.err
                break
            out_work[i] = stats.count
            out_normals[i] = normals
    return err
