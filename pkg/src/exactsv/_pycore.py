"""Pure-Python kernels.

This module is the fallback selected when the compiled ``_core`` extension is
unavailable. It mirrors ``_core.pyx`` operation for operation: same Philox
words, same draw order, same floating-point expression trees. Both backends
therefore produce bit-identical samples for a given ``(seed, stream_id)``.
"""

import math

BACKEND = "python"

M64 = 0xFFFFFFFFFFFFFFFF
_PM0 = 0xD2E7470EE14C6C93
_PM1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_SPLIT_TAG = 1

TWO_PI = 6.283185307179586
INV_2_53 = 1.1102230246251565e-16  # 2**-53
INF = float("inf")

# error codes shared with the compiled backend
OK = 0
ERR_ITERATION_CAP = 1

# kernel / scale / method codes shared with the compiled backend
K_UNIT, K_DECAY, K_ONE_MINUS = 0, 1, 2
R_CONST, R_BETA = 0, 1
M_EXACT, M_FIXED, M_STOP_BOUNDED, M_STOP_MEAN = 0, 1, 2, 3
V_OU_GAMMA, V_GL = 0, 1


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64-10 block function."""
    for _ in range(10):
        p0 = _PM0 * c0
        p1 = _PM1 * c2
        c0, c1, c2, c3 = ((p1 >> 64) ^ c1 ^ k0, p1 & M64,
                          (p0 >> 64) ^ c3 ^ k1, p0 & M64)
        k0 = (k0 + _W0) & M64
        k1 = (k1 + _W1) & M64
    return c0, c1, c2, c3


def split_id(seed, stream_id, index):
    return philox4x64(index & M64, _SPLIT_TAG, 0, 0, seed, stream_id)[0]


class _Stream:
    __slots__ = ("k0", "k1", "ctr", "blk", "words")

    def __init__(self, seed, sid, ctr):
        self.k0 = seed
        self.k1 = sid
        self.ctr = ctr
        self.blk = -1
        self.words = None

    def next_u64(self):
        b = self.ctr >> 2
        if b != self.blk:
            self.words = philox4x64(b & M64, 0, 0, 0, self.k0, self.k1)
            self.blk = b
        w = self.words[self.ctr & 3]
        self.ctr += 1
        return w


def _uniform01(st):
    return float(st.next_u64() >> 11) * INV_2_53


def _uniform_open(st):
    return (float(st.next_u64() >> 11) + 0.5) * INV_2_53


def _normal(st):
    u1 = _uniform_open(st)
    u2 = _uniform01(st)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)


def _std_gamma(st, a):
    if a == 1.0:
        return -math.log(_uniform_open(st))
    if a < 1.0:
        g = _std_gamma(st, a + 1.0)
        u = _uniform_open(st)
        return g * math.pow(u, 1.0 / a)
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _normal(st)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _uniform_open(st)
        xx = x * x
        if u < 1.0 - 0.0331 * xx * xx:
            return d * v
        if math.log(u) < 0.5 * xx + d * (1.0 - v + math.log(v)):
            return d * v


def _log_std_gamma(st, a):
    if a < 1.0:
        g = _std_gamma(st, a + 1.0)
        u = _uniform_open(st)
        return math.log(g) + math.log(u) / a
    return math.log(_std_gamma(st, a))


def _beta(st, a, b):
    # inverse-CDF forms when one shape is 1; exact and far cheaper
    if a == 1.0 and b == 1.0:
        return _uniform_open(st)
    if b == 1.0:
        return math.exp(math.log(_uniform_open(st)) / a)
    if a == 1.0:
        return -math.expm1(math.log(_uniform_open(st)) / b)
    lx = _log_std_gamma(st, a)
    ly = _log_std_gamma(st, b)
    t = ly - lx
    if t > 0.0:
        e = math.exp(-t)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(t))


# --------------------------------------------------------------------------
# public single-draw wrappers: (seed, sid, ctr, ...) -> (value, ctr)

def draw_u64(seed, sid, ctr):
    st = _Stream(seed, sid, ctr)
    return st.next_u64(), st.ctr


def draw_uniform(seed, sid, ctr):
    st = _Stream(seed, sid, ctr)
    return _uniform01(st), st.ctr


def draw_normal(seed, sid, ctr):
    st = _Stream(seed, sid, ctr)
    return _normal(st), st.ctr


def draw_gamma(seed, sid, ctr, shape):
    st = _Stream(seed, sid, ctr)
    return _std_gamma(st, shape), st.ctr


def draw_beta(seed, sid, ctr, a, b):
    st = _Stream(seed, sid, ctr)
    return _beta(st, a, b), st.ctr


def uniform_array(seed, sid, ctr, out):
    st = _Stream(seed, sid, ctr)
    for i in range(out.shape[0]):
        out[i] = _uniform01(st)
    return st.ctr


def uniform_open_array(seed, sid, ctr, out):
    st = _Stream(seed, sid, ctr)
    for i in range(out.shape[0]):
        out[i] = _uniform_open(st)
    return st.ctr


def normal_array(seed, sid, ctr, out):
    st = _Stream(seed, sid, ctr)
    for i in range(out.shape[0]):
        out[i] = _normal(st)
    return st.ctr


def gamma_array(seed, sid, ctr, shape, out):
    st = _Stream(seed, sid, ctr)
    for i in range(out.shape[0]):
        out[i] = _std_gamma(st, shape)
    return st.ctr


def beta_array(seed, sid, ctr, a, b, out):
    st = _Stream(seed, sid, ctr)
    for i in range(out.shape[0]):
        out[i] = _beta(st, a, b)
    return st.ctr


# --------------------------------------------------------------------------
# Dirichlet-mean machinery

class _Law:
    """Scale law of Y = R * k(U), optionally mixed over rates."""

    __slots__ = ("kernel", "rkind", "c", "a", "b", "lam", "h", "mlam", "mcum",
                 "bound")

    def __init__(self, law):
        (self.kernel, self.rkind, self.c, self.a, self.b, self.lam, self.h,
         mlam, mcum, self.bound) = law
        self.mlam = [float(x) for x in mlam]
        self.mcum = [float(x) for x in mcum]


def _draw_r(st, law):
    if law.rkind == R_CONST:
        return law.c
    return law.c * _beta(st, law.a, law.b)


def _sample_y(st, law):
    lam = law.lam
    nmix = len(law.mlam)
    if nmix > 0:
        ul = _uniform01(st)
        j = 0
        while j < nmix - 1 and not (ul < law.mcum[j]):
            j += 1
        lam = law.mlam[j]
    r = _draw_r(st, law)
    if law.kernel == K_UNIT:
        return r
    u = _uniform_open(st)
    if law.kernel == K_DECAY:
        return r * math.exp(-lam * u * law.h)
    y = -math.expm1(-lam * u * law.h)
    y = r * y
    if nmix > 0:
        y = y / lam
    return y


def y_array(seed, sid, ctr, law, out):
    st = _Stream(seed, sid, ctr)
    lw = _Law(law)
    for i in range(out.shape[0]):
        out[i] = _sample_y(st, lw)
    return st.ctr


def _hterm(x, m, yv, delta):
    d = yv - m
    if d == 0.0:
        return INF
    z = (x - m) / d
    if z < 0.0 or z > 1.0:
        return 0.0
    w = 1.0 - z
    if w == 0.0 and delta < 1.0:
        return INF
    return delta * math.pow(w, delta - 1.0) / abs(d)


def _cftp_block(st, law, delta, c_y, cap, stats):
    """One Double CFTP draw for delta <= 1; stats = [stack, rejections, err]."""
    c_h = delta
    start = st.ctr
    ys = []
    y2s = []
    while True:
        u = _uniform01(st)
        y = _sample_y(st, law)
        y2 = _sample_y(st, law)
        ys.append(y)
        y2s.append(y2)
        if u <= abs(y - y2) * c_h / (2.0 * c_y):
            break
        if st.ctr - start > cap:
            stats[2] = ERR_ITERATION_CAP
            return math.nan
    m = min(y, y2) + 2.0 * c_y * u / c_h
    stats[0] += len(ys)
    thr = c_h / c_y
    for k in range(len(ys) - 2, -1, -1):
        yi = ys[k]
        yi2 = y2s[k]
        lo = min(yi, yi2)
        hi = max(yi, yi2)
        while True:
            up = _uniform_open(st)
            xi = _uniform01(st) < 0.5
            t = math.log(_uniform_open(st)) / delta
            one_minus_v = math.exp(t)
            v = -math.expm1(t)
            x = one_minus_v * m + v * (yi if xi else yi2)
            if x < lo or x > hi:
                break
            dens = _hterm(x, m, yi, delta) + _hterm(x, m, yi2, delta)
            if up * dens > thr:
                break
            stats[1] += 1
            if st.ctr - start > cap:
                stats[2] = ERR_ITERATION_CAP
                return math.nan
        m = x
    return m


def _dm_exact(st, law, delta, cap, stats):
    if law.kernel == K_UNIT and law.rkind == R_CONST:
        return law.c
    if delta <= 1.0:
        return _cftp_block(st, law, delta, law.bound, cap, stats)
    nb = int(math.ceil(delta))
    dj = delta / nb
    ms = []
    for _ in range(nb):
        ms.append(_cftp_block(st, law, dj, law.bound, cap, stats))
        if stats[2] != OK:
            return math.nan
    gs = []
    total = 0.0
    for _ in range(nb):
        g = _std_gamma(st, dj)
        gs.append(g)
        total += g
    acc = 0.0
    for j in range(nb):
        acc += gs[j] / total * ms[j]
    return acc


def _dm_truncated(st, law, delta, method, n_fixed, eps, tail_scale, stats):
    acc = 0.0
    prod = 1.0
    n = 0
    while True:
        n += 1
        t = math.log(_uniform_open(st)) / delta
        r = math.exp(t)
        v = -math.expm1(t)
        w = v * prod
        acc += w * _sample_y(st, law)
        prod *= r
        if method == M_FIXED:
            if n >= n_fixed:
                break
        elif tail_scale * prod < eps:
            break
    y = _sample_y(st, law)
    stats[0] += n
    return acc + prod * y


def _dm_draw(st, law, delta, method, n_fixed, eps, tail_scale, cap, stats):
    if method == M_EXACT:
        return _dm_exact(st, law, delta, cap, stats)
    return _dm_truncated(st, law, delta, method, n_fixed, eps, tail_scale, stats)


def dm_draw(seed, sid, ctr, law, delta, method, n_fixed, eps, tail_scale, cap):
    """Single Dirichlet-mean draw.

    Returns ``(value, count, rejections, err, ctr)`` where ``count`` is the
    stack size (exact) or number of sticks (truncated).
    """
    st = _Stream(seed, sid, ctr)
    stats = [0, 0, OK]
    val = _dm_draw(st, _Law(law), delta, method, n_fixed, eps, tail_scale, cap,
                   stats)
    return val, stats[0], stats[1], stats[2], st.ctr


def dm_batch(seed, sid, start, law, delta, method, n_fixed, eps, tail_scale,
             cap, out_val, out_count, out_rej):
    """Fill arrays with draws; draw i uses the child stream ``split(start+i)``."""
    lw = _Law(law)
    for i in range(out_val.shape[0]):
        st = _Stream(seed, split_id(seed, sid, start + i), 0)
        stats = [0, 0, OK]
        out_val[i] = _dm_draw(st, lw, delta, method, n_fixed, eps, tail_scale,
                              cap, stats)
        out_count[i] = stats[0]
        out_rej[i] = stats[1]
        if stats[2] != OK:
            return stats[2]
    return OK


def _coupled(st, law, delta, n, cap, stats):
    """Exact draw and its N-stick truncation sharing the first N+1 sticks."""
    acc = 0.0
    prod = 1.0
    for _ in range(n):
        t = math.log(_uniform_open(st)) / delta
        r = math.exp(t)
        v = -math.expm1(t)
        acc += v * prod * _sample_y(st, law)
        prod *= r
    t = math.log(_uniform_open(st)) / delta
    r = math.exp(t)
    v = -math.expm1(t)
    y = _sample_y(st, law)
    tail = _dm_exact(st, law, delta, cap, stats)
    trunc = acc + prod * y
    exact = acc + v * prod * y + r * prod * tail
    return exact, trunc


def dm_coupled_batch(seed, sid, start, law, delta, n, cap, out_exact,
                     out_trunc):
    """Coupled (exact, fixed-N truncated) pairs; draw i uses ``split(start+i)``."""
    lw = _Law(law)
    for i in range(out_exact.shape[0]):
        st = _Stream(seed, split_id(seed, sid, start + i), 0)
        stats = [0, 0, OK]
        out_exact[i], out_trunc[i] = _coupled(st, lw, delta, n, cap, stats)
        if stats[2] != OK:
            return stats[2]
    return OK


def _joint_pair(st, rkind, c, a, b, lam, h, delta, method, n_fixed, eps,
                r_bound, stats):
    g = _std_gamma(st, delta)
    acc1 = 0.0
    acc2 = 0.0
    prod = 1.0
    n = 0
    while True:
        n += 1
        t = math.log(_uniform_open(st)) / delta
        r = math.exp(t)
        v = -math.expm1(t)
        w = v * prod
        rr = c if rkind == R_CONST else c * _beta(st, a, b)
        u = _uniform_open(st)
        acc1 += w * rr
        acc2 += w * rr * math.exp(-lam * u * h)
        prod *= r
        if method == M_FIXED:
            if n >= n_fixed:
                break
        elif r_bound * prod < eps:
            break
    rr = c if rkind == R_CONST else c * _beta(st, a, b)
    u = _uniform_open(st)
    acc1 += prod * rr
    acc2 += prod * rr * math.exp(-lam * u * h)
    stats[0] += n
    return g * acc1, g * acc2, g


def joint_pair(seed, sid, ctr, rkind, c, a, b, lam, h, delta, method, n_fixed,
               eps, r_bound):
    """Shared-stick draw of (int dZ, int e^{-lam(T-s)} dZ, gamma increment)."""
    st = _Stream(seed, sid, ctr)
    stats = [0, 0, OK]
    o1, o2, g = _joint_pair(st, rkind, c, a, b, lam, h, delta, method, n_fixed,
                            eps, r_bound, stats)
    return o1, o2, g, stats[0], st.ctr


# --------------------------------------------------------------------------
# path simulation

def simulate_chunk(seed, sid, start, variant, rho, theta, rkind, c, a, b,
                   drift, lams, v0s, times, s0, method, n_fixed, eps, cap,
                   superposed, path_mode, skip_last_normal, independent_lev,
                   out_price, out_tau, out_lev, out_v, out_o1, out_o2,
                   out_work, out_normals):
    """Simulate ``out_price.shape[0]`` paths starting at path index ``start``.

    ``drift`` is ``r - q - lambda * kappa``. Per path, per interval the
    outputs receive the price, integrated variance, leverage increment, end
    volatilities and the AR(1) innovations of every factor.
    """
    lams = [float(x) for x in lams]
    v0s = [float(x) for x in v0s]
    times = [float(x) for x in times]
    n = out_price.shape[0]
    m = len(times)
    nf = len(lams)
    lam_tot = 0.0
    for j in range(nf):
        lam_tot += lams[j]
    lev_scale = c if variant == V_OU_GAMMA else 1.0
    r_bound = c
    # mixture probabilities for the aggregated (superposed) sampler
    mcum = []
    acc = 0.0
    for j in range(nf):
        acc += lams[j] / lam_tot
        mcum.append(acc)
    for i in range(n):
        st = _Stream(seed, split_id(seed, sid, start + i), 0)
        stats = [0, 0, OK]
        v = [float(x) for x in v0s]
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
                    e = -math.expm1(-lams[j] * dt)
                    tau += e * v[j] / lams[j]
                    bb = r_bound * e / lams[j]
                    if bb > bound:
                        bound = bb
                law = _Law((K_ONE_MINUS, rkind, c, a, b, lams[0], dt, lams,
                            mcum, bound))
                g = _std_gamma(st, delta)
                mm = _dm_draw(st, law, delta, method, n_fixed, eps, bound, cap,
                              stats)
                tau += g * mm
                lev = lev_scale * g
                for j in range(nf):
                    v[j] = math.nan
                    out_o1[i, k, j] = math.nan
                    out_o2[i, k, j] = math.nan
            elif theta > 0.0:
                for j in range(nf):
                    lam = lams[j]
                    delta = theta * lam * dt
                    e = -math.expm1(-lam * dt)
                    if variant == V_OU_GAMMA:
                        law = _Law((K_ONE_MINUS, R_CONST, c, 0.0, 0.0, lam, dt,
                                    (), (), c * e))
                        g = _std_gamma(st, delta)
                        mm = _dm_draw(st, law, delta, method, n_fixed, eps,
                                      c * e, cap, stats)
                        o1 = c * g
                        jump = g * mm
                        o2 = o1 - jump
                        lev += o1
                    elif path_mode == 0 and method == M_EXACT:
                        law = _Law((K_ONE_MINUS, rkind, c, a, b, lam, dt,
                                    (), (), r_bound * e))
                        g = _std_gamma(st, delta)
                        mm = _dm_draw(st, law, delta, method, n_fixed, eps,
                                      r_bound * e, cap, stats)
                        jump = g * mm
                        o1 = math.nan
                        o2 = math.nan
                        lev += g
                    else:
                        jm = M_STOP_BOUNDED if method == M_EXACT else method
                        o1, o2, g = _joint_pair(st, rkind, c, a, b, lam, dt,
                                                delta, jm, n_fixed, eps,
                                                r_bound, stats)
                        jump = o1 - o2
                        lev += g
                    if stats[2] != OK:
                        return stats[2]
                    tau += (e * v[j] + jump) / lam
                    v[j] = (1.0 - e) * v[j] + o2
                    out_o1[i, k, j] = o1
                    out_o2[i, k, j] = o2
            else:
                for j in range(nf):
                    e = -math.expm1(-lams[j] * dt)
                    tau += e * v[j] / lams[j]
                    v[j] = (1.0 - e) * v[j]
                    out_o1[i, k, j] = 0.0
                    out_o2[i, k, j] = 0.0
            if stats[2] != OK:
                return stats[2]
            if independent_lev and theta > 0.0:
                lev = lev_scale * _std_gamma(st, theta * lam_tot * dt)
            mu = drift * dt - 0.5 * tau + rho * lev
            if k == m - 1 and skip_last_normal:
                out_price[i, k] = math.nan
            else:
                x = mu + math.sqrt(tau) * _normal(st)
                normals += 1
                price = price * math.exp(x)
                out_price[i, k] = price
            out_tau[i, k] = tau
            out_lev[i, k] = lev
            for j in range(nf):
                out_v[i, k, j] = v[j]
        out_work[i] = stats[0]
        out_normals[i] = normals
    return OK
