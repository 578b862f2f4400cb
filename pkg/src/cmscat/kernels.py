"""Hot numerical kernels: cylinder-function sweeps and modal field synthesis.

Two interchangeable backends share the same algorithms:

* a scalar/per-point path compiled with numba (``@njit``, parallel pixel loop),
* a vectorized pure-NumPy path operating on point batches.

Selection is driven by the environment variable ``CMSCAT_BACKEND``:

* ``auto`` (default) -- numba when importable, NumPy otherwise;
* ``numba``          -- require numba, fail loudly if missing;
* ``numpy``          -- force the NumPy fallback.

Both backends are deterministic run-to-run; the numba pixel loop carries no
cross-pixel reductions, so results do not depend on the thread count.
"""

import math
import os

import numpy as np

_EULER_GAMMA = 0.5772156649015328606
_UNDERFLOW = 1e-280
_RESCALE = 1e250
_Y_OVERFLOW = 1e270
_TINY_X = 1e-6
_H0_ASYMPTOTIC_X = 18.0

_choice = os.environ.get("CMSCAT_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"CMSCAT_BACKEND must be one of auto|numba|numpy, got {_choice!r}")

USING_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")
        import numba
        from numba import njit, prange
        USING_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise

if not USING_NUMBA:
    def njit(*args, **kwargs):
        # no-op decorator so the scalar reference path stays importable
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn
        return wrap

    prange = range


def backend_name():
    return "numba" if USING_NUMBA else "numpy"


def set_worker_threads(n):
    """Set the pixel-loop worker count (numba backend only)."""
    if USING_NUMBA and n is not None and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# scalar sweeps (numba path; also the plain-python reference when numba off)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _miller_margin(x):
    # start order margin above max(nmax, x); the x**(1/3) term covers the
    # transition zone where J_n decays only like an Airy tail
    return 18 + int(15.0 * (0.5 * x + 1.0) ** (1.0 / 3.0))


@njit(cache=True)
def _j_table_into(nmax, x, out):
    """First-kind cylinder functions J_0..J_nmax by downward recurrence.

    Trial values descend from well above max(nmax, x) and are normalized
    with the even-order sum identity (J_0 + 2*sum J_2k = 1).  Entries below
    1e-280 are clamped to zero.
    """
    if x == 0.0:
        out[0] = 1.0
        for n in range(1, nmax + 1):
            out[n] = 0.0
        return
    if x < _TINY_X:
        t = 1.0
        q = 0.25 * x * x
        for n in range(nmax + 1):
            v = t * (1.0 - q / (n + 1.0))
            out[n] = v if v >= _UNDERFLOW else 0.0
            t *= 0.5 * x / (n + 1.0)
        return
    start = max(nmax, int(x)) + _miller_margin(x)
    jp = 0.0
    j = 1e-30
    ssum = 0.0
    for m in range(start, -1, -1):
        jm = (2.0 * (m + 1) / x) * j - jp
        jp = j
        j = jm
        if abs(j) > _RESCALE:
            j *= 1.0 / _RESCALE
            jp *= 1.0 / _RESCALE
            ssum *= 1.0 / _RESCALE
            for i in range(m, nmax + 1):
                out[i] *= 1.0 / _RESCALE
        if m <= nmax:
            out[m] = j
        if m % 2 == 0:
            ssum += 2.0 * j if m > 0 else j
    for n in range(nmax + 1):
        v = out[n] / ssum
        out[n] = v if abs(v) >= _UNDERFLOW else 0.0


@njit(cache=True)
def _y_seeds_from_jt(x, jt):
    """(Y_0, Y_1) from the log term plus Neumann series over a J table.

    The J table must extend to int(x) plus the Miller margin so the series
    tails are negligible.  Stable for the whole supported argument range.
    """
    lg = math.log(0.5 * x) + _EULER_GAMMA
    s0 = 0.0
    k = 1
    while 2 * k < jt.shape[0]:
        t = jt[2 * k] / k
        s0 += t if (k % 2 == 1) else -t
        k += 1
    y0 = (2.0 / math.pi) * (lg * jt[0] + 2.0 * s0)
    s1 = 0.0
    k = 1
    while 2 * k + 1 < jt.shape[0]:
        t = (jt[2 * k - 1] - jt[2 * k + 1]) / k
        s1 += t if (k % 2 == 1) else -t
        k += 1
    y1 = (2.0 / math.pi) * (lg * jt[1] - jt[0] / x) - (2.0 / math.pi) * s1
    return y0, y1


@njit(cache=True)
def _y_table_from_jt(nmax, x, jt, out):
    """Second-kind functions Y_0..Y_nmax by stable upward recurrence.

    Overflowed entries (|Y| beyond ~1e270) are reported as -inf; Y_n -> -inf
    monotonically once n >> x, so the sign is fixed.
    """
    y0, y1 = _y_seeds_from_jt(x, jt)
    out[0] = y0
    if nmax >= 1:
        out[1] = y1
    ym = y0
    y = y1
    for n in range(1, nmax):
        if abs(y) > _Y_OVERFLOW:
            for i in range(n + 1, nmax + 1):
                out[i] = -np.inf
            return
        yn = (2.0 * n / x) * y - ym
        ym = y
        y = yn
        out[n + 1] = yn


@njit(cache=True)
def _j_table_len(nmax, x):
    # long enough to serve both the requested orders and the Y seed series
    return max(nmax, int(x) + _miller_margin(x)) + 1


@njit(cache=True)
def _h0_pair(x):
    """(J_0(x), Y_0(x)) for a single argument.

    Below x=18 the sweep/seed machinery is exact enough; above it the
    Hankel asymptotic series converges past machine precision.
    """
    if x < _H0_ASYMPTOTIC_X:
        n = _j_table_len(0, x)
        jt = np.empty(n)
        _j_table_into(n - 1, x, jt)
        y0, _ = _y_seeds_from_jt(x, jt)
        return jt[0], y0
    # H_0^(1)(x) ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum_m i^m ((2m-1)!!)^2 / (m! (8x)^m)
    pre = math.sqrt(2.0 / (math.pi * x))
    re_s = 1.0
    im_s = 0.0
    term = 1.0
    last = 1.0
    for m in range(1, 40):
        term *= (2.0 * m - 1.0) ** 2 / (8.0 * m * x)
        if term >= last:
            break
        r = m % 4
        if r == 0:
            re_s += term
        elif r == 1:
            im_s += term
        elif r == 2:
            re_s -= term
        else:
            im_s -= term
        if term < 1e-17:
            break
        last = term
    c = math.cos(x - 0.25 * math.pi)
    s = math.sin(x - 0.25 * math.pi)
    # (re_s + i im_s) e^{i(x-pi/4)} = (re_s c - im_s s) + i(re_s s + im_s c)
    return pre * (re_s * c - im_s * s), pre * (re_s * s + im_s * c)


@njit(cache=True, parallel=True)
def _h0_batch_scalar(xs, j0_out, y0_out):
    for i in prange(xs.shape[0]):
        j0, y0 = _h0_pair(xs[i])
        j0_out[i] = j0
        y0_out[i] = y0


@njit(cache=True, parallel=True)
def _synth_scalar(px, py, k, coefs, pdiag, nmax, out):
    """Per-point synthesis of modal fields (numba pixel loop).

    For every point, one J sweep (and one Y sweep when a scatterer is
    present) feeds all coefficient sets:

        field_s = (1/sqrt(2 pi)) * sum_n V_s[n] R_|n|(k rho) e^{-i n phi}

    with R_n = J_n + P_n (J_n + i Y_n); P beyond its table is zero
    (unscattered orders).
    """
    npts = px.shape[0]
    nsets = coefs.shape[0]
    nscat = pdiag.shape[0] - 1
    inv = 1.0 / math.sqrt(2.0 * math.pi)
    for ip in prange(npts):
        rho = math.hypot(px[ip], py[ip])
        phi = math.atan2(py[ip], px[ip])
        x = k * rho
        ntab = _j_table_len(nmax, x) if nscat >= 0 else nmax + 1
        jt = np.empty(ntab)
        _j_table_into(ntab - 1, x, jt)
        have_y = nscat >= 0 and x > 0.0
        yt = np.empty(nscat + 1) if nscat >= 0 else np.empty(1)
        if have_y:
            _y_table_from_jt(nscat, x, jt, yt)
        acc = np.zeros(nsets, dtype=np.complex128)
        # n = 0
        rad = complex(jt[0], 0.0)
        if have_y and np.isfinite(yt[0]):
            rad = rad + pdiag[0] * complex(jt[0], yt[0])
        for s in range(nsets):
            acc[s] += coefs[s, nmax] * rad
        em = complex(math.cos(phi), -math.sin(phi))
        en = complex(1.0, 0.0)
        sign = 1.0
        for n in range(1, nmax + 1):
            en = en * em
            sign = -sign
            rad = complex(jt[n], 0.0)
            if have_y and n <= nscat and np.isfinite(yt[n]):
                rad = rad + pdiag[n] * complex(jt[n], yt[n])
            ep = en.conjugate()
            for s in range(nsets):
                acc[s] += rad * (coefs[s, nmax + n] * en
                                 + coefs[s, nmax - n] * sign * ep)
        for s in range(nsets):
            out[s, ip] = acc[s] * inv


@njit(cache=True, parallel=True)
def _pattern_sum_scalar(phis, k, mx, my, cur, out):
    """Far-field pattern sum U(phi) = sum_j e^{-i k rhat(phi).x_j} c_j."""
    for ip in prange(phis.shape[0]):
        cx = math.cos(phis[ip])
        cy = math.sin(phis[ip])
        acc = complex(0.0, 0.0)
        for j in range(mx.shape[0]):
            ph = -k * (cx * mx[j] + cy * my[j])
            acc += cur[j] * complex(math.cos(ph), math.sin(ph))
        out[ip] = acc


# ---------------------------------------------------------------------------
# NumPy batch fallback (same algorithms, vectorized over arguments)
# ---------------------------------------------------------------------------

def _j_batch(nmax, xs):
    """Vectorized Miller sweep: returns table of shape (nmax+1, len(xs))."""
    xs = np.asarray(xs, dtype=float)
    nb = xs.shape[0]
    out = np.zeros((nmax + 1, nb))
    tiny = xs < _TINY_X
    if tiny.any():
        for idx in np.nonzero(tiny)[0]:
            col = np.empty(nmax + 1)
            _j_table_into(nmax, float(xs[idx]), col)
            out[:, idx] = col
    sel = ~tiny
    if not sel.any():
        return out
    x = xs[sel]
    xmax = float(x.max())
    start = max(nmax, int(xmax)) + _miller_margin(xmax)
    j = np.full(x.shape, 1e-30)
    jp = np.zeros_like(x)
    ssum = np.zeros_like(x)
    sub = np.zeros((nmax + 1, x.shape[0]))
    for m in range(start, -1, -1):
        jm = (2.0 * (m + 1) / x) * j - jp
        jp = j
        j = jm
        big = np.abs(j) > _RESCALE
        if big.any():
            j[big] *= 1.0 / _RESCALE
            jp[big] *= 1.0 / _RESCALE
            ssum[big] *= 1.0 / _RESCALE
            sub[:, big] *= 1.0 / _RESCALE
        if m <= nmax:
            sub[m] = j
        if m % 2 == 0:
            ssum += (2.0 * j) if m > 0 else j
    sub /= ssum
    sub[np.abs(sub) < _UNDERFLOW] = 0.0
    out[:, sel] = sub
    return out


def _y_batch_from_jt(nmax, xs, jt):
    """Vectorized upward Y sweep; overflowed entries become -inf."""
    xs = np.asarray(xs, dtype=float)
    nb = xs.shape[0]
    out = np.full((nmax + 1, nb), -np.inf)
    ok = xs > 0.0
    if not ok.any():
        return out
    x = xs[ok]
    tab = jt[:, ok]
    lg = np.log(0.5 * x) + _EULER_GAMMA
    ks = np.arange(1, (jt.shape[0] - 1) // 2 + 1)
    c = ((-1.0) ** (ks + 1)) / ks
    s0 = c @ tab[2 * ks, :] if ks.size else np.zeros_like(x)
    y0 = (2.0 / math.pi) * (lg * tab[0] + 2.0 * s0)
    ks1 = np.arange(1, (jt.shape[0] - 2) // 2 + 1)
    c1 = ((-1.0) ** (ks1 + 1)) / ks1
    s1 = (c1 @ (tab[2 * ks1 - 1, :] - tab[2 * ks1 + 1, :])
          if ks1.size else np.zeros_like(x))
    y1 = (2.0 / math.pi) * (lg * tab[1] - tab[0] / x) - (2.0 / math.pi) * s1
    res = np.full((nmax + 1, x.shape[0]), -np.inf)
    res[0] = y0
    if nmax >= 1:
        res[1] = y1
    ym, y = y0.copy(), y1.copy()
    alive = np.ones(x.shape[0], dtype=bool)
    for n in range(1, nmax):
        alive &= np.abs(y) <= _Y_OVERFLOW
        if not alive.any():
            break
        yn = np.where(alive, (2.0 * n / x) * np.where(alive, y, 0.0) - ym,
                      -np.inf)
        ym = np.where(alive, y, ym)
        y = yn
        res[n + 1] = np.where(alive, yn, -np.inf)
    out[:, ok] = res
    return out


def _h0_batch_numpy(xs):
    xs = np.asarray(xs, dtype=float)
    j0 = np.empty_like(xs)
    y0 = np.empty_like(xs)
    small = xs < _H0_ASYMPTOTIC_X
    if small.any():
        xsm = xs[small]
        n = int(_j_table_len(0, float(xsm.max())))
        jt = _j_batch(n - 1, xsm)
        yt = _y_batch_from_jt(0, xsm, jt)
        j0[small] = jt[0]
        y0[small] = yt[0]
    large = ~small
    if large.any():
        x = xs[large]
        pre = np.sqrt(2.0 / (math.pi * x))
        re_s = np.ones_like(x)
        im_s = np.zeros_like(x)
        term = np.ones_like(x)
        for m in range(1, 40):
            term = term * ((2.0 * m - 1.0) ** 2 / (8.0 * m)) / x
            r = m % 4
            if r == 0:
                re_s += term
            elif r == 1:
                im_s += term
            elif r == 2:
                re_s -= term
            else:
                im_s -= term
            if term.max() < 1e-17:
                break
        c = np.cos(x - 0.25 * math.pi)
        s = np.sin(x - 0.25 * math.pi)
        j0[large] = pre * (re_s * c - im_s * s)
        y0[large] = pre * (re_s * s + im_s * c)
    return j0, y0


def _synth_numpy(px, py, k, coefs, pdiag, nmax, out, chunk=2048):
    nsets = coefs.shape[0]
    nscat = pdiag.shape[0] - 1
    inv = 1.0 / math.sqrt(2.0 * math.pi)
    vp = coefs[:, nmax:]                       # V_{+n}, n = 0..nmax
    vm = coefs[:, nmax::-1].copy()             # V_{-n}, n = 0..nmax
    signs = (-1.0) ** np.arange(nmax + 1)
    npts = px.shape[0]
    for lo in range(0, npts, chunk):
        hi = min(lo + chunk, npts)
        rho = np.hypot(px[lo:hi], py[lo:hi])
        phi = np.arctan2(py[lo:hi], px[lo:hi])
        x = k * rho
        if nscat >= 0:
            ntab = int(_j_table_len(nmax, float(x.max())))
            jt = _j_batch(ntab - 1, x)
            yt = _y_batch_from_jt(nscat, x, jt)
        else:
            jt = _j_batch(nmax, x)
        rad = jt[:nmax + 1].astype(np.complex128)
        if nscat >= 0:
            yseg = yt[:nscat + 1]
            good = np.isfinite(yseg)
            add = pdiag[:, None] * (jt[:nscat + 1] + 1j * np.where(good, yseg, 0.0))
            rad[:nscat + 1] += np.where(good, add, 0.0)
        ephase = np.exp(-1j * np.outer(np.arange(nmax + 1), phi))
        tp = vp @ (rad * ephase)
        tm = (vm * signs) @ (rad * np.conj(ephase))
        dup = np.outer(vp[:, 0], rad[0])       # n = 0 counted in both halves
        out[:, lo:hi] = inv * (tp + tm - dup)
    return out


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------

def j_table(nmax, x):
    out = np.empty(nmax + 1)
    _j_table_into(nmax, float(x), out)
    return out


def y_table(nmax, x):
    x = float(x)
    n = int(_j_table_len(max(1, nmax), x))
    jt = np.empty(n)
    _j_table_into(n - 1, x, jt)
    out = np.empty(nmax + 1)
    _y_table_from_jt(nmax, x, jt, out)
    return out


def h0_many(xs):
    """(J_0, Y_0) for an array of arguments; used in impedance assembly."""
    xs = np.ascontiguousarray(xs, dtype=float).ravel()
    if USING_NUMBA:
        j0 = np.empty_like(xs)
        y0 = np.empty_like(xs)
        _h0_batch_scalar(xs, j0, y0)
        return j0, y0
    return _h0_batch_numpy(xs)


def modal_field_grid(px, py, k, coefs, pdiag, nmax):
    """Total modal fields for several coefficient sets on many points.

    coefs: complex (nsets, 2*nmax+1), index nmax+n holds the weight of the
    e^{-i n phi} harmonic.  pdiag: complex per-|n| scattering responses
    (empty array -> free space).  Returns complex (nsets, npts).
    """
    px = np.ascontiguousarray(px, dtype=float).ravel()
    py = np.ascontiguousarray(py, dtype=float).ravel()
    coefs = np.ascontiguousarray(coefs, dtype=np.complex128)
    pdiag = np.ascontiguousarray(pdiag, dtype=np.complex128)
    out = np.empty((coefs.shape[0], px.shape[0]), dtype=np.complex128)
    if USING_NUMBA:
        _synth_scalar(px, py, float(k), coefs, pdiag, int(nmax), out)
    else:
        _synth_numpy(px, py, float(k), coefs, pdiag, int(nmax), out)
    return out


def pattern_sum(phis, k, midpoints, weighted_current):
    """U(phi) = sum_j exp(-i k rhat(phi) . x_j) c_j for pattern evaluation."""
    phis = np.ascontiguousarray(phis, dtype=float).ravel()
    cur = np.ascontiguousarray(weighted_current, dtype=np.complex128)
    mx = np.ascontiguousarray(midpoints[:, 0], dtype=float)
    my = np.ascontiguousarray(midpoints[:, 1], dtype=float)
    if USING_NUMBA:
        out = np.empty(phis.shape[0], dtype=np.complex128)
        _pattern_sum_scalar(phis, float(k), mx, my, cur, out)
        return out
    ph = np.exp(-1j * float(k) * (np.outer(np.cos(phis), mx)
                                  + np.outer(np.sin(phis), my)))
    return ph @ cur
