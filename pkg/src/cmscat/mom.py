"""Method-of-moments characteristic modes for smooth closed 2D contours.

Pipeline: equal-arclength contour discretization -> impedance matrix
(pulse basis, point matching, analytic self term) -> generalized symmetric
eigenproblem x J = lambda r J -> characteristic currents, near fields,
far-field patterns, and the diagonal perturbation/scattering responses.

Sign conventions.  The impedance kernel is assembled as
(omega mu / 4) H_0^(2)(k d) w so that r = Re z is the positive-semidefinite
radiated-power operator; field evaluation uses the outgoing H_0^(1)
(e^{-i omega t}) convention.  The two are complex conjugates; currents are
real, so both views share the same modes.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import kernels, specfun
from .errors import NumericalError

EULER_GAMMA = 0.5772156649015328606

# near-diagonal entries refined with sub-segment Gauss quadrature (the
# log-singular imaginary part only; the smooth real part keeps the spectrally
# accurate midpoint rule)
_NEAR_OFFSETS = 2
_NEAR_GAUSS = 12


@dataclass(frozen=True)
class WaveContext:
    """Wavelength fixes every derived scale (natural units, c = mu = eps = 1)."""
    wavelength: float = 1.0

    def __post_init__(self):
        if not (self.wavelength > 0.0 and math.isfinite(self.wavelength)):
            raise ValueError("wavelength must be positive and finite")

    @property
    def k(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self):
        return self.k

    @property
    def mu(self):
        return 1.0


# ---------------------------------------------------------------------------
# shapes and contours
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("circle radius must be positive")

    tag = "circle"

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.radius * np.cos(t), self.radius * np.sin(t)],
                        axis=-1)

    def contains(self, xy):
        xy = np.asarray(xy, dtype=float)
        return np.hypot(xy[..., 0], xy[..., 1]) < self.radius


@dataclass(frozen=True)
class Ellipse:
    semi_axis_x: float
    semi_axis_y: float

    def __post_init__(self):
        if not (self.semi_axis_x > 0.0 and self.semi_axis_y > 0.0):
            raise ValueError("ellipse semi-axes must be positive")

    tag = "ellipse"

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.semi_axis_x * np.cos(t),
                         self.semi_axis_y * np.sin(t)], axis=-1)

    def contains(self, xy):
        xy = np.asarray(xy, dtype=float)
        return ((xy[..., 0] / self.semi_axis_x) ** 2
                + (xy[..., 1] / self.semi_axis_y) ** 2) < 1.0


@dataclass(frozen=True)
class Superellipse:
    """|x/ax|^p + |y/ay|^p = 1 with exponent p >= 2."""
    semi_axis_x: float
    semi_axis_y: float
    exponent: float = 4.0

    def __post_init__(self):
        if not (self.semi_axis_x > 0.0 and self.semi_axis_y > 0.0):
            raise ValueError("superellipse semi-axes must be positive")
        if not self.exponent >= 2.0:
            raise ValueError("superellipse exponent must be >= 2")

    tag = "superellipse"

    def point(self, t):
        t = np.asarray(t, dtype=float)
        e = 2.0 / self.exponent
        c, s = np.cos(t), np.sin(t)
        return np.stack(
            [self.semi_axis_x * np.sign(c) * np.abs(c) ** e,
             self.semi_axis_y * np.sign(s) * np.abs(s) ** e], axis=-1)

    def contains(self, xy):
        xy = np.asarray(xy, dtype=float)
        p = self.exponent
        return (np.abs(xy[..., 0] / self.semi_axis_x) ** p
                + np.abs(xy[..., 1] / self.semi_axis_y) ** p) < 1.0


@dataclass
class Contour:
    """Closed curve split into equal-arclength segments (counterclockwise).

    Equal segment lengths keep the impedance matrix symmetric under the
    pulse/point-matching scheme.
    """
    shape: object
    context: WaveContext
    midpoints: np.ndarray          # (N, 2)
    lengths: np.ndarray            # (N,) all equal
    total_length: float
    _t_dense: np.ndarray = field(repr=False, default=None)
    _s_dense: np.ndarray = field(repr=False, default=None)

    @property
    def segment_count(self):
        return self.midpoints.shape[0]

    @property
    def shape_tag(self):
        return self.shape.tag

    def point_at_arclength(self, s):
        """Curve point at arclength position(s) s (mod total length)."""
        s = np.mod(np.asarray(s, dtype=float), self.total_length)
        if isinstance(self.shape, Circle):
            t = s / self.shape.radius
        else:
            t = np.interp(s, self._s_dense, self._t_dense)
        return self.shape.point(t)


def _dense_arclength(shape, samples):
    t = np.linspace(0.0, 2.0 * math.pi, samples + 1)
    pts = shape.point(t)
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return t, s


def discretize_contour(shape, context, n_segments):
    """Split a shape boundary into n_segments equal-arclength segments.

    n_segments is clamped to at least 16 and auto-increased until every
    segment is at most wavelength/10.
    """
    n = max(16, int(n_segments))
    if isinstance(shape, Circle):
        total = 2.0 * math.pi * shape.radius
        t_dense = s_dense = None
    else:
        samples = 1 << 14
        t_dense, s_dense = _dense_arclength(shape, samples)
        total_prev = s_dense[-1]
        while True:
            samples *= 2
            t_dense, s_dense = _dense_arclength(shape, samples)
            total = s_dense[-1]
            if abs(total - total_prev) <= 1e-10 * total or samples >= (1 << 21):
                break
            total_prev = total
    max_seg = context.wavelength / 10.0
    if total / n > max_seg:
        n = int(math.ceil(total / max_seg))
    w = total / n
    s_mid = (np.arange(n) + 0.5) * w
    if isinstance(shape, Circle):
        t_mid = s_mid / shape.radius
        mids = shape.point(t_mid)
    else:
        t_mid = np.interp(s_mid, s_dense, t_dense)
        mids = shape.point(t_mid)
    return Contour(shape=shape, context=context, midpoints=mids,
                   lengths=np.full(n, w), total_length=total,
                   _t_dense=t_dense, _s_dense=s_dense)


# ---------------------------------------------------------------------------
# impedance operator
# ---------------------------------------------------------------------------

@dataclass
class ImpedanceMatrix:
    z: np.ndarray                  # complex (N, N), z = r + i x entrywise
    r: np.ndarray                  # real symmetric, PSD (radiated power)
    x: np.ndarray                  # real symmetric
    context: WaveContext
    contour: Contour


def segment_self_integral(k, w):
    """Closed-form small-argument integral of H_0^(1)(k|t|) over |t|<=w/2.

    Second-order in (kw); matches adaptive quadrature to ~1e-9 relative at
    kw = 0.05.
    """
    lg = math.log(0.25 * k * w) + EULER_GAMMA
    re = w - k * k * w ** 3 / 48.0
    im = (2.0 / math.pi) * ((lg - 1.0) * w
                            - (k * k * w ** 3 / 48.0) * (lg - 1.0 / 3.0)
                            + k * k * w ** 3 / 48.0)
    return complex(re, im)


def assemble_impedance(contour, context):
    """Dense impedance matrix on the contour midpoints.

    Off-diagonal entries follow the midpoint rule
    z[m, n] = (omega mu / 4) H_0^(2)(k d_mn) w; diagonal entries use the
    analytic log-singularity integral; near-diagonal imaginary parts are
    refined with sub-segment Gauss quadrature.
    """
    k = context.k
    scale = context.omega * context.mu / 4.0
    mids = contour.midpoints
    n = contour.segment_count
    w = float(contour.lengths[0])
    dx = mids[:, 0][:, None] - mids[:, 0][None, :]
    dy = mids[:, 1][:, None] - mids[:, 1][None, :]
    d = np.hypot(dx, dy)
    off = ~np.eye(n, dtype=bool)
    if d[off].min() < 1e-12 * contour.total_length:
        raise NumericalError("coincident contour midpoints in assembly")
    np.fill_diagonal(d, 1.0)
    j0, y0 = kernels.h0_many(k * d.ravel())
    z = scale * (j0 - 1j * y0).reshape(n, n) * w

    # singular-part refinement: integrate Y_0 over the true source arc for
    # the first few cyclic neighbours
    gx, gw = np.polynomial.legendre.leggauss(_NEAR_GAUSS)
    s_mid = (np.arange(n) + 0.5) * w
    idx = np.arange(n)
    for offn in range(1, _NEAR_OFFSETS + 1):
        for sgn in (1, -1):
            jdx = (idx + sgn * offn) % n
            s_nodes = s_mid[jdx][:, None] + gx[None, :] * (0.5 * w)
            src = contour.point_at_arclength(s_nodes.ravel()).reshape(n, _NEAR_GAUSS, 2)
            dd = np.hypot(mids[idx, 0][:, None] - src[..., 0],
                          mids[idx, 1][:, None] - src[..., 1])
            _, y_near = kernels.h0_many(k * dd.ravel())
            im_int = -scale * (y_near.reshape(n, _NEAR_GAUSS) @ gw) * (0.5 * w)
            z[idx, jdx] = z[idx, jdx].real + 1j * im_int
    # diagonal: real part keeps the trapezoid value w * J_0(0) so the
    # radiation operator stays positive semidefinite to roundoff; the
    # log-singular imaginary part takes the analytic segment integral
    np.fill_diagonal(z, scale * complex(w, -segment_self_integral(k, w).imag))

    z = 0.5 * (z + z.T)
    return ImpedanceMatrix(z=z, r=z.real.copy(), x=z.imag.copy(),
                           context=context, contour=contour)


# ---------------------------------------------------------------------------
# characteristic modes
# ---------------------------------------------------------------------------

@dataclass
class CharModeSet:
    """Characteristic eigenvalues and power-normalized current vectors.

    Currents satisfy J_m . r . J_n = delta_mn; eigenvalues are ordered by
    increasing magnitude.  Ties inside degenerate pairs are arbitrary.
    """
    eigenvalues: np.ndarray        # (p,)
    currents: np.ndarray           # (N, p) real
    kept_count: int
    normalization: np.ndarray      # per-mode scale applied to reach unit power
    context: WaveContext
    contour: Contour
    impedance: ImpedanceMatrix
    discarded_directions: int


def solve_modes(impedance, keep, rank_threshold=1e-12):
    """Solve x J = lambda r J, keep the `keep` smallest-|lambda| modes.

    r is factored by symmetric eigendecomposition; directions below
    rank_threshold of its largest eigenvalue are discarded before the
    reduced standard symmetric solve.
    """
    r = impedance.r
    x = impedance.x
    n = r.shape[0]
    wr, q = linalg.eigh(r)
    thr = rank_threshold * wr.max()
    keep_dirs = wr > thr
    rank = int(keep_dirs.sum())
    n_neg = int((wr < -1e-8 * wr.max()).sum())
    if n_neg:
        warnings.warn(
            f"radiation operator indefinite: {n_neg} negative directions "
            f"discarded (of {n - rank} total)", RuntimeWarning)
    if keep > rank:
        raise NumericalError(
            f"requested {keep} modes but numerical rank is only {rank}")
    basis = q[:, keep_dirs] / np.sqrt(wr[keep_dirs])
    reduced = basis.T @ x @ basis
    reduced = 0.5 * (reduced + reduced.T)
    lam, u = linalg.eigh(reduced)
    order = np.argsort(np.abs(lam))[:keep]
    lam = lam[order]
    currents = basis @ u[:, order]
    # re-measure the power normalization (exact up to roundoff)
    norms = np.sqrt(np.einsum("ip,ij,jp->p", currents, r, currents))
    currents = currents / norms
    return CharModeSet(eigenvalues=lam, currents=currents, kept_count=keep,
                       normalization=norms, context=impedance.context,
                       contour=impedance.contour, impedance=impedance,
                       discarded_directions=n - rank)


def char_near_field(modes, idx, points):
    """Field of characteristic current idx at exterior points.

    E(p) = -(omega mu / 4) sum_j H_0^(1)(k |p - x_j|) J[j] w.  Points on the
    contour are supported via the analytic segment integral; strictly
    interior points raise ValueError.
    """
    if idx >= modes.kept_count:
        raise ValueError("mode index out of range")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    shape = modes.contour.shape
    inside = shape.contains(pts)
    w = float(modes.contour.lengths[0])
    k = modes.context.k
    mids = modes.contour.midpoints
    d = np.hypot(pts[:, 0][:, None] - mids[:, 0][None, :],
                 pts[:, 1][:, None] - mids[:, 1][None, :])
    on_seg = d < 0.5 * w
    if np.any(inside & ~on_seg.any(axis=1)):
        raise ValueError("near-field evaluation requested inside the contour")
    d_safe = np.where(on_seg, 1.0, d)
    h0 = specfun.hankel1_order0(k * d_safe.ravel()).reshape(d.shape)
    kern = np.where(on_seg, segment_self_integral(k, w) / w, h0)
    scale = -(modes.context.omega * modes.context.mu / 4.0) * w
    out = scale * (kern @ modes.currents[:, idx].astype(complex))
    return out if np.asarray(points).ndim > 1 else out[0]


@dataclass
class RadiationPattern:
    """Far-field pattern on a uniform angle grid, unit mean-square norm."""
    phi_grid: np.ndarray
    values: np.ndarray
    normalization_constant: complex     # sqrt(pi omega mu / 2)
    amplitude_scale: float = 1.0        # raw pattern = scale * e^{i phase} * values
    phase_shift: float = 0.0

    def raw(self):
        return self.amplitude_scale * np.exp(1j * self.phase_shift) * self.values


def mode_pattern_raw(modes, idx, phi_samples):
    """Physical outgoing-channel pattern P(phi) of one characteristic mode.

    E(rho, phi) -> P(phi) sqrt(2/(pi k rho)) e^{i(k rho - pi/4)} as
    k rho -> infinity.
    """
    if idx >= modes.kept_count:
        raise ValueError("mode index out of range")
    w = float(modes.contour.lengths[0])
    cur = modes.currents[:, idx].astype(complex) * w
    u = kernels.pattern_sum(np.asarray(phi_samples, dtype=float),
                            modes.context.k, modes.contour.midpoints, cur)
    return -(modes.context.omega * modes.context.mu / 4.0) * u


def far_pattern(modes, idx, phi_samples):
    """Normalized radiation pattern of mode idx on the given angle grid.

    Mean-square normalized on the grid; the global phase is fixed by making
    the pattern real-positive at phi=0 (or at its largest sample when the
    phi=0 value is negligible).
    """
    phis = np.asarray(phi_samples, dtype=float)
    raw = mode_pattern_raw(modes, idx, phis)
    s = math.sqrt(float(np.mean(np.abs(raw) ** 2)))
    vals = raw / s
    ref = mode_pattern_raw(modes, idx, np.array([0.0]))[0] / s
    if abs(ref) < 1e-6 * np.abs(vals).max():
        ref = vals[int(np.argmax(np.abs(vals)))]
    theta0 = math.atan2(ref.imag, ref.real)
    vals = vals * np.exp(-1j * theta0)
    ck = math.sqrt(math.pi * modes.context.omega * modes.context.mu / 2.0)
    return RadiationPattern(phi_grid=phis, values=vals,
                            normalization_constant=complex(ck),
                            amplitude_scale=s, phase_shift=theta0)


@dataclass
class ModalScattering:
    """Diagonal perturbation and scattering responses per mode."""
    eigenvalues: np.ndarray
    p_diag: np.ndarray
    s_diag: np.ndarray


def perturbation_and_scattering(eigenvalues):
    """P_nn = -1/(1 - i lambda), S_nn = -(1 + i lambda)/(1 - i lambda).

    Infinite eigenvalues (sentinel for unperturbed modes) give P = 0, S = 1.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    p = np.empty(lam.shape, dtype=complex)
    s = np.empty(lam.shape, dtype=complex)
    fin = np.isfinite(lam)
    p[~fin] = 0.0
    s[~fin] = 1.0
    den = 1.0 - 1j * lam[fin]
    p[fin] = -1.0 / den
    s[fin] = -(1.0 + 1j * lam[fin]) / den
    return ModalScattering(eigenvalues=lam, p_diag=p, s_diag=s)


def classical_scatter(modes, scattering, incident_on_gamma):
    """Modal response coefficients of the induced current for a given
    incident field sampled at the contour midpoints.

    c_m = -P_mm (J_m . E_inc); the scattered field is sum_m c_m E_m and the
    total field (incident + scattered) vanishes on the contour.
    """
    e = np.asarray(incident_on_gamma, dtype=complex)
    proj = modes.currents.T @ e
    return -scattering.p_diag[:modes.kept_count] * proj


def boundary_total_field(modes, coefficients, incident_on_gamma):
    """Total field at the contour midpoints for given modal response."""
    zp = -np.conj(modes.impedance.z)        # outgoing-convention operator
    j_ind = modes.currents @ np.asarray(coefficients, dtype=complex)
    return np.asarray(incident_on_gamma, dtype=complex) + zp @ j_ind
