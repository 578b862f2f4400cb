"""Gaussian beams in the circular-harmonic basis.

A wide beam with waist profile E_0 exp(-beta^2 y^2) propagating along +x
(optionally rotated by theta and offset by x_0 along its axis) is expanded
as

    e(rho, phi) ~= field_scale * sum_n V_n J_n(k rho) e^{-i n phi} / sqrt(2 pi)

with normalized excitation coefficients V_n ~ i^n Delta_n e^{-kappa n^2},
kappa = beta^2 / (k^2 (1 + i xi)), xi = 2 beta^2 x_0 / k.  The angular
spectrum quadrature (`beam_field_direct`) is the independent reference for
that expansion.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import specfun
from .errors import DegenerateBeamsError, NumericalError

#: hard validity limit and soft warning threshold on beta * wavelength
WIDE_BEAM_LIMIT = 0.2
WIDE_BEAM_WARN = 0.05

#: coefficient magnitude |V_n|^2 kept above this when auto-truncating
COEFF_TAIL = 1e-8

#: orders are split into incoming/outgoing waves only while the second-kind
#: radial function stays below this; beyond it the order is evanescent at
#: that radius and carries no radial flux (split symmetrically)
SPLIT_Y_LIMIT = 1e6


@dataclass(frozen=True)
class GaussianBeamSpec:
    """Waist parameter beta (inverse length), axis offset x0, rotation theta."""
    beta: float
    x0: float = 0.0
    theta: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive and finite")

    def validate_width(self, context):
        bl = self.beta * context.wavelength
        if bl > WIDE_BEAM_LIMIT:
            raise ValueError(
                f"beta*wavelength = {bl:.3g} exceeds the wide-beam limit "
                f"{WIDE_BEAM_LIMIT}")
        if bl > WIDE_BEAM_WARN:
            warnings.warn(
                f"beta*wavelength = {bl:.3g} is above {WIDE_BEAM_WARN}; "
                "the wide-beam expansion degrades", RuntimeWarning)

    def xi(self, context):
        return 2.0 * self.beta ** 2 * self.x0 / context.k

    def kappa(self, context):
        return self.beta ** 2 / (context.k ** 2 * (1.0 + 1j * self.xi(context)))

    def width_parameter(self):
        # informational: W from the beta = 1/sqrt(2 W) convention
        return 1.0 / (2.0 * self.beta ** 2)


@dataclass
class ModalCoefficients:
    """Normalized expansion over circular harmonics n in [-n_max, n_max].

    ``field_scale`` (when known) restores physical beam units:
    e(rho) = field_scale * sum_n V_n J_n(k rho) e^{-i n phi} / sqrt(2 pi).
    Derived sets (orthogonalized combinations) carry field_scale=None.
    """
    n_max: int
    values: np.ndarray
    field_scale: Optional[complex] = None
    tail_estimate: float = 0.0

    def value(self, n):
        if abs(n) > self.n_max:
            return 0.0 + 0.0j
        return self.values[self.n_max + n]

    def norm_sq(self):
        return float(np.sum(np.abs(self.values) ** 2))

    def padded(self, n_max):
        if n_max < self.n_max:
            raise ValueError("cannot shrink a coefficient set")
        out = np.zeros(2 * n_max + 1, dtype=complex)
        out[n_max - self.n_max: n_max + self.n_max + 1] = self.values
        return ModalCoefficients(n_max=n_max, values=out,
                                 field_scale=self.field_scale,
                                 tail_estimate=self.tail_estimate)


def _delta_factor(kappa, n, order):
    if order == "leading":
        return np.ones(np.shape(n), dtype=complex)
    if order == "cubic":
        n2 = np.asarray(n, dtype=float) ** 2
        return 1.0 - 2.0 * kappa ** 2 * n2 - (4.0 / 3.0) * kappa ** 3 * n2 ** 2
    raise ValueError(f"unknown expansion order {order!r}")


def excitation_coeffs(beam, context, order="cubic"):
    """Excitation coefficients of a Gaussian beam, normalized to unit power.

    order='leading' keeps V_n ~ i^n e^{-kappa n^2}; order='cubic' applies the
    Delta_n = 1 - 2 kappa^2 n^2 - (4/3) kappa^3 n^4 refinement.  The beam
    rotation is applied as the diagonal phase e^{i n theta}.
    """
    beam.validate_width(context)
    kappa = beam.kappa(context)
    if not kappa.real > 0.0:
        raise ValueError("beam kappa must have positive real part")
    n_max = 1
    while math.exp(-2.0 * kappa.real * n_max * n_max) >= COEFF_TAIL:
        n_max += 1
    margin = 64
    ns = np.arange(-(n_max + margin), n_max + margin + 1)
    raw = ((1j) ** np.mod(ns, 4)) * _delta_factor(kappa, ns, order) \
        * np.exp(-kappa * ns.astype(float) ** 2)
    power = np.abs(raw) ** 2
    total = float(power.sum())
    tail = float(power[np.abs(ns) > n_max].sum()) / total
    edge = abs(_delta_factor(kappa, np.array([n_max]), order)[0] - 1.0)
    if edge > 0.3:
        warnings.warn(
            f"|Delta_n - 1| = {edge:.2f} at the truncation edge; the "
            "refined expansion is outside its validity range", RuntimeWarning)
    sel = np.abs(ns) <= n_max
    kept = float(power[sel].sum())
    values = raw[sel] / math.sqrt(kept)
    norm_c = math.sqrt(kept)
    xi = beam.xi(context)
    scale = (math.sqrt(2.0 * math.pi) * beam.amplitude * norm_c
             * np.exp(1j * context.k * beam.x0) / np.sqrt(1.0 + 1j * xi))
    coeffs = ModalCoefficients(n_max=n_max, values=values,
                               field_scale=complex(scale),
                               tail_estimate=tail)
    if beam.theta != 0.0:
        coeffs = rotate_coeffs(coeffs, beam.theta)
    return coeffs


def rotate_coeffs(coeffs, theta):
    """Rotate the represented field by theta: V_n -> V_n e^{i n theta}."""
    ns = np.arange(-coeffs.n_max, coeffs.n_max + 1)
    return ModalCoefficients(
        n_max=coeffs.n_max,
        values=coeffs.values * np.exp(1j * ns * theta),
        field_scale=coeffs.field_scale,
        tail_estimate=coeffs.tail_estimate)


def beam_field_direct(beam, context, points, rtol=1e-9):
    """Angular-spectrum quadrature of the beam field (the expansion oracle).

    Integrates E(alpha) e^{i sqrt(k^2-alpha^2)(x + x0)} e^{i alpha y} over the
    propagating band |alpha| <= k with Gauss-Legendre nodes, doubling the
    node count until converged.  The evanescent band is negligible for wide
    beams by construction.
    """
    beam.validate_width(context)
    k = context.k
    pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    if beam.theta != 0.0:
        c, s = math.cos(beam.theta), math.sin(beam.theta)
        pts = pts @ np.array([[c, -s], [s, c]])  # rotate points by -theta
    amax = min(k * (1.0 - 1e-12), 14.0 * beam.beta)
    prev = None
    nodes = 128
    while nodes <= 16384:
        gx, gw = np.polynomial.legendre.leggauss(nodes)
        alpha = gx * amax
        wts = gw * amax
        kx = np.sqrt(k * k - alpha * alpha)
        spec = np.exp(-alpha ** 2 / (4.0 * beam.beta ** 2))
        phase = np.exp(1j * (np.outer(pts[:, 0] + beam.x0, kx)
                             + np.outer(pts[:, 1], alpha)))
        val = beam.amplitude / (2.0 * beam.beta * math.sqrt(math.pi)) \
            * (phase @ (spec * wts))
        if prev is not None:
            err = np.max(np.abs(val - prev))
            if err <= rtol * max(1.0, float(np.max(np.abs(val)))):
                return val if np.asarray(points).ndim > 1 else val[0]
        prev = val
        nodes *= 2
    raise NumericalError(
        "beam spectral quadrature did not converge "
        f"(last node count {nodes // 2})")


def overlap(c1, c2):
    """mu_12 = sum_n V_n2 conj(V_n1) in the coefficient metric."""
    n_max = max(c1.n_max, c2.n_max)
    a = c1.padded(n_max).values
    b = c2.padded(n_max).values
    return complex(np.sum(b * np.conj(a)))


@dataclass
class PrincipalModePair:
    v1: ModalCoefficients
    v2_orth: ModalCoefficients
    mu12: complex
    gram_norm: float


def orthogonalize(c1, c2):
    """Gram-Schmidt the second mode against the first.

    v2_orth = (c2 - mu12 c1) / sqrt(1 - |mu12|^2); raises
    DegenerateBeamsError when |mu12| -> 1.
    """
    mu = overlap(c1, c2)
    if abs(mu) >= 1.0 - 1e-8:
        raise DegenerateBeamsError(
            f"beams are not distinguishable: |mu12| = {abs(mu):.9f}")
    n_max = max(c1.n_max, c2.n_max)
    a = c1.padded(n_max)
    b = c2.padded(n_max)
    g = math.sqrt(1.0 - abs(mu) ** 2)
    vals = (b.values - mu * a.values) / g
    v2o = ModalCoefficients(n_max=n_max, values=vals, field_scale=None,
                            tail_estimate=max(a.tail_estimate,
                                              b.tail_estimate))
    return PrincipalModePair(v1=a, v2_orth=v2o, mu12=mu, gram_norm=g)


def principal_fields(coeffs, scatterer, points, context=None):
    """(incoming, outgoing, total) fields of a coefficient set.

    incoming_n = H_n^(2)(k rho) e^{-i n phi} / (2 sqrt(2 pi)) and
    outgoing_n = S_nn H_n^(1)(...) / (2 sqrt(2 pi)) while the order is
    propagating at the evaluation radius; effectively evanescent orders
    (|Y_n(k rho)| beyond SPLIT_Y_LIMIT) are split symmetrically so that
    incoming + outgoing always reproduces the total field exactly.

    scatterer=None means free space (S = 1 everywhere, explicit context
    required); total then equals the beam reconstruction
    sum_n V_n J_n e^{-i n phi} / sqrt(2 pi).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if scatterer is not None:
        rho_all = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(rho_all < scatterer.radius * (1.0 - 1e-12)):
            raise ValueError("principal fields are exterior-only")
        context = scatterer.context
    elif context is None:
        raise ValueError("free-space evaluation needs an explicit context")
    return _principal_fields_impl(coeffs, scatterer, pts, context.k,
                                  np.asarray(points).ndim > 1)


def _principal_fields_impl(coeffs, scatterer, pts, k, keep_shape):
    n_max = coeffs.n_max
    ns = np.arange(-n_max, n_max + 1)
    vals = coeffs.values
    inv = 1.0 / (2.0 * math.sqrt(2.0 * math.pi))
    inc = np.empty(len(pts), dtype=complex)
    outg = np.empty(len(pts), dtype=complex)
    if scatterer is not None:
        s_table = np.ones(n_max + 1, dtype=complex)
        m_hi = min(n_max, scatterer.n_max)
        s_table[:m_hi + 1] = scatterer.s_diag[:m_hi + 1]
    else:
        s_table = np.ones(n_max + 1, dtype=complex)
    for i, (px, py) in enumerate(pts):
        rho = math.hypot(px, py)
        phi = math.atan2(py, px)
        x = k * rho
        jt = specfun.bessel_j_sweep(n_max, x)
        yt = specfun.bessel_y_sweep(n_max, x) if x > 0 else \
            np.full(n_max + 1, -np.inf)
        prop = np.isfinite(yt) & (np.abs(yt) < SPLIT_Y_LIMIT)
        ang = np.exp(-1j * ns * phi)
        par = np.where(ns < 0, (-1.0) ** np.abs(ns), 1.0)
        m = np.abs(ns)
        j_m = jt[m] * par
        y_m = np.where(prop[m], yt[m], 0.0) * par
        s_m = s_table[m]
        h2 = j_m - 1j * y_m
        h1 = j_m + 1j * y_m
        # evanescent orders: symmetric split (J/2 each side), flux-free
        inc[i] = inv * np.sum(vals * np.where(prop[m], h2, j_m) * ang)
        outg[i] = inv * np.sum(vals * s_m * np.where(prop[m], h1, j_m) * ang)
    total = inc + outg
    if keep_shape:
        return inc, outg, total
    return inc[0], outg[0], total[0]
