"""Closed-form characteristic modes of the circular conducting cylinder.

Everything is diagonal in the circular harmonics e^{-i n phi}: eigenvalues
lambda_n = -Y_n(ka)/J_n(ka), perturbation P_nn = -J_n(ka)/H_n^(1)(ka) (so the
basis field vanishes on the boundary), scattering S_nn = 1 + 2 P_nn.  Serves
both as the production path for circular scatterers and as the oracle for
the method-of-moments solver.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .mom import WaveContext

#: orders with |P_nn| below this respond as if unscattered (S = 1)
P_RETAIN = 1e-8
#: |J_n(ka)| below this marks an interior-resonance order (lambda -> inf)
RESONANCE_EPS = 1e-14


def circle_eigenvalue(n, ka):
    """lambda_n = -Y_n(ka)/J_n(ka); +-inf sentinel at interior resonances."""
    if ka <= 0.0:
        raise ValueError("ka must be positive")
    m = abs(int(n))
    j = specfun.bessel_j_sweep(m, ka)[m]
    y = specfun.bessel_y_sweep(m, ka)[m]
    if abs(j) < RESONANCE_EPS:
        return math.inf
    if not math.isfinite(y):
        return math.inf if j > 0 else -math.inf
    return -y / j


def circle_perturbation(n, ka):
    """P_nn = -J_n(ka)/H_n^(1)(ka); 0 for orders with overflowed Y_n."""
    if ka <= 0.0:
        raise ValueError("ka must be positive")
    m = abs(int(n))
    j = specfun.bessel_j_sweep(m, ka)[m]
    y = specfun.bessel_y_sweep(m, ka)[m]
    if not math.isfinite(y):
        return 0.0 + 0.0j
    return -j / complex(j, y)


def default_n_max(ka):
    """Smallest retained order bound: |P_nn| < P_RETAIN for all larger n,
    floored at ka + 12."""
    floor = int(math.ceil(ka)) + 12
    n = floor
    while abs(circle_perturbation(n, ka)) >= P_RETAIN:
        n += 4
    while n > floor and abs(circle_perturbation(n - 1, ka)) < P_RETAIN:
        n -= 1
    return n


@dataclass
class CircleScatterer:
    """Per-order mode tables for a circle of given radius.

    Orders run over |n| <= n_max; all tables are even in n.  ``unscattered``
    marks orders where Y overflowed (P forced to 0), ``resonant`` marks
    interior resonances (J_n(ka) ~ 0, infinite-eigenvalue sentinel).
    """
    radius: float
    context: WaveContext
    n_max: int = None
    eigenvalues: np.ndarray = field(init=False)
    p_diag: np.ndarray = field(init=False)
    s_diag: np.ndarray = field(init=False)
    unscattered: np.ndarray = field(init=False)
    resonant: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")
        ka = self.ka
        if self.n_max is None:
            self.n_max = default_n_max(ka)
        m = self.n_max
        j = specfun.bessel_j_sweep(m, ka)
        y = specfun.bessel_y_sweep(m, ka)
        over = ~np.isfinite(y)
        res = np.abs(j) < RESONANCE_EPS
        lam = np.full(m + 1, np.inf)
        ok = ~(res | over)
        lam[ok] = -y[ok] / j[ok]
        sign_sel = over & ~res
        lam[sign_sel] = np.where(j[sign_sel] > 0, np.inf, -np.inf)
        p = np.zeros(m + 1, dtype=complex)
        good = ~over
        p[good] = -j[good] / (j[good] + 1j * y[good])
        p[np.abs(p) < P_RETAIN] = 0.0
        self.eigenvalues = lam
        self.p_diag = p
        self.s_diag = 1.0 + 2.0 * p
        self.unscattered = over | (np.abs(p) == 0.0)
        self.resonant = res

    @property
    def ka(self):
        return self.context.k * self.radius

    def p_diag_table(self, up_to):
        """P_nn for n = 0..up_to, zero beyond the retained range."""
        out = np.zeros(up_to + 1, dtype=complex)
        m = min(up_to, self.n_max)
        out[:m + 1] = self.p_diag[:m + 1]
        return out

    def s_of(self, n):
        m = abs(int(n))
        return self.s_diag[m] if m <= self.n_max else 1.0 + 0.0j


def circle_basis_field(scatterer, n, points):
    """Basis field F_n = (J_n(k rho) + P_nn H_n^(1)(k rho)) e^{-i n phi}/sqrt(2 pi).

    Vanishes identically at rho = radius; interior points raise ValueError.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rho < scatterer.radius * (1.0 - 1e-12)):
        raise ValueError("basis field is defined on the exterior only")
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    k = scatterer.context.k
    m = abs(int(n))
    sign = specfun.parity_sign(n) if n < 0 else 1
    p = scatterer.p_diag[m] if m <= scatterer.n_max else 0.0
    out = np.empty(len(pts), dtype=complex)
    for i, (r, ph) in enumerate(zip(rho, phi)):
        j = specfun.bessel_j_sweep(m, k * r)[m]
        y = specfun.bessel_y_sweep(m, k * r)[m]
        rad = j + p * complex(j, y) if math.isfinite(y) else complex(j)
        out[i] = sign * rad * np.exp(-1j * n * ph) / math.sqrt(2.0 * math.pi)
    return out if np.asarray(points).ndim > 1 else out[0]


def circle_incoming_outgoing(scatterer, n, points):
    """Incoming and outgoing parts of the basis field:

    incoming = H_n^(2)(k rho) e^{-i n phi} / (2 sqrt(2 pi)),
    outgoing = S_nn H_n^(1)(k rho) e^{-i n phi} / (2 sqrt(2 pi)).

    Their sum equals circle_basis_field exactly.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rho < scatterer.radius * (1.0 - 1e-12)):
        raise ValueError("fields are defined on the exterior only")
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    k = scatterer.context.k
    m = abs(int(n))
    sign = specfun.parity_sign(n) if n < 0 else 1
    s = scatterer.s_of(n)
    inc = np.empty(len(pts), dtype=complex)
    outg = np.empty(len(pts), dtype=complex)
    c = sign / (2.0 * math.sqrt(2.0 * math.pi))
    for i, (r, ph) in enumerate(zip(rho, phi)):
        j = specfun.bessel_j_sweep(m, k * r)[m]
        y = specfun.bessel_y_sweep(m, k * r)[m]
        ang = np.exp(-1j * n * ph)
        inc[i] = c * complex(j, -y) * ang
        outg[i] = c * s * complex(j, y) * ang
    if np.asarray(points).ndim > 1:
        return inc, outg
    return inc[0], outg[0]


def circle_pattern(n, phi_samples):
    """Normalized radiation pattern of harmonic n: e^{-i n phi}."""
    return np.exp(-1j * n * np.asarray(phi_samples, dtype=float))


def composite_outgoing_pattern(coeff_values, n_max, scatterer, phi_samples):
    """Outgoing-channel angular amplitude of a coefficient set:

    A(phi) = sum_n V_n S_nn i^{-n} e^{-i n phi} / (2 sqrt(2 pi)),

    i.e. the outgoing field tends to A(phi) sqrt(2/(pi k rho)) e^{i(k rho - pi/4)}.
    """
    phis = np.asarray(phi_samples, dtype=float)
    ns = np.arange(-n_max, n_max + 1)
    s = np.array([scatterer.s_of(n) if scatterer is not None else 1.0
                  for n in ns])
    ipow = (-1j) ** np.mod(ns, 4)
    weights = np.asarray(coeff_values, dtype=complex) * s * ipow
    basis = np.exp(-1j * np.outer(ns, phis))
    return (weights @ basis) / (2.0 * math.sqrt(2.0 * math.pi))
