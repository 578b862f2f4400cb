"""Few-photon Fock-space engine over one or two principal modes.

States are sparse maps from occupation tuples to complex amplitudes; the
ladder algebra is exact on this finite space (at most 4 photons total), so
first- and second-order correlations carry no truncation error.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MAX_TOTAL_PHOTONS = 4


@dataclass
class FockState:
    """Sparse superposition of occupation-number kets."""
    mode_count: int
    amplitudes: dict
    max_photons: int = MAX_TOTAL_PHOTONS

    def __post_init__(self):
        for occ in self.amplitudes:
            if len(occ) != self.mode_count:
                raise ValueError(f"occupation {occ} has wrong mode count")
            if sum(occ) > self.max_photons:
                raise ValueError(f"occupation {occ} exceeds the photon cap")

    def norm_sq(self):
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))


def build_state(kind, mode_count=2):
    """Input states: 'vacuum', 'single_mode_one_photon' (one mode),
    'single_photon_pair' |1,1>, 'noon2' (|2,0> + |0,2>)/sqrt(2)."""
    if kind == "vacuum":
        return FockState(mode_count, {(0,) * mode_count: 1.0 + 0.0j})
    if kind == "single_mode_one_photon":
        return FockState(1, {(1,): 1.0 + 0.0j})
    if kind == "single_photon_pair":
        return FockState(2, {(1, 1): 1.0 + 0.0j})
    if kind == "noon2":
        r = 1.0 / math.sqrt(2.0)
        return FockState(2, {(2, 0): complex(r), (0, 2): complex(r)})
    raise ValueError(f"unknown state kind {kind!r}")


def apply_eplus(state, weights):
    """Apply sum_j w_j a_j; returns the (unnormalized) lowered state."""
    weights = np.asarray(weights, dtype=complex)
    if weights.shape[0] != state.mode_count:
        raise ValueError("one weight per mode required")
    out = {}
    for occ, amp in state.amplitudes.items():
        for j in range(state.mode_count):
            nj = occ[j]
            if nj == 0 or weights[j] == 0.0:
                continue
            lowered = occ[:j] + (nj - 1,) + occ[j + 1:]
            out[lowered] = out.get(lowered, 0.0 + 0.0j) \
                + amp * weights[j] * math.sqrt(nj)
    return FockState(state.mode_count, out, state.max_photons)


def inner(bra, ket):
    """<bra|ket> over the sparse amplitude maps."""
    return complex(sum(np.conj(a) * ket.amplitudes.get(occ, 0.0)
                       for occ, a in bra.amplitudes.items()))


def g1_from_amplitudes(state, w1, w2):
    """<E-(r1) E+(r2)> given the per-mode field amplitudes at each point."""
    return inner(apply_eplus(state, w1), apply_eplus(state, w2))


def g2_from_amplitudes(state, w1, w2, intensity_floor=0.0):
    """Normalized equal-or-split-point second-order correlation.

    Returns None (an explicit undefined marker) when either equal-point
    intensity is at or below intensity_floor; the mode prefactor cancels
    exactly between numerator and denominator.
    """
    d1 = g1_from_amplitudes(state, w1, w1).real
    d2 = g1_from_amplitudes(state, w2, w2).real
    if d1 <= intensity_floor or d2 <= intensity_floor:
        return None
    num = apply_eplus(apply_eplus(state, w1), w2).norm_sq()
    return num / (d1 * d2)


@dataclass
class ModeFieldEvaluator:
    """Per-mode complex field amplitude functions plus a real prefactor.

    The mode fields are expected to belong to an orthogonalized pair
    (identity commutator matrix); the prefactor is the single real constant
    standing in for the field-operator normalization.
    """
    mode_fields: Sequence[Callable]
    prefactor: float = 1.0

    def amplitudes(self, point):
        return np.array([f(point) for f in self.mode_fields], dtype=complex)


def g1(state, evaluator, r1, r2):
    """First-order correlation between two points (equal-point is real >= 0)."""
    w1 = evaluator.amplitudes(r1)
    w2 = evaluator.amplitudes(r2)
    return evaluator.prefactor ** 2 * g1_from_amplitudes(state, w1, w2)


def g2(state, evaluator, r1, r2, intensity_floor=0.0):
    """Normalized second-order correlation; None marks undefined points."""
    w1 = evaluator.amplitudes(r1)
    w2 = evaluator.amplitudes(r2)
    return g2_from_amplitudes(state, w1, w2, intensity_floor=intensity_floor)


def mode_transform(target_patterns, source_patterns, tol=1e-6):
    """Overlap matrix between two pattern sets on a common angle grid.

    V[m, n] = (1/2 pi) int Phi_n(phi) conj(Y_m(phi)) dphi evaluated by the
    uniform-grid mean.  Every input row must be mean-square normalized.
    """
    tgt = np.atleast_2d(np.asarray(target_patterns, dtype=complex))
    src = np.atleast_2d(np.asarray(source_patterns, dtype=complex))
    if tgt.shape[1] != src.shape[1]:
        raise ValueError("pattern sets must share the angle grid")
    for name, rows in (("target", tgt), ("source", src)):
        norms = np.mean(np.abs(rows) ** 2, axis=1)
        if np.any(np.abs(norms - 1.0) > tol):
            raise ValueError(f"{name} patterns are not normalized")
    return (np.conj(tgt) @ src.T) / tgt.shape[1]


def commutator_matrix(v):
    """[a_i, a_j^+] entries delta_ij + (1-delta_ij) sum_n conj(V_jn) V_in."""
    v = np.atleast_2d(np.asarray(v, dtype=complex))
    m = v.shape[0]
    out = np.eye(m, dtype=complex)
    for i in range(m):
        for j in range(m):
            if i != j:
                out[i, j] = np.sum(np.conj(v[j]) * v[i])
    return out
