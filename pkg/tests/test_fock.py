"""Exact ladder algebra against hand expansions and a dense-matrix oracle."""

import math

import numpy as np
import pytest

import oracles
from cmscat import fock
from cmscat.fock import (FockState, ModeFieldEvaluator, apply_eplus,
                         build_state, commutator_matrix, g1, g2, inner,
                         mode_transform)


class TestStates:
    def test_single_photon_pair(self):
        s = build_state("single_photon_pair")
        assert s.amplitudes == {(1, 1): 1.0 + 0.0j}
        assert s.norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_noon2(self):
        s = build_state("noon2")
        r = 1 / math.sqrt(2)
        assert s.amplitudes[(2, 0)] == pytest.approx(r)
        assert s.amplitudes[(0, 2)] == pytest.approx(r)
        assert s.norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_vacuum_and_single_mode(self):
        assert build_state("vacuum").amplitudes == {(0, 0): 1.0 + 0.0j}
        assert build_state("single_mode_one_photon").amplitudes == \
            {(1,): 1.0 + 0.0j}

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_state("cat")

    def test_photon_cap_enforced(self):
        with pytest.raises(ValueError):
            FockState(2, {(3, 2): 1.0})


class TestLadder:
    def test_vacuum_annihilates(self):
        out = apply_eplus(build_state("vacuum"), [0.3, 0.7j])
        assert out.norm_sq() == 0.0

    def test_single_lowering(self):
        out = apply_eplus(build_state("single_photon_pair"), [1.0, 0.0])
        assert out.amplitudes == {(0, 1): 1.0 + 0.0j}

    def test_double_lowering_hand_expansion(self):
        # (a1 + a2)^2 |1,1> = 2 |0,0>
        v = 0.8 - 0.2j
        s = build_state("single_photon_pair")
        out = apply_eplus(apply_eplus(s, [v, v]), [v, v])
        assert set(out.amplitudes) == {(0, 0)}
        assert out.amplitudes[(0, 0)] == pytest.approx(2.0 * v * v,
                                                       abs=1e-14)

    def test_weight_count_guard(self):
        with pytest.raises(ValueError):
            apply_eplus(build_state("single_photon_pair"), [1.0])


class TestG1:
    def test_vacuum_everywhere_zero(self):
        s = build_state("vacuum")
        assert fock.g1_from_amplitudes(s, [1.0, 2.0], [0.3, 0.1]) == 0.0

    def test_pair_equal_point(self):
        v1, v2 = 0.37 - 0.11j, -0.05 + 0.62j
        s = build_state("single_photon_pair")
        got = fock.g1_from_amplitudes(s, [v1, v2], [v1, v2])
        assert got == pytest.approx(abs(v1) ** 2 + abs(v2) ** 2, abs=1e-14)
        assert got.imag == 0.0
        assert got.real >= 0.0

    def test_single_mode(self):
        v = 0.9 + 0.1j
        s = build_state("single_mode_one_photon")
        got = fock.g1_from_amplitudes(s, [v], [v])
        assert got == pytest.approx(abs(v) ** 2, abs=1e-14)

    def test_hermitian_symmetry(self):
        s = build_state("noon2")
        w1 = np.array([0.3 + 0.2j, -0.6j])
        w2 = np.array([-0.1, 0.44 + 0.17j])
        a = fock.g1_from_amplitudes(s, w1, w2)
        b = fock.g1_from_amplitudes(s, w2, w1)
        assert a == pytest.approx(np.conj(b), abs=1e-14)

    def test_cauchy_schwarz(self):
        s = build_state("single_photon_pair")
        rng = np.random.default_rng(8)
        for _ in range(20):
            w1 = rng.normal(size=2) + 1j * rng.normal(size=2)
            w2 = rng.normal(size=2) + 1j * rng.normal(size=2)
            g12 = fock.g1_from_amplitudes(s, w1, w2)
            g11 = fock.g1_from_amplitudes(s, w1, w1).real
            g22 = fock.g1_from_amplitudes(s, w2, w2).real
            assert abs(g12) ** 2 <= g11 * g22 * (1 + 1e-12)


class TestG2HandValues:
    def test_pair_equal_amplitudes(self):
        v = 0.4 - 0.3j
        s = build_state("single_photon_pair")
        assert fock.g2_from_amplitudes(s, [v, v], [v, v]) == \
            pytest.approx(1.0, abs=1e-10)

    def test_pair_shadow_antibunching(self):
        v = 0.55 + 0.1j
        s = build_state("single_photon_pair")
        assert fock.g2_from_amplitudes(s, [v, 0.0], [v, 0.0]) == \
            pytest.approx(0.0, abs=1e-10)

    def test_noon_quadrature_null(self):
        v = 0.7 - 0.2j
        s = build_state("noon2")
        for sign in (1.0, -1.0):
            w = [v, sign * 1j * v]
            assert fock.g2_from_amplitudes(s, w, w) == \
                pytest.approx(0.0, abs=1e-10)

    def test_noon_in_phase_unity(self):
        v = 0.7 - 0.2j
        s = build_state("noon2")
        assert fock.g2_from_amplitudes(s, [v, v], [v, v]) == \
            pytest.approx(1.0, abs=1e-10)

    def test_masked_below_floor(self):
        s = build_state("single_photon_pair")
        assert fock.g2_from_amplitudes(s, [0.0, 0.0], [1.0, 1.0]) is None
        assert fock.g2_from_amplitudes(s, [1e-9, 0], [1e-9, 0],
                                       intensity_floor=1e-12) is None

    def test_prefactor_invariance(self):
        s = build_state("noon2")
        w1 = np.array([0.3 + 0.2j, -0.6j])
        w2 = np.array([-0.1, 0.44 + 0.17j])
        base = fock.g2_from_amplitudes(s, w1, w2)
        for c in (2.0, 0.01, 3.7j, -1.2 + 0.8j):
            scaled = fock.g2_from_amplitudes(s, c * w1, c * w2)
            assert scaled == pytest.approx(base, rel=1e-12)

    def test_exchange_symmetry(self):
        s = build_state("single_photon_pair")
        w1 = np.array([0.9, 0.2 - 0.4j])
        w2 = np.array([0.1j, 0.77])
        assert fock.g2_from_amplitudes(s, w1, w2) == \
            pytest.approx(fock.g2_from_amplitudes(s, w2, w1), abs=1e-12)


def random_small_state(rng):
    occs = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
    amps = rng.normal(size=len(occs)) + 1j * rng.normal(size=len(occs))
    amps /= np.linalg.norm(amps)
    return FockState(2, dict(zip(occs, amps)))


@pytest.mark.parametrize("seed", range(10))
def test_dense_operator_equivalence(seed):
    rng = np.random.default_rng(500 + seed)
    s = random_small_state(rng)
    for _ in range(5):
        w1 = rng.normal(size=2) + 1j * rng.normal(size=2)
        w2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        got1 = fock.g1_from_amplitudes(s, w1, w2)
        want1 = oracles.dense_g1(s.amplitudes, w1, w2)
        assert got1 == pytest.approx(want1, abs=1e-12)
        got2 = fock.g2_from_amplitudes(s, w1, w2)
        want2 = oracles.dense_g2(s.amplitudes, w1, w2)
        assert got2 == pytest.approx(want2, rel=1e-12)


class TestEvaluatorInterface:
    def test_g1_g2_through_evaluator(self):
        s = build_state("single_photon_pair")
        ev = ModeFieldEvaluator(
            mode_fields=(lambda p: complex(p[0]), lambda p: complex(p[1])),
            prefactor=3.0)
        r1, r2 = np.array([0.5, 0.5]), np.array([0.2, 0.8])
        got = g1(s, ev, r1, r1)
        assert got == pytest.approx(9.0 * (0.25 + 0.25), abs=1e-13)
        v = g2(s, ev, r1, r2)
        ref = fock.g2_from_amplitudes(s, [0.5, 0.5], [0.2, 0.8])
        assert v == pytest.approx(ref, rel=1e-12)


class TestModeTransform:
    def grid(self, n=256):
        return np.arange(n) * (2 * math.pi / n)

    def test_identity(self):
        phis = self.grid()
        basis = np.stack([np.exp(-1j * n * phis) for n in range(-2, 3)])
        v = mode_transform(basis, basis)
        np.testing.assert_allclose(v, np.eye(5), atol=1e-10)

    def test_rotation_gives_diagonal_phases(self):
        phis = self.grid()
        theta = 0.37
        ns = np.arange(-3, 4)
        src = np.stack([np.exp(-1j * n * (phis - theta)) for n in ns])
        tgt = np.stack([np.exp(-1j * n * phis) for n in ns])
        v = mode_transform(tgt, src)
        want = np.diag(np.exp(1j * ns * theta))
        np.testing.assert_allclose(v, want, atol=1e-10)

    def test_unnormalized_rejected(self):
        phis = self.grid()
        bad = 2.0 * np.exp(-1j * phis)[None, :]
        good = np.exp(-1j * phis)[None, :]
        with pytest.raises(ValueError):
            mode_transform(bad, good)
        with pytest.raises(ValueError):
            mode_transform(good, bad)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            mode_transform(np.ones((1, 8)), np.ones((1, 16)))


class TestCommutator:
    def test_orthonormal_rows_identity(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(2, 9)) + 1j * rng.normal(size=(2, 9))
        q, _ = np.linalg.qr(m.T.conj())
        rows = q.T.conj()[:2]
        c = commutator_matrix(rows)
        np.testing.assert_allclose(c, np.eye(2), atol=1e-10)

    def test_offdiagonal_equals_overlap(self):
        rng = np.random.default_rng(4)
        v1 = rng.normal(size=7) + 1j * rng.normal(size=7)
        v1 /= np.linalg.norm(v1)
        v2 = rng.normal(size=7) + 1j * rng.normal(size=7)
        v2 /= np.linalg.norm(v2)
        c = commutator_matrix(np.stack([v1, v2]))
        mu = np.sum(v2 * np.conj(v1))     # overlap of mode 2 against mode 1
        assert c[1, 0] == pytest.approx(mu, abs=1e-14)
        assert c[0, 1] == pytest.approx(np.conj(mu), abs=1e-14)

    def test_single_mode_scalar_one(self):
        v = np.array([[0.6, 0.8j]])
        c = commutator_matrix(v)
        assert c.shape == (1, 1)
        assert c[0, 0] == 1.0


def test_inner_conjugate_linearity():
    a = FockState(2, {(1, 0): 0.6, (0, 1): 0.8j})
    b = FockState(2, {(1, 0): 1.0})
    assert inner(a, b) == pytest.approx(0.6)
    assert inner(b, a) == pytest.approx(0.6)
    b2 = FockState(2, {(0, 1): 2.0})
    assert inner(a, b2) == pytest.approx(np.conj(0.8j) * 2.0)
