"""Acceptance gate: every release criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line (run with -s to see them all even
on success).  Tolerances are fixed here, not tuned at runtime.
"""

import hashlib
import math
import time
from dataclasses import replace

import numpy as np
import pytest

import oracles
from cmscat import (CircleScatterer, GaussianBeamSpec, WaveContext,
                    assemble_impedance, beam_field_direct, circle_eigenvalue,
                    circle_perturbation, discretize_contour,
                    excitation_coeffs, load_preset, orthogonalize,
                    principal_fields, run_scenario, solve_modes,
                    write_outputs)
from cmscat import fock, specfun
from cmscat.fock import commutator_matrix
from cmscat.mom import Circle, far_pattern
from cmscat.scenario import _CircleFieldEngine

CTX = WaveContext(1.0)
BETA_FIG = 0.04


def _report(num, label, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num}: {label} ... {status} {detail}")
    assert ok, f"criterion {num} failed: {label} {detail}"


# -- 1. special functions ---------------------------------------------------

def test_criterion_1_special_functions():
    t0 = time.perf_counter()
    worst_rec = 0.0
    worst_wr = 0.0
    xs = np.concatenate([np.geomspace(0.1, 400.0, 21), [399.5, 47.3]])
    for x in xs:
        nmax = 400
        j = specfun.bessel_j_sweep(nmax, float(x))
        y = specfun.bessel_y_sweep(nmax, float(x))
        n = np.arange(1, nmax)
        ok = (np.abs(j[n - 1]) > 1e-280) & (np.abs(j[n]) > 1e-280) \
            & (np.abs(j[n + 1]) > 1e-280)
        if ok.any():
            m = n[ok]
            res = np.abs(j[m + 1] - (2 * m / x) * j[m] + j[m - 1])
            scale = np.maximum.reduce([np.abs(j[m - 1]), np.abs(j[m]),
                                       np.abs(j[m + 1])])
            worst_rec = max(worst_rec, float((res / scale).max()))
        n = np.arange(1, nmax + 1)
        okw = (np.abs(j[n - 1]) > 1e-280) & (np.abs(j[n]) > 1e-280) \
            & np.isfinite(y[n]) & np.isfinite(y[n - 1]) \
            & (np.abs(y[n]) < 1e270) & (np.abs(y[n - 1]) < 1e270)
        if okw.any():
            m = n[okw]
            jd = j[m - 1] - (m / x) * j[m]
            yd = y[m - 1] - (m / x) * y[m]
            w = j[m] * yd - jd * y[m]
            worst_wr = max(worst_wr,
                           float(np.abs(w * math.pi * x / 2 - 1).max()))
    worst_series = 0.0
    for x in (0.1, 0.8, 2.9, 7.2, 12.7, 19.6):
        j = specfun.bessel_j_sweep(10, x)
        y = specfun.bessel_y_sweep(10, x)
        for n in range(11):
            jr = oracles.j_series(n, x)
            yr = oracles.y_series(n, x)
            worst_series = max(
                worst_series,
                abs(j[n] - jr) / max(abs(jr), 1e-3),
                abs(y[n] - yr) / max(abs(yr), 1e-3))
    dt = time.perf_counter() - t0
    _report(1, "special-function suites",
            worst_rec <= 1e-10 and worst_wr <= 1e-10
            and worst_series <= 1e-10 and dt < 10.0,
            f"(recurrence {worst_rec:.1e}, wronskian {worst_wr:.1e}, "
            f"series {worst_series:.1e}, {dt:.1f}s)")


# -- 2. analytic circle -----------------------------------------------------

def test_criterion_2_analytic_circle():
    t0 = time.perf_counter()
    worst_bc = worst_unit = worst_affine = worst_cons = 0.0
    for ka in (1.0, 3.0, 10 * math.pi):
        scat = CircleScatterer(ka / CTX.k, CTX)
        m = scat.n_max
        j = specfun.bessel_j_sweep(m, ka)
        y = specfun.bessel_y_sweep(m, ka)
        for n in range(m + 1):
            if scat.unscattered[n]:
                continue
            f_at_a = j[n] + scat.p_diag[n] * complex(j[n], y[n])
            worst_bc = max(worst_bc, abs(f_at_a))
            lam = scat.eigenvalues[n]
            if math.isfinite(lam):
                worst_cons = max(
                    worst_cons,
                    abs(-1.0 / (1.0 - 1j * lam) - scat.p_diag[n]))
        worst_unit = max(worst_unit,
                         float(np.abs(np.abs(scat.s_diag) - 1.0).max()))
        worst_affine = max(
            worst_affine,
            float(np.abs(scat.s_diag - (1.0 + 2.0 * scat.p_diag)).max()))
    dt = time.perf_counter() - t0
    _report(2, "analytic circle identities",
            worst_bc <= 1e-12 and worst_unit <= 1e-12
            and worst_affine <= 1e-12 and worst_cons <= 1e-10
            and dt < 5.0,
            f"(boundary {worst_bc:.1e}, |S|-1 {worst_unit:.1e}, "
            f"S-1-2P {worst_affine:.1e}, response {worst_cons:.1e}, "
            f"{dt:.1f}s)")


# -- 3. method of moments vs analytic --------------------------------------

def _mom_multiset_error(n_segments, ka, p):
    c = discretize_contour(Circle(ka / CTX.k), CTX, n_segments)
    z = assemble_impedance(c, CTX)
    modes = solve_modes(z, p)
    ana = [circle_eigenvalue(0, ka)]
    n = 1
    while len(ana) < p + 4:
        lam = circle_eigenvalue(n, ka)
        ana += [lam, lam]
        n += 1
    pool = sorted(ana, key=abs)[:p]
    errs = []
    for g in sorted(modes.eigenvalues, key=abs):
        i = int(np.argmin([abs(g - a) for a in pool]))
        errs.append(abs((g - pool[i]) / pool[i]))
        pool.pop(i)
    return max(errs), modes


def test_criterion_3_mom_vs_analytic():
    t0 = time.perf_counter()
    ka = 5.0
    err512, modes = _mom_multiset_error(512, ka, 13)
    err256, _ = _mom_multiset_error(256, ka, 13)
    ratio = err256 / err512

    # pattern subspaces vs harmonic pairs
    phis = np.arange(1024) * (2 * math.pi / 1024)
    lam_ana = {n: circle_eigenvalue(n, ka) for n in range(0, 8)}
    worst_proj = 0.0
    n_checked = 0
    for n, lam_n in lam_ana.items():
        members = [i for i, lam in enumerate(modes.eigenvalues)
                   if abs(lam - lam_n) < 5e-3 * abs(lam_n)]
        n_checked += len(members)
        if not members:
            continue
        basis = [np.exp(-1j * n * phis)]
        if n > 0:
            basis.append(np.exp(1j * n * phis))
        b = np.stack(basis)
        for idx in members:
            pat = far_pattern(modes, idx, phis).values
            coef = (np.conj(b) @ pat) / len(phis)
            resid = pat - coef @ b
            worst_proj = max(worst_proj, float(
                np.sqrt(np.mean(np.abs(resid) ** 2))
                / np.sqrt(np.mean(np.abs(pat) ** 2))))
    dt = time.perf_counter() - t0
    _report(3, "method-of-moments vs analytic circle",
            err512 < 0.01 and ratio >= 2.0 and worst_proj < 1e-3
            and n_checked == 13 and dt < 60.0,
            f"(eig err {err512:.2e}, refine ratio {ratio:.2f}, "
            f"pattern proj {worst_proj:.1e} over {n_checked} modes, "
            f"{dt:.1f}s)")


# -- 4. beam expansion ------------------------------------------------------

def test_criterion_4_beam_expansion():
    t0 = time.perf_counter()
    beam = GaussianBeamSpec(beta=BETA_FIG, x0=0.0)
    ys = np.linspace(-40.0, 40.0, 33)
    pts = np.stack([np.zeros_like(ys), ys], axis=1)
    ref = beam_field_direct(beam, CTX, pts)
    scale = np.abs(ref).max()
    errs = {}
    norms = {}
    for order in ("leading", "cubic"):
        c = excitation_coeffs(beam, CTX, order=order)
        _, _, tot = principal_fields(c, None, pts, context=CTX)
        errs[order] = float(np.abs(c.field_scale * tot - ref).max() / scale)
        norms[order] = abs(c.norm_sq() - 1.0)
    theta = math.radians(45.0)
    rbeam = GaussianBeamSpec(beta=BETA_FIG, theta=theta)
    cr, sr = math.cos(theta), math.sin(theta)
    rpts = pts @ np.array([[cr, sr], [-sr, cr]]).T
    rref = beam_field_direct(rbeam, CTX, rpts)
    c45 = excitation_coeffs(rbeam, CTX, order="leading")
    _, _, rtot = principal_fields(c45, None, rpts, context=CTX)
    rot_err = float(np.abs(c45.field_scale * rtot - rref).max()
                    / np.abs(rref).max())
    dt = time.perf_counter() - t0
    _report(4, "beam expansion vs spectral oracle",
            errs["leading"] <= 0.02 and errs["cubic"] <= 0.01
            and max(norms.values()) <= 1e-10 and rot_err <= 0.02
            and dt < 30.0,
            f"(leading {errs['leading']:.2e}, refined {errs['cubic']:.2e}, "
            f"norm {max(norms.values()):.1e}, rotated {rot_err:.2e}, "
            f"{dt:.1f}s)")


# -- 5. principal modes -----------------------------------------------------

def test_criterion_5_principal_modes():
    t0 = time.perf_counter()
    scat = CircleScatterer(5.0, CTX)
    c1 = excitation_coeffs(GaussianBeamSpec(beta=BETA_FIG), CTX)
    c2 = excitation_coeffs(
        GaussianBeamSpec(beta=BETA_FIG, theta=math.radians(45)), CTX)
    pair = orthogonalize(c1, c2)
    mu_ok = abs(pair.mu12) < 0.05
    comm = commutator_matrix(np.stack([pair.v1.values,
                                       pair.v2_orth.values]))
    comm_dev = float(np.abs(comm - np.eye(2)).max())
    phis = np.linspace(0, 2 * math.pi, 25)[:-1]
    bpts = np.stack([5.0 * np.cos(phis), 5.0 * np.sin(phis)], axis=1)
    probe = np.stack([np.linspace(5.3, 25.0, 40), np.zeros(40)], axis=1)
    worst_bc = 0.0
    for coeffs in (pair.v1, pair.v2_orth):
        _, _, tot_b = principal_fields(coeffs, scat, bpts)
        _, _, tot_p = principal_fields(coeffs, scat, probe)
        worst_bc = max(worst_bc,
                       float(np.abs(tot_b).max() / np.abs(tot_p).max()))
    dt = time.perf_counter() - t0
    _report(5, "principal-mode pair",
            mu_ok and comm_dev <= 1e-10 and worst_bc <= 1e-3 and dt < 30.0,
            f"(|mu12| {abs(pair.mu12):.1e}, commutator {comm_dev:.1e}, "
            f"boundary {worst_bc:.1e}, {dt:.1f}s)")


# -- 6. quantum engine ------------------------------------------------------

def test_criterion_6_quantum_oracles():
    t0 = time.perf_counter()
    v = 0.37 - 0.61j
    pair = fock.build_state("single_photon_pair")
    noon = fock.build_state("noon2")
    hand = [
        abs(fock.g2_from_amplitudes(pair, [v, v], [v, v]) - 1.0),
        abs(fock.g2_from_amplitudes(pair, [v, 0.0], [v, 0.0]) - 0.0),
        abs(fock.g2_from_amplitudes(noon, [v, 1j * v], [v, 1j * v]) - 0.0),
        abs(fock.g2_from_amplitudes(noon, [v, -1j * v], [v, -1j * v]) - 0.0),
        abs(fock.g2_from_amplitudes(noon, [v, v], [v, v]) - 1.0),
    ]
    rng = np.random.default_rng(77)
    worst_dense = 0.0
    for _ in range(40):
        occs = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
        amps = rng.normal(size=6) + 1j * rng.normal(size=6)
        amps /= np.linalg.norm(amps)
        state = fock.FockState(2, dict(zip(occs, amps)))
        w1 = rng.normal(size=2) + 1j * rng.normal(size=2)
        w2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        d1 = abs(fock.g1_from_amplitudes(state, w1, w2)
                 - oracles.dense_g1(state.amplitudes, w1, w2))
        g = fock.g2_from_amplitudes(state, w1, w2)
        dg = oracles.dense_g2(state.amplitudes, w1, w2)
        worst_dense = max(worst_dense, d1, abs(g - dg) / max(abs(dg), 1.0))
    dt = time.perf_counter() - t0
    _report(6, "quantum-engine oracles",
            max(hand) <= 1e-10 and worst_dense <= 1e-12 and dt < 5.0,
            f"(hand {max(hand):.1e}, dense {worst_dense:.1e}, {dt:.1f}s)")


# -- 7. figure-level properties ---------------------------------------------

def test_criterion_7_figure_properties():
    t0 = time.perf_counter()
    cfg = load_preset("fig3")
    res = run_scenario(cfg)
    run_s = time.perf_counter() - t0
    g = res.grid
    gx, gy = np.meshgrid(g.x, g.y)
    shadow = int(((~g.g2_mask) & (gx > cfg.radius)
                  & (g.g1 > 0.05 * g.g1.max()) & (g.g2 < 0.05)).sum())

    res0 = run_scenario(replace(cfg, scatterer="none", radius=None))
    ix = int(np.argmin(np.abs(res0.grid.x - 12.0)))
    cut = res0.grid.g1[:, ix]
    contrast = float(cut.max() / cut[cut > 0].min())

    # photon-number conservation: angle-integrated intensity averaged over a
    # half-wavelength annulus (the incoming/outgoing standing-wave cross term
    # cancels over one radial period)
    ctx = WaveContext(cfg.wavelength)
    c1 = excitation_coeffs(cfg.beams[0], ctx)
    c2 = excitation_coeffs(cfg.beams[1], ctx)
    pair = orthogonalize(c1, c2)
    sets = [pair.v1, pair.v2_orth]
    eng_s = _CircleFieldEngine(ctx, CircleScatterer(cfg.radius, ctx), sets)
    eng_0 = _CircleFieldEngine(ctx, None, sets)

    def annulus_intensity(engine, r0=40.0, nrad=16, nphi=4096):
        acc = 0.0
        for jr in range(nrad):
            r = r0 + jr * (0.5 * cfg.wavelength / nrad)
            phis = np.arange(nphi) * (2 * math.pi / nphi)
            f = engine.fields(r * np.cos(phis), r * np.sin(phis))
            acc += float(np.mean(np.abs(f[0]) ** 2 + np.abs(f[1]) ** 2))
        return acc / nrad

    i_s = annulus_intensity(eng_s)
    i_0 = annulus_intensity(eng_0)
    cons = abs(i_s - i_0) / i_0
    dt = time.perf_counter() - t0
    _report(7, "figure-level map properties",
            run_s < 120.0 and shadow >= 100 and contrast > 3.0
            and cons <= 1e-3,
            f"(run {run_s:.1f}s, shadow px {shadow}, contrast {contrast:.1f},"
            f" conservation {cons:.1e}, total {dt:.1f}s)")


# -- 8. determinism ----------------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    cfg = replace(load_preset("fig3"), grid=(-25.0, 25.0, -25.0, 25.0,
                                             64, 64))
    digests = []
    for sub, threads in (("r1", 1), ("r2", 1), ("r4", 4)):
        out = tmp_path / sub
        write_outputs(run_scenario(replace(cfg, threads=threads)), str(out))
        digests.append(tuple(
            hashlib.sha256((out / f).read_bytes()).hexdigest()
            for f in ("g1.csv", "g2.csv")))
    ok = digests[0] == digests[1] == digests[2]
    _report(8, "byte-identical CSVs across runs and worker counts", ok,
            f"(3 runs, worker counts 1/1/4)")
