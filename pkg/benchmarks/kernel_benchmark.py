#!/usr/bin/env python3
"""Benchmark the hot kernels under both backends (numba vs pure NumPy).

Each backend runs in its own subprocess (the backend is fixed at import
time), timing the two dominant workloads:

* cylinder-function sweep tables over a batch of arguments,
* per-pixel modal field synthesis for a two-beam scattering map.

Usage:  python benchmarks/kernel_benchmark.py [--pixels N] [--orders N]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, math, time
import numpy as np
import cmscat.kernels as K

cfg = json.loads({cfg!r})
npts = cfg["pixels"]
nmax = cfg["orders"]

rng = np.random.default_rng(0)
rho = rng.uniform(5.0, 35.0, npts)
phi = rng.uniform(0.0, 2 * math.pi, npts)
px = rho * np.cos(phi)
py = rho * np.sin(phi)
k = 2 * math.pi

coefs = (rng.normal(size=(2, 2 * nmax + 1))
         + 1j * rng.normal(size=(2, 2 * nmax + 1)))
coefs /= np.linalg.norm(coefs, axis=1, keepdims=True)
pdiag = np.exp(-np.arange(47.0) / 6.0).astype(complex)

# warm up (includes JIT compilation when numba is active)
K.modal_field_grid(px[:64], py[:64], k, coefs, pdiag, nmax)
xs = rng.uniform(0.5, 250.0, 256)
K.h0_many(xs)

t0 = time.perf_counter()
out = K.modal_field_grid(px, py, k, coefs, pdiag, nmax)
t_synth = time.perf_counter() - t0

t0 = time.perf_counter()
for _ in range(20):
    K.h0_many(xs)
t_h0 = (time.perf_counter() - t0) / 20

print(json.dumps({{
    "backend": K.backend_name(),
    "synth_s": t_synth,
    "h0_s": t_h0,
    "checksum": float(np.abs(out).sum()),
}}))
"""


def run_backend(backend, cfg):
    env = dict(os.environ, CMSCAT_BACKEND=backend)
    code = _WORKER.format(cfg=json.dumps(cfg))
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pixels", type=int, default=63001,
                    help="synthesis points (default: one 251x251 map)")
    ap.add_argument("--orders", type=int, default=477,
                    help="retained harmonic order")
    args = ap.parse_args()
    cfg = {"pixels": args.pixels, "orders": args.orders}

    results = {}
    for backend in ("numpy", "numba"):
        try:
            results[backend] = run_backend(backend, cfg)
        except subprocess.CalledProcessError as exc:
            print(f"{backend}: failed ({exc.stderr.strip().splitlines()[-1]})")
    if not results:
        return 1

    print(f"\nworkload: {cfg['pixels']} pixels x {cfg['orders']} orders, "
          "2 coefficient sets")
    print(f"{'backend':<8} {'synthesis':>12} {'h0 batch':>12}")
    for name, r in results.items():
        print(f"{name:<8} {r['synth_s']*1e3:>10.1f}ms "
              f"{r['h0_s']*1e6:>10.1f}us")
    if len(results) == 2:
        a, b = results["numpy"], results["numba"]
        dev = abs(a["checksum"] - b["checksum"]) / a["checksum"]
        print(f"\nspeedup (synthesis): {a['synth_s']/b['synth_s']:.1f}x; "
              f"cross-backend checksum deviation: {dev:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
