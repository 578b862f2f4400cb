"""Cylinder special functions J_n, Y_n, H_n^(1,2) of integer order.

Whole-sweep evaluation (all orders 0..order_max from one argument) is the
primitive here because every field synthesis consumes full order tables;
single-order lookups just index a sweep.

Conventions:

* J entries with magnitude below 1e-280 underflow to signed zero, never NaN.
* Y entries that overflow the double range are reported as -inf (growth for
  n >> x is monotone negative); callers treat such orders as unscattered.
* Negative orders are the caller's business via ``parity_sign``:
  J_{-n} = (-1)^n J_n and likewise for Y.
"""

import math

import numpy as np

from . import kernels


def bessel_j_sweep(order_max, x):
    """J_0(x)..J_{order_max}(x) by normalized downward recurrence.

    x = 0 returns [1, 0, 0, ...].  Raises ValueError for negative or
    non-finite x or negative order_max.
    """
    if order_max < 0:
        raise ValueError("order_max must be >= 0")
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"argument must be finite and >= 0, got {x}")
    return kernels.j_table(int(order_max), x)


def bessel_y_sweep(order_max, x):
    """Y_0(x)..Y_{order_max}(x); overflowed high orders are -inf markers."""
    if order_max < 0:
        raise ValueError("order_max must be >= 0")
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"argument must be finite and > 0, got {x}")
    return kernels.y_table(int(order_max), x)


def y_overflowed(values):
    """Boolean mask of overflow markers in a Y sweep."""
    return ~np.isfinite(values)


def parity_sign(n):
    """(-1)^n as an exact integer; the negative-order reflection factor."""
    return 1 if (int(n) % 2 == 0) else -1


def hankel(kind, n, x):
    """H_n^(1)(x) = J_n + iY_n (kind 1) or its conjugate (kind 2)."""
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    n = int(n)
    m = abs(n)
    j = bessel_j_sweep(m, x)[m]
    y = bessel_y_sweep(m, x)[m]
    if n < 0:
        s = parity_sign(m)
        j *= s
        y *= s
    return complex(j, y) if kind == 1 else complex(j, -y)


def hankel1_order0(x_values):
    """H_0^(1) on an array of arguments (assembly/field helper)."""
    j0, y0 = kernels.h0_many(np.asarray(x_values, dtype=float))
    return j0 + 1j * y0
