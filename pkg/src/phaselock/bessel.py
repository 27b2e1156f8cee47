"""Bessel functions of the first kind and integer order.

Three regimes: the power series for small arguments, Miller's downward
recurrence normalized by ``J_0 + 2 sum J_2k = 1`` in the middle, and the
Hankel asymptotic expansion (optimally truncated) for large arguments.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_MAX = 8.0
HANKEL_MIN = 25.0


def _series(n: int, x: float) -> float:
    h = 0.5 * x
    term = h ** n / math.factorial(n)
    total = term
    q = -h * h
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if abs(term) < 1e-17 * abs(total) and k > 2:
            return total
        if k > 200:
            return total


def _miller(n: int, x: float) -> float:
    # start well above both n and x; the minimal solution dominates downward
    m = 2 * ((max(n, int(x)) + 20 + int(math.sqrt(40 * max(n, x)))) // 2)
    j_next = 0.0
    j = 1e-300
    norm = 0.0
    result = 0.0
    for k in range(m, 0, -1):
        j_prev = 2 * k / x * j - j_next
        j_next, j = j, j_prev
        if abs(j) > 1e250:
            j *= 1e-250
            j_next *= 1e-250
            result *= 1e-250
            norm *= 1e-250
        if k - 1 == n:
            result = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j
    norm += j  # k - 1 == 0 term
    return result / norm


def _hankel(n: int, x: float) -> float:
    mu4 = 4.0 * n * n
    p = 0.0
    q = 0.0
    term = 1.0
    k = 0
    last = math.inf
    # a_k(n) / x^k with a_k = prod_{j=1..k} (4n^2 - (2j-1)^2) / (k! 8^k)
    while True:
        if abs(term) > last:
            break
        if k % 2 == 0:
            p += term if (k // 2) % 2 == 0 else -term
        else:
            q += term if (k // 2) % 2 == 0 else -term
        last = abs(term)
        if last < 1e-18:
            break
        k += 1
        term *= (mu4 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if k > 200:
            break
    chi = x - (0.5 * n + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def besselj(n: int, x: float) -> float:
    """``J_n(x)`` for integer ``n`` and real ``x``."""
    n = int(n)
    sign = 1.0
    if n < 0:
        n = -n
        sign = -1.0 if n % 2 else 1.0
    if x < 0:
        x = -x
        if n % 2:
            sign = -sign
    if x == 0.0:
        return sign * (1.0 if n == 0 else 0.0)
    if x <= SERIES_MAX:
        v = _series(n, x)
    elif x >= HANKEL_MIN + 0.5 * n * n:
        v = _hankel(n, x)
    else:
        v = _miller(n, x)
    return sign * v


def besselj_array(n: int, xs) -> np.ndarray:
    return np.array([besselj(n, float(x)) for x in np.ravel(xs)]).reshape(np.shape(xs))
