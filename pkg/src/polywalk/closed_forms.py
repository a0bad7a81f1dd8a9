"""Exact and semi-exact reference formulas: hypercube slice volumes, end-to-end
and failure-to-close densities, expected total curvature, polygon-space and
half-space volumes, and chord-moment identities.

The alternating sums below suffer massive cancellation in floating point once
n grows (dozens of near-equal terms of size ~n^n), so every sum is evaluated
in exact rational arithmetic and converted to a float exactly once at the end.
Each entry point takes ``exact=False`` to expose the naive double-precision
path; the test suite documents where that path degrades.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, pi, sqrt

import numpy as np


def _pos_pow(base, k: int):
    """(x)_+^k with the 0^0 = 0 convention: 0 unless x > 0; x^0 = 1 for x > 0."""
    if base <= 0:
        return base * 0
    if k == 0:
        return base / base
    return base ** k


def _sa_unit_raw(x, m: int, exact: bool):
    """sum_k (-1)^k C(m,k) (x + m - 2k)_+^(m-1); SA(x, [-1,1]^m) times (m-1)!/sqrt(m)."""
    xq = Fraction(x) if exact else float(x)
    total = Fraction(0) if exact else 0.0
    for k in range(m + 1):
        term = comb(m, k) * _pos_pow(xq + m - 2 * k, m - 1)
        total += term if k % 2 == 0 else -term
    return total


def sa_unit_cube(x: float, m: int, exact: bool = True) -> float:
    """(m-1)-volume of the slice of [-1,1]^m by the plane sum(x_i) = x."""
    if m < 1:
        raise ValueError("cube dimension must be >= 1")
    if abs(x) >= m:
        return 0.0
    raw = _sa_unit_raw(x, m, exact)
    return float(Fraction(raw) / factorial(m - 1)) * sqrt(m)


def _sa_box_raw(x, r, exact: bool):
    """sum over subsets A of (-1)^|A| (x + sum_{i not in A} r_i - sum_{i in A} r_i)_+^(m-1)."""
    m = len(r)
    if m > 25:
        raise ValueError(
            f"subset enumeration over 2^{m} terms is impractical; use a Monte Carlo slab estimate"
        )
    if exact:
        rq = [Fraction(float(ri)) for ri in r]
        xq = Fraction(x)
    else:
        rq = [float(ri) for ri in r]
        xq = float(x)
    total_r = sum(rq)
    total = Fraction(0) if exact else 0.0
    # Iterate subsets by their sums, tracking parity.
    sums = [(xq + total_r, 1)]
    for ri in rq:
        sums = [(s - off * ri, sign * (1 if off == 0 else -1))
                for s, sign in sums for off in (0, 2)]
    for s, sign in sums:
        total += sign * _pos_pow(s, m - 1)
    return total


def sa_box(x: float, r, exact: bool = True) -> float:
    """(m-1)-volume of the slice of the box prod_i [-r_i, r_i] by sum(x_i) = x.

    Computed from the hypercube slice formula under the diagonal change of
    variables u_i = x_i / r_i, whose slice-volume factor is prod(r_i) sqrt(m)
    divided by the L2 norm of r.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    m = r.size
    if np.any(r <= 0):
        raise ValueError("box half-widths must be positive")
    if abs(x) >= float(r.sum()):
        return 0.0
    raw = _sa_box_raw(x, list(r), exact)
    return float(Fraction(raw) / factorial(m - 1)) * sqrt(m)


def sum_pdf(x: float, r, exact: bool = True) -> float:
    """pdf at x of a sum of independent uniforms on [-r_1, r_1], ..., [-r_n, r_n]."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    n = r.size
    if abs(x) >= float(r.sum()):
        return 0.0
    raw = _sa_box_raw(x, list(r), exact)
    denom = Fraction(factorial(n - 1)) * Fraction(2) ** n
    for ri in r:
        denom *= Fraction(float(ri))
    return float(Fraction(raw) / denom)


def end_to_end_pdf(l: float, n: int, exact: bool = True) -> float:
    """pdf of the end-to-end distance of an n-step unit-edge open walk in 3-space.

    The sqrt(n-1) factors of the two slice volumes cancel the prefactor, so the
    result is a single exact rational times l / 2^(n-1).
    """
    if n < 2:
        raise ValueError("need n >= 2 edges")
    if l <= 0 or l >= n:
        return 0.0
    m = n - 1
    raw = _sa_unit_raw(l - 1, m, exact) - _sa_unit_raw(l + 1, m, exact)
    return l * float(Fraction(raw) / (factorial(m - 1) * 2 ** (n - 1)))


def end_to_end_pdf_general(l: float, r, exact: bool = True) -> float:
    """pdf of the end-to-end distance of an open walk with fixed edge lengths r."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    n = r.size
    if n < 2:
        raise ValueError("need n >= 2 edges")
    if np.any(r <= 0):
        raise ValueError("edge lengths must be positive")
    if l <= 0 or l >= float(r.sum()):
        return 0.0
    head = list(r[:-1])
    rn = float(r[-1])
    raw = _sa_box_raw(l - rn, head, exact) - _sa_box_raw(l + rn, head, exact)
    # The sqrt(n-1) of the slice volumes cancels the prefactor; the edge-length
    # product over all n edges stays in the denominator.
    denom = Fraction(factorial(n - 2)) * Fraction(2) ** (n - 1)
    for ri in r:
        denom *= Fraction(float(ri))
    return l * float(Fraction(raw) / denom)


def ftc_pdf(l: float, n: int, exact: bool = True) -> float:
    """Density on 3-space of the failure-to-close vector of an n-step unit walk, at radius l > 0."""
    if n == 1:
        raise ValueError("the one-step density is a delta distribution, not a function")
    if n < 1:
        raise ValueError("need n >= 1")
    if l <= 0:
        raise ValueError("ftc_pdf needs l > 0; the l -> 0 limit is c_n(n)")
    if l >= n:
        return 0.0
    lq = Fraction(l) if exact else float(l)
    total = Fraction(0) if exact else 0.0
    for k in range(n):
        piece = _pos_pow(n + lq - 2 * k - 2, n - 2) - _pos_pow(n + lq - 2 * k, n - 2)
        term = Fraction(comb(n - 1, k)) * piece if exact else comb(n - 1, k) * piece
        total += term if k % 2 == 0 else -term
    scale = Fraction(n - 1, 2 ** (n + 1)) / factorial(n - 1)
    return float(Fraction(total) * scale / Fraction(l)) / pi


def c_n_rational(n: int) -> Fraction:
    """Exact rational part of c_n: the density of closed n-gons equals this over pi."""
    if n < 4:
        raise ValueError("need n >= 4")
    total = Fraction(0)
    for k in range(n // 2 + 1):
        term = Fraction(comb(n, k)) * (n - 2 * k) ** (n - 3)
        total += -term if k % 2 == 0 else term
    return total / (Fraction(2) ** (n + 1) * factorial(n - 3))


def c_n(n: int, exact: bool = True) -> float:
    """Value at the origin of the n-step failure-to-close density: normalizes closed-polygon statistics."""
    if exact:
        return float(c_n_rational(n)) / pi
    total = 0.0
    for k in range(n // 2 + 1):
        term = comb(n, k) * float(n - 2 * k) ** (n - 3)
        total += -term if k % 2 == 0 else term
    return total / (2.0 ** (n + 1) * factorial(n - 3)) / pi


def _ftc_rational_over_pi(l: float, n: int) -> Fraction:
    """ftc_pdf(l, n) * pi as an exact rational (l taken exactly as a binary float)."""
    if l >= n:
        return Fraction(0)
    lq = Fraction(l)
    total = Fraction(0)
    for k in range(n):
        piece = _pos_pow(n + lq - 2 * k - 2, n - 2) - _pos_pow(n + lq - 2 * k, n - 2)
        term = Fraction(comb(n - 1, k)) * piece
        total += term if k % 2 == 0 else -term
    return total * Fraction(n - 1, 2 ** (n + 1)) / factorial(n - 1) / lq


@lru_cache(maxsize=None)
def _leggauss(k: int):
    return np.polynomial.legendre.leggauss(k)


def expected_total_curvature(n: int, points: int = 64) -> float:
    """Exact expected total curvature of a closed equilateral n-gon, by quadrature.

    With the substitution l = 2 cos(u/2) the arccos factor becomes u and the
    endpoint square-root singularity at l = 2 disappears; the remaining
    integrand is piecewise smooth with a single interior breakpoint (at l = 1)
    when n is odd.  Gauss-Legendre on each piece then converges fast.  The
    failure-to-close factor is evaluated in exact rational arithmetic because
    its alternating sum cancels catastrophically in doubles for large n.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if n == 3:
        return 2 * pi
    m = n - 2
    breaks_u = [0.0, pi] if m % 2 == 0 else [0.0, 2 * pi / 3, pi]
    nodes, weights = _leggauss(points)
    total = 0.0
    for a, b in zip(breaks_u[:-1], breaks_u[1:]):
        u = 0.5 * (b - a) * nodes + 0.5 * (b + a)
        scale = 0.5 * (b - a)
        for ui, wi in zip(u, weights):
            ell = 2.0 * np.cos(ui / 2.0)
            phi_over_pi = float(_ftc_rational_over_pi(ell, m))
            total += wi * scale * ui * phi_over_pi * ell * np.sin(ui / 2.0)
    return n / (2.0 * float(c_n_rational(n))) * total


def grosberg_asymptotic(n: int) -> float:
    """Large-n asymptote of the expected total curvature: n*pi/2 + 3*pi/8."""
    if n < 3:
        raise ValueError("need n >= 3")
    return n * pi / 2 + 3 * pi / 8


def polygon_space_volume(r, exact: bool = True, allow_singular: bool = False) -> float:
    """Volume of the moduli space of closed polygons with edge lengths r (n between 4 and 25).

    Zero values of the subset imbalance sum(r_I) - sum(r_not_I) mean the space
    is singular; they are reported as errors unless ``allow_singular`` is set,
    in which case those subsets contribute nothing (their power vanishes).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    n = r.size
    if not 4 <= n <= 25:
        raise ValueError("supported range is 4 <= n <= 25 (the sum has 2^n terms)")
    if np.any(r <= 0):
        raise ValueError("edge lengths must be positive")
    rq = [Fraction(float(ri)) for ri in r] if exact else [float(ri) for ri in r]
    total_r = sum(rq)
    acc = Fraction(0) if exact else 0.0
    for sum_i, size, mask in _iter_subsets(rq):
        eps = 2 * sum_i - total_r
        if eps == 0:
            if not allow_singular:
                members = [i + 1 for i in range(n) if mask >> i & 1]
                raise ValueError(f"singular edge lengths: subset {members} balances the rest")
            continue
        if eps > 0:
            acc += eps ** (n - 3) if (n - size) % 2 == 0 else -(eps ** (n - 3))
    coeff = -float(Fraction(acc) / (2 * factorial(n - 3))) if exact else -acc / (2 * factorial(n - 3))
    return coeff * (2 * pi) ** (n - 3)


def _iter_subsets(rq):
    n = len(rq)
    zero = rq[0] * 0
    sums = [zero]
    sizes = [0]
    masks = [0]
    for i, ri in enumerate(rq):
        sums += [s + ri for s in sums]
        sizes += [s + 1 for s in sizes]
        masks += [m | (1 << i) for m in masks]
    return zip(sums, sizes, masks)


def equilateral_volume(n: int, exact: bool = True) -> float:
    """Volume of the moduli space of closed equilateral n-gons (binomial form of the subset sum)."""
    if n < 4:
        raise ValueError("need n >= 4")
    if exact:
        acc = Fraction(0)
        for k in range(n // 2 + 1):
            term = Fraction(comb(n, k)) * (n - 2 * k) ** (n - 3)
            acc += term if k % 2 == 0 else -term
        coeff = -float(acc / (2 * factorial(n - 3)))
    else:
        acc = 0.0
        for k in range(n // 2 + 1):
            term = comb(n, k) * float(n - 2 * k) ** (n - 3)
            acc += term if k % 2 == 0 else -term
        coeff = -acc / (2 * factorial(n - 3))
    return coeff * (2 * pi) ** (n - 3)


def half_space_volume(n: int) -> Fraction:
    """Exact volume of the half-space arm polytope: C(2n, n) / 2^n."""
    if n < 1:
        raise ValueError("need n >= 1")
    vol = Fraction(comb(2 * n, n), 2 ** n)
    # Double-factorial identity sanity check: (2n-1)!! / n!
    dfact = 1
    for k in range(1, 2 * n, 2):
        dfact *= k
    assert vol == Fraction(dfact, factorial(n))
    return vol


def expected_squared_chord(k: int, n: int) -> Fraction:
    """Second moment of the chord skipping k edges in a closed equilateral n-gon: k(n-k)/(n-1)."""
    if not 2 <= k <= n - 2:
        raise ValueError(f"k must be in [2, {n - 2}]")
    return Fraction(k * (n - k), n - 1)


def rayleigh_sinc_oracle(l: float, n: int, tail_tol: float = 1e-9) -> float:
    """End-to-end pdf via the oscillatory sinc-integral form; independent of the slice-volume path.

    Integrates (2 l / pi) * y sin(l y) sinc(y)^n on [0, Y] by Gauss-Legendre over
    half-period panels; Y is chosen so the analytic tail bound
    (2 l / pi) Y^(2-n) / (n-2) falls below ``tail_tol``.
    """
    if n < 4:
        raise ValueError("need n >= 4 (the integrand decays too slowly below that)")
    if not 0 < l < n:
        raise ValueError("need 0 < l < n")
    Y = (2.0 * l / (pi * (n - 2) * tail_tol)) ** (1.0 / (n - 2))
    if Y > 5e6:
        achieved = 2.0 * l / pi * (5e6) ** (2 - n) / (n - 2)
        raise ValueError(f"tail tolerance unattainable; best bound {achieved:g} at Y=5e6")
    panel = pi / (n + l)
    n_panels = int(np.ceil(Y / panel))
    nodes, weights = _leggauss(12)
    starts = panel * np.arange(n_panels)
    # All quadrature nodes in one array: shape (n_panels, 12).
    y = starts[:, None] + 0.5 * panel * (nodes[None, :] + 1.0)
    vals = y * np.sin(l * y) * np.sinc(y / pi) ** n
    integral = float(0.5 * panel * np.sum(vals @ weights))
    return 2.0 * l / pi * integral
