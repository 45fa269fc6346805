"""Evaluation kernel for q-Pochhammer symbols and basic hypergeometric series.

Conventions
-----------
* ``(a; b)_n`` is the product ``prod_{k=0}^{n-1} (1 - b^k a)``; ``n = inf``
  gives the convergent infinite product for ``0 < b < 1``.
* ``basic_hypergeometric`` follows the standard normalization: the n-th term
  carries ``[(-1)^n b^{n(n-1)/2}]^{1+s-r}`` on top of the Pochhammer quotient,
  where r and s count numerator and denominator parameters.
* ``psi`` is the entire two-parameter series
  ``sum_n (a;b)_n (c b^n;b)_inf / (b;b)_n * (-1)^n b^{n(n-1)/2} z^n``,
  which equals ``(c;b)_inf * 1phi1(a; c | b, z)`` away from the pole set
  ``c in b^{-N}``.

All series are accumulated with compensated (Neumaier) summation and stop
once three consecutive terms fall below ``eps_term`` relative to the running
sum; terminating series are cut at the caller-supplied index instead, since
floating-point detection of ``b^{-m}``-type numerators is unreliable.

Coefficient formulas elsewhere in the package have parameters that are signed
integer powers of q.  Those are evaluated through the "structured" layer in
this module (``QPow`` pairs), which keeps exponents in exact integer
arithmetic.  This makes structural zeros (a vanishing ``(q^0;q^2)``-type
factor) exact for every q, not just binary-representable ones, and splits
very large intermediate magnitudes into a bounded mantissa and an integer
q-exponent.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import InvalidBase, MaxTermsExceeded, NegativeRadicand, PoleHit

INF = math.inf

# A signed integer power of q: (sign, exponent) with sign in {-1, 0, +1};
# sign 0 encodes the value 0 regardless of exponent.
QPow = tuple[int, int]
QP_ZERO: QPow = (0, 0)

_TINY = 5e-324  # smallest subnormal; floor for relative-convergence tests


@dataclass(frozen=True)
class QContext:
    """Deformation parameter plus global series policy.

    Immutable; safe to share across threads and usable as a cache key.
    """

    q: float
    eps_term: float = 1e-16
    max_terms: int = 512

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise InvalidBase(f"q must lie in (0,1), got {self.q}")
        if not 0.0 < self.eps_term < 1e-6:
            raise ValueError(f"eps_term must lie in (0, 1e-6), got {self.eps_term}")
        if self.max_terms < 64:
            raise ValueError(f"max_terms must be >= 64, got {self.max_terms}")

    @property
    def q2(self) -> float:
        return self.q * self.q


@dataclass(frozen=True)
class HyperSeriesSpec:
    """Parameters of an r_phi_s evaluation.

    ``denominators`` excludes the implicit ``(base;base)_n`` factor.  When a
    numerator is a negative power of the base the series only makes sense as
    a terminating sum, and ``termination`` must be supplied by the caller.
    """

    numerators: tuple[complex, ...]
    denominators: tuple[complex, ...]
    base: float
    argument: complex
    termination: int | None = None


class _Accumulator:
    """Neumaier compensated accumulator for real or complex series."""

    __slots__ = ("sr", "cr", "si", "ci")

    def __init__(self):
        self.sr = 0.0
        self.cr = 0.0
        self.si = 0.0
        self.ci = 0.0

    def add(self, z) -> None:
        if isinstance(z, complex):
            x, y = z.real, z.imag
        else:
            x, y = z, 0.0
        t = self.sr + x
        if abs(self.sr) >= abs(x):
            self.cr += (self.sr - t) + x
        else:
            self.cr += (x - t) + self.sr
        self.sr = t
        if y != 0.0 or self.si != 0.0 or self.ci != 0.0:
            t = self.si + y
            if abs(self.si) >= abs(y):
                self.ci += (self.si - t) + y
            else:
                self.ci += (y - t) + self.si
            self.si = t

    def value(self):
        re = self.sr + self.cr
        im = self.si + self.ci
        if im == 0.0:
            return re
        return complex(re, im)


def _check_base(base: float) -> None:
    if not 0.0 < base < 1.0:
        raise InvalidBase(f"series base must lie in (0,1), got {base}")


def sqrt_checked(x: float) -> float:
    """Square root of a quantity that is non-negative on admissible inputs."""
    if x < 0.0:
        raise NegativeRadicand(f"negative radicand {x}; inadmissible index upstream")
    return math.sqrt(x)


# ---------------------------------------------------------------------------
# generic (complex-parameter) q-Pochhammer symbols
# ---------------------------------------------------------------------------

def qpochhammer(a, base: float, n, ctx: QContext):
    """``(a; base)_n`` for n a natural number or ``math.inf``.

    A factor that is exactly zero short-circuits to an exact 0.  The infinite
    product stops once ``|base^k a| < eps_term`` and folds the first-order
    tail correction into the result.
    """
    _check_base(base)
    if n is INF or n == INF:
        if isinstance(a, complex):
            return _qpoch_inf_cplx(a, base, ctx.eps_term)
        return _qpoch_inf_real(float(a), base, ctx.eps_term)
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a natural number or inf, got {n}")
    prod = 1.0
    ak = a
    for _ in range(int(n)):
        factor = 1.0 - ak
        if factor == 0:
            return 0.0
        prod = prod * factor
        ak = ak * base
    return prod


def qpochhammer_multi(values, base: float, n, ctx: QContext):
    """Product of ``qpochhammer`` over a list; an exact zero short-circuits."""
    prod = 1.0
    for a in values:
        f = qpochhammer(a, base, n, ctx)
        if f == 0:
            return 0.0
        prod = prod * f
    return prod


@lru_cache(maxsize=None)
def _qpoch_inf_real(a: float, base: float, eps: float) -> float:
    prod = 1.0
    ak = a
    while abs(ak) >= eps:
        factor = 1.0 - ak
        if factor == 0.0:
            return 0.0
        prod *= factor
        ak *= base
    # first-order tail of sum_{k>=K} log(1 - base^k a)
    return prod * math.exp(-ak / (1.0 - base))


@lru_cache(maxsize=None)
def _qpoch_inf_cplx(a: complex, base: float, eps: float) -> complex:
    prod = 1.0 + 0.0j
    ak = a
    while abs(ak) >= eps:
        factor = 1.0 - ak
        if factor == 0:
            return 0.0
        prod *= factor
        ak *= base
    return prod * cmath.exp(-ak / (1.0 - base))


# ---------------------------------------------------------------------------
# structured layer: signed integer powers of q
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _poch_fin(sign: int, e: int, step: int, n: int, q: float) -> float:
    """``prod_{k<n} (1 - sign*q^(e+k*step))`` with exact integer exponents.

    Intended for e >= 0 where all factors are bounded; use
    :func:`_poch_fin_scaled` when negative exponents can occur.
    """
    prod = 1.0
    for k in range(n):
        ek = e + k * step
        if sign > 0 and ek == 0:
            return 0.0
        prod *= 1.0 - sign * q**ek
    return prod


@lru_cache(maxsize=None)
def _poch_fin_scaled(sign: int, e: int, step: int, n: int, q: float) -> tuple[float, int]:
    """As ``_poch_fin`` but returned as ``(mantissa, qexp)`` with value
    ``mantissa * q**qexp``; factors with negative exponent are rescaled so
    the mantissa stays bounded."""
    mant = 1.0
    qexp = 0
    for k in range(n):
        ek = e + k * step
        if ek >= 0:
            if sign > 0 and ek == 0:
                return 0.0, 0
            mant *= 1.0 - sign * q**ek
        else:
            # (1 - s*q^ek) = -s * q^ek * (1 - s*q^(-ek))
            mant *= -sign * (1.0 - sign * q ** (-ek))
            qexp += ek
    return mant, qexp


@lru_cache(maxsize=None)
def _poch_inf_q(sign: int, e: int, step: int, q: float, eps: float) -> float:
    """``prod_{k>=0} (1 - sign*q^(e+k*step))`` for e >= 0 (bounded case)."""
    prod = 1.0
    ek = e
    qe = q**e
    qstep = q**step
    while qe >= eps:
        if sign > 0 and ek == 0:
            return 0.0
        prod *= 1.0 - sign * qe
        qe *= qstep
        ek += step
    return prod * math.exp(sign * qe / (1.0 - qstep))


@lru_cache(maxsize=None)
def _poch_inf_scaled(sign: int, e: int, step: int, q: float, eps: float) -> tuple[float, int]:
    """Infinite product as ``(mantissa, qexp)``, valid for any integer e."""
    if e >= 0:
        return _poch_inf_q(sign, e, step, q, eps), 0
    mant = 1.0
    qexp = 0
    ek = e
    while ek < 0:
        mant *= -sign * (1.0 - sign * q ** (-ek))
        qexp += ek
        ek += step
    tail = _poch_inf_q(sign, ek, step, q, eps)
    if tail == 0.0:
        return 0.0, 0
    return mant * tail, qexp


def poch_inf_qpow(p: QPow, step: int, q: float, eps: float) -> float:
    """Infinite Pochhammer of a signed q-power parameter, folded to a float."""
    sign, e = p
    if sign == 0:
        return 1.0
    mant, qexp = _poch_inf_scaled(sign, e, step, q, eps)
    if mant == 0.0:
        return 0.0
    return mant * q**qexp


def psi_qpow(a: QPow, b: QPow, z: QPow, step: int, q: float, ctx: QContext) -> float:
    """Structured ``psi`` whose three parameters are signed powers of q.

    ``step`` is the exponent of the series base (base = q**step).  Structural
    zeros of the ``(a;base)_n`` factor terminate the series exactly for every
    q.  For positive arguments with negative exponent (|z| > 1) the direct
    alternating series cancels catastrophically, so the evaluation switches
    to an exactly equivalent rearrangement whose terms are all small; see
    ``_psi_qpow_bigarg``.  Raises :class:`MaxTermsExceeded` on term-magnitude
    overflow, which on admissible inputs indicates an argument far outside
    the supported range.
    """
    return _psi_qpow_cached(a, b, z, step, q, ctx.eps_term, ctx.max_terms)


@lru_cache(maxsize=None)
def _psi_qpow_cached(a: QPow, b: QPow, z: QPow, step: int, q: float,
                     eps: float, max_terms: int) -> float:
    zs, ze = z
    if zs == 0:
        return poch_inf_qpow(b, step, q, eps)
    if zs > 0 and ze < 0:
        return _psi_qpow_bigarg(a, b, z, step, q, eps, max_terms)
    a_s, a_e = a
    b_s, b_e = b
    acc = _Accumulator()
    an = 1.0   # (a; base)_n
    cn = 1.0   # (base; base)_n
    n = 0
    streak = 0
    while True:
        if b_s == 0:
            pn = 1.0
        else:
            pn = poch_inf_qpow((b_s, b_e + n * step), step, q, eps)
        # (-1)^n z^n base^{n(n-1)/2} with z = zs * q^ze
        ee = step * (n * (n - 1) // 2) + n * ze
        tsign = -zs if n % 2 else 1
        term = tsign * an * pn / cn * q**ee
        if not math.isfinite(term):
            raise MaxTermsExceeded("psi series overflowed double precision")
        acc.add(term)
        if n > 0 and abs(term) < eps * max(abs(acc.value()), _TINY):
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
        n += 1
        if n > max_terms:
            raise MaxTermsExceeded(f"psi series did not converge in {max_terms} terms")
        if a_s != 0:
            ek = a_e + (n - 1) * step
            if a_s > 0 and ek == 0:
                break  # (a;base)_n is exactly zero from here on
            an *= 1.0 - a_s * q**ek
        cn *= 1.0 - q ** (n * step)
    return acc.value()


def _psi_qpow_bigarg(a: QPow, b: QPow, z: QPow, step: int, q: float,
                     eps: float, max_terms: int) -> float:
    """``psi`` for z a positive q-power with negative exponent.

    Splits off the ``(a;base)_n`` factor with the q-binomial theorem,
    ``psi(a;b|base,z) = sum_j a^j base^{j(j-1)} z^j / (base;base)_j *
    psi(0; b base^j | base, z base^j)``, and evaluates each a=0 factor by the
    all-small-terms representation
    ``psi(0; base*y | base, base*x) = sum_k (-1)^k base^{k(3k+1)/2} (x y)^k
    (base^{k+1} x; base)_inf (base^{k+1} y; base)_inf / (base;base)_k``,
    in which the otherwise cancelling large terms are structural zeros.
    """
    a_s, a_e = a
    if a_s == 0:
        return _psi0_bigarg(b, z, step, q, eps, max_terms)
    zs, ze = z
    b_s, b_e = b
    acc = _Accumulator()
    cj = 1.0  # (base;base)_j
    streak = 0
    for j in range(max_terms + 1):
        inner = _psi_qpow_cached(
            QP_ZERO, (b_s, b_e + j * step) if b_s else QP_ZERO,
            (zs, ze + j * step), step, q, eps, max_terms)
        ee = j * a_e + step * j * (j - 1) + j * ze
        sgn = _parity_int(a_s, j) * _parity_int(zs, j)
        term = sgn * q**ee / cj * inner
        if not math.isfinite(term):
            raise MaxTermsExceeded("psi rearrangement overflowed double precision")
        acc.add(term)
        if j > 0 and abs(term) < eps * max(abs(acc.value()), _TINY):
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
        cj *= 1.0 - q ** ((j + 1) * step)
    else:
        raise MaxTermsExceeded("psi rearrangement did not converge")
    return acc.value()


def _psi0_bigarg(b: QPow, z: QPow, step: int, q: float, eps: float,
                 max_terms: int) -> float:
    b_s, b_e = b
    zs, ze = z
    ex = ze - step            # x = z / base
    ey = b_e - step           # y = b / base (exponent part)
    acc = _Accumulator()
    ck = 1.0  # (base;base)_k
    streak = 0
    seen = False
    for k in range(max_terms + 1):
        px_m, px_e = _poch_inf_scaled(zs, ze + k * step, step, q, eps)
        if px_m != 0.0:
            if b_s == 0:
                py_m, py_e = (1.0, 0) if k == 0 else (0.0, 0)
            else:
                py_m, py_e = _poch_inf_scaled(b_s, b_e + k * step, step, q, eps)
            if py_m != 0.0:
                ee = step * (k * (3 * k + 1) // 2) + k * (ex + ey) + px_e + py_e
                sgn = _parity_int(-1, k) * _parity_int(zs, k) * _parity_int(
                    b_s if b_s else 1, k)
                term = sgn * q**ee * px_m * py_m / ck
                if not math.isfinite(term):
                    raise MaxTermsExceeded("psi rearrangement overflowed")
                acc.add(term)
                seen = True
                if abs(term) < eps * max(abs(acc.value()), _TINY):
                    streak += 1
                    if streak >= 3:
                        break
                else:
                    streak = 0
        elif seen:
            streak += 1
            if streak >= 3:
                break
        ck *= 1.0 - q ** ((k + 1) * step)
    else:
        raise MaxTermsExceeded("psi rearrangement did not converge")
    return acc.value()


def _parity_int(sign: int, k: int) -> int:
    return 1 if k % 2 == 0 else sign


def phi_qpow(numerators: tuple[QPow, ...], denominators: tuple[QPow, ...],
             step: int, z: QPow, termination: int, q: float,
             guard: float = 1e290) -> float:
    """Terminating r_phi_s with signed-q-power parameters and exact exponents.

    Term magnitudes beyond ``guard`` raise :class:`MaxTermsExceeded` instead
    of silently overflowing; numerator/denominator factors of comparable
    magnitude are divided per step so balanced quotients stay bounded.
    """
    extra = 1 + len(denominators) - len(numerators)
    zs, ze = z
    zval = zs * q**ze
    term = 1.0
    acc = _Accumulator()
    acc.add(term)
    for n in range(termination):
        num = 1.0
        for (s, e) in numerators:
            if s == 0:
                num = 0.0
                break
            ek = e + n * step
            if s > 0 and ek == 0:
                num = 0.0
                break
            num *= 1.0 - s * q**ek
        if num == 0.0:
            break
        den = 1.0 - q ** ((n + 1) * step)
        for (s, e) in denominators:
            if s == 0:
                continue
            ek = e + n * step
            f = 1.0 - s * q**ek
            if f == 0.0:
                raise PoleHit(f"denominator Pochhammer vanished at index {n + 1}")
            den *= f
        ratio = num / den * zval
        if extra:
            ratio *= (-(q ** (n * step))) ** extra
        term *= ratio
        if term == 0.0:
            break
        if abs(term) > guard:
            raise MaxTermsExceeded("hypergeometric term magnitude overflow")
        acc.add(term)
    return acc.value()


# ---------------------------------------------------------------------------
# basic hypergeometric series (generic parameters)
# ---------------------------------------------------------------------------

def basic_hypergeometric(spec: HyperSeriesSpec, ctx: QContext):
    """Evaluate an r_phi_s series per its :class:`HyperSeriesSpec`.

    Terminating series (``spec.termination = m``) are summed exactly over
    ``n = 0..m``; otherwise the sum stops after three consecutive terms fall
    below ``eps_term`` relative to the partial sum, or raises
    :class:`MaxTermsExceeded`.
    """
    _check_base(spec.base)
    extra = 1 + len(spec.denominators) - len(spec.numerators)
    base = spec.base
    z = spec.argument
    acc = _Accumulator()
    term = 1.0 + 0.0j if _any_complex(spec) else 1.0
    acc.add(term)
    bn = 1.0  # base**n
    n = 0
    streak = 0
    while True:
        if spec.termination is not None and n >= spec.termination:
            break
        num = 1.0
        for a in spec.numerators:
            num = num * (1.0 - bn * a)
        den = 1.0 - bn * base
        for b in spec.denominators:
            f = 1.0 - bn * b
            if f == 0:
                raise PoleHit(f"denominator Pochhammer vanished at index {n + 1}")
            den = den * f
        ratio = num / den * z
        if extra:
            ratio = ratio * (-bn) ** extra
        term = term * ratio
        n += 1
        bn *= base
        if term == 0:
            break  # a numerator factor vanished; the series has terminated
        acc.add(term)
        if spec.termination is None:
            if abs(term) < ctx.eps_term * max(abs(acc.value()), _TINY):
                streak += 1
                if streak >= 3:
                    break
            else:
                streak = 0
            if n >= ctx.max_terms:
                raise MaxTermsExceeded(
                    f"no convergence signal within {ctx.max_terms} terms")
    return acc.value()


def _any_complex(spec: HyperSeriesSpec) -> bool:
    if isinstance(spec.argument, complex):
        return True
    return any(isinstance(v, complex) for v in spec.numerators) or any(
        isinstance(v, complex) for v in spec.denominators)


# ---------------------------------------------------------------------------
# the entire Psi series and the named polynomial families
# ---------------------------------------------------------------------------

def psi(a, b, base: float, z, ctx: QContext):
    """The entire series ``sum_n (a;base)_n (b base^n;base)_inf / (base;base)_n
    (-1)^n base^{n(n-1)/2} z^n`` for generic complex parameters."""
    _check_base(base)
    if z == 0:
        return qpochhammer(b, base, INF, ctx)
    acc = _Accumulator()
    an = 1.0
    cn = 1.0
    pw = 1.0  # base^{n(n-1)/2}
    zn = 1.0
    sign = 1.0
    n = 0
    streak = 0
    while True:
        if an == 0:
            break  # (a;base)_n vanished: all further terms are exactly zero
        pn = qpochhammer(b * base**n, base, INF, ctx)
        term = an * pn / cn * sign * pw * zn
        acc.add(term)
        if n > 0 and abs(term) < ctx.eps_term * max(abs(acc.value()), _TINY):
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
        n += 1
        if n > ctx.max_terms:
            raise MaxTermsExceeded(f"psi did not converge in {ctx.max_terms} terms")
        an = an * (1.0 - a * base ** (n - 1))
        cn = cn * (1.0 - base**n)
        pw = pw * base ** (n - 1)
        zn = zn * z
        sign = -sign
    return acc.value()


def wall_polynomial(w: int, p: int, t: int, ctx: QContext) -> float:
    """Normalized Wall polynomial value at ``(q^{2p}; q^{2t} | q^2)``.

    Structurally zero for t < 0 (a vanishing infinite product); the ordinary
    Wall factor is a 2phi1 terminating at index w.
    """
    if w < 0 or p < 0:
        raise ValueError("w and p must be natural numbers")
    if t < 0:
        return 0.0
    q = ctx.q
    eps = ctx.eps_term
    phi = phi_qpow(((1, -2 * w), QP_ZERO), ((1, 2 * t + 2),), 2, (1, 2 * p + 2),
                   termination=w, q=q)
    num_inf = _poch_inf_q(1, 2 * t + 2, 2, q, eps) * _poch_inf_q(1, 2 * p + 2, 2, q, eps)
    num_fin = _poch_fin(1, 2 * t + 2, 2, w, q)
    den_inf = _poch_inf_q(1, 2, 2, q, eps)
    den_fin = _poch_fin(1, 2, 2, w, q)
    sign = -1.0 if w % 2 else 1.0
    return (sign * q ** ((p - w) * (t + 1)) * sqrt_checked(num_inf) * num_fin
            / (sqrt_checked(den_inf) * sqrt_checked(den_fin)) * phi)


def big_q_laguerre(n: int, x, a: float, b: float, base: float, ctx: QContext):
    """Big q-Laguerre polynomial: 3phi2(base^-n, 0, x; a*base, b*base | base, base),
    terminating at n."""
    if n < 0:
        raise ValueError("degree must be a natural number")
    spec = HyperSeriesSpec(
        numerators=(base ** (-n), 0.0, x),
        denominators=(a * base, b * base),
        base=base,
        argument=base,
        termination=n,
    )
    return basic_hypergeometric(spec, ctx)


def q_bessel(alpha: int, zv: float, base: float, ctx: QContext) -> float:
    """The 1phi1-type q-Bessel function
    ``J_alpha(zv; base) = zv^alpha (base;base)_inf^{-1} psi(0; base^{alpha+1} | base, base*zv^2)``."""
    _check_base(base)
    if zv == 0.0:
        if alpha == 0:
            return 1.0
        if alpha > 0:
            return 0.0
        raise ValueError("q_bessel at z=0 requires alpha >= 0")
    val = psi(0.0, base ** (alpha + 1), base, base * zv * zv, ctx)
    return zv**alpha / _qpoch_inf_real(base, base, ctx.eps_term) * val
