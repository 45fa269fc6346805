"""Coefficient functions of the three deformed-group bases and their
assembly into sparse basis vectors.

Index-set conventions
---------------------
Three kinds of basis legs occur:

* ``"N"``  - naturals 0, 1, 2, ...
* ``"Z"``  - all integers
* ``"S"``  - the split set Z |_| {negatives}: pairs ``SignedIndex(sign, value)``
  where sign ``+`` admits every integer and sign ``-`` only negative values.

Eigenvalue labels additionally use the companion split set Z |_| N (sign
``-`` restricted to non-negative values); both restrictions are checked by
:func:`in_split_lower` / :func:`in_split_upper`.

Out-of-set basis indices are interpreted as zero vectors, so coefficient
functions return an exact 0.0 for them (never a float-cancellation
near-zero): all structural zeros are decided in integer arithmetic.
All sign prefactors are computed in exact integer arithmetic; the final
1/sqrt(2) of the split-basis coefficients is applied as a single last
multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import WindowTooSmall
from .qseries import (
    QP_ZERO,
    QContext,
    QPow,
    HyperSeriesSpec,
    _poch_fin,
    _poch_fin_scaled,
    _poch_inf_q,
    _poch_inf_scaled,
    basic_hypergeometric,
    phi_qpow,
    psi_qpow,
    sqrt_checked,
)

LEG_N = "N"
LEG_Z = "Z"
LEG_S = "S"

SIG_PLUS = (LEG_N, LEG_Z)    # first Hilbert space: l2(N) x l2(Z)
SIG_ZERO = (LEG_Z, LEG_Z)    # second: l2(Z) x l2(Z)
SIG_MINUS = (LEG_S, LEG_Z)   # third: l2(split set) x l2(Z)

FAMILY_SIGS = {"+": SIG_PLUS, "0": SIG_ZERO, "-": SIG_MINUS}

_REL_CUT = 1e-18   # profile truncation threshold relative to the peak
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, order=True)
class SignedIndex:
    """An element of a split index set: an integer with a sign label."""

    sign: int
    value: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    def __repr__(self):
        return f"{self.value}{'+' if self.sign > 0 else '-'}"


def splus(value: int) -> SignedIndex:
    return SignedIndex(1, value)


def sminus(value: int) -> SignedIndex:
    return SignedIndex(-1, value)


def in_split_lower(idx: SignedIndex) -> bool:
    """Membership in the operator-leg split set (sign - means value < 0)."""
    return idx.sign > 0 or idx.value < 0


def in_split_upper(idx: SignedIndex) -> bool:
    """Membership in the eigenvalue-label split set (sign - means value >= 0)."""
    return idx.sign > 0 or idx.value >= 0


def leg_in_window(kind: str, leg, n_cut: int, z_lo: int, z_hi: int) -> bool:
    if kind == LEG_N:
        return 0 <= leg <= n_cut
    if kind == LEG_Z:
        return z_lo <= leg <= z_hi
    if kind == LEG_S:
        return z_lo <= leg.value <= z_hi
    raise ValueError(f"unknown leg kind {kind}")


def validate_basis_index(sig: tuple[str, ...], tup: tuple) -> None:
    """Reject components outside their declared index set."""
    if len(sig) != len(tup):
        raise ValueError(f"index {tup} has wrong arity for signature {sig}")
    for kind, leg in zip(sig, tup):
        if kind == LEG_N:
            if not (isinstance(leg, int) and leg >= 0):
                raise ValueError(f"leg {leg} not a natural number")
        elif kind == LEG_Z:
            if not isinstance(leg, int):
                raise ValueError(f"leg {leg} not an integer")
        elif kind == LEG_S:
            if not (isinstance(leg, SignedIndex) and in_split_lower(leg)):
                raise ValueError(f"leg {leg} not in the split index set")
        else:
            raise ValueError(f"unknown leg kind {kind}")


def _parity(sign: int, k: int) -> int:
    """sign**k for sign in {-1, +1}, exact."""
    return 1 if k % 2 == 0 else sign


@dataclass
class SparseVector:
    """Finitely supported coefficient map over a product basis.

    ``tail_bound`` is a certified upper bound on the l2 mass outside the
    stored support.  Treated as immutable once assembled.
    """

    entries: dict = field(default_factory=dict)
    tail_bound: float = 0.0

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(v) ** 2 for v in self.entries.values()))

    def dot(self, other: "SparseVector"):
        """Inner product, conjugate-linear in ``self``."""
        a, b = self.entries, other.entries
        total = 0.0
        if len(a) <= len(b):
            for k, v in a.items():
                w = b.get(k)
                if w is not None:
                    total += (v.conjugate() if isinstance(v, complex) else v) * w
        else:
            for k, w in b.items():
                v = a.get(k)
                if v is not None:
                    total += (v.conjugate() if isinstance(v, complex) else v) * w
        return total

    def sorted_items(self):
        return sorted(self.entries.items())


# ---------------------------------------------------------------------------
# coefficient functions
# ---------------------------------------------------------------------------

def p_plus(p: int, v: int, w: int, ctx: QContext) -> float:
    """First-family coefficient in its entire-series form."""
    return _p_plus(p, v, w, ctx)


@lru_cache(maxsize=None)
def _p_plus(p: int, v: int, w: int, ctx: QContext) -> float:
    if p < 0 or v < 0 or w < 0:
        return 0.0
    q, eps = ctx.q, ctx.eps_term
    m = p - w
    t = v - w
    num = _poch_inf_q(1, 2 * w + 2, 2, q, eps)
    den = _poch_inf_q(1, 2, 2, q, eps)
    den2 = _poch_inf_q(1, 2 * p + 2, 2, q, eps) * _poch_inf_q(1, 2 * v + 2, 2, q, eps)
    val = psi_qpow((1, 2 * v + 2), (1, 2 * t + 2), (1, 2 * m + 2), 2, q, ctx)
    sign = _parity(-1, m)
    return sign * q ** (m + m * t) * sqrt_checked(num) / (den * sqrt_checked(den2)) * val


def p_plus_alt(p: int, v: int, w: int, ctx: QContext) -> float:
    """First-family coefficient in its terminating 3phi2 form;
    must agree with :func:`p_plus`."""
    return _p_plus_alt(p, v, w, ctx)


@lru_cache(maxsize=None)
def _p_plus_alt(p: int, v: int, w: int, ctx: QContext) -> float:
    if p < 0 or v < 0 or w < 0:
        return 0.0
    q, eps = ctx.q, ctx.eps_term
    phi = phi_qpow(((1, -2 * w), (1, -2 * v), (1, -2 * p)), (QP_ZERO, QP_ZERO),
                   2, (1, 2), termination=min(p, v, w), q=q)
    num = _poch_inf_q(1, 2 * v + 2, 2, q, eps) * _poch_inf_q(1, 2 * p + 2, 2, q, eps)
    den = _poch_inf_q(1, 2, 2, q, eps) * _poch_fin(1, 2, 2, w, q)
    sign = _parity(-1, p)
    return sign * q ** (v * w + p * (v + w + 1)) * sqrt_checked(num) / sqrt_checked(den) * phi


def p_zero(p: int, v: int, w: int, ctx: QContext) -> float:
    """Second-family coefficient; depends only on the differences p-w, v-w."""
    return _p_zero_line(p - w, v - w, ctx)


@lru_cache(maxsize=None)
def _p_zero_line(m: int, t: int, ctx: QContext) -> float:
    q, eps = ctx.q, ctx.eps_term
    val = psi_qpow(QP_ZERO, (1, 2 * t + 2), (1, 2 * m + 2), 2, q, ctx)
    return _parity(-1, m) * q ** (m * (1 + t)) / _poch_inf_q(1, 2, 2, q, eps) * val


def p_minus(pi: SignedIndex, vi: SignedIndex, wi: SignedIndex, ctx: QContext) -> float:
    """Split-family coefficient.  Exactly 0.0 on out-of-set indices."""
    return _p_minus(pi.sign, pi.value, vi.sign, vi.value, wi.sign, wi.value, ctx)


@lru_cache(maxsize=None)
def _p_minus(rho: int, p: int, nu: int, v: int, om: int, w: int, ctx: QContext) -> float:
    q, eps = ctx.q, ctx.eps_term
    m = p - w
    t = v - w
    u = p + t  # p + v - w
    mant1, e1 = _poch_inf_scaled(-rho, -2 * p, 2, q, eps)
    if mant1 == 0.0:
        return 0.0
    mant2, e2 = _poch_inf_scaled(-nu, -2 * v, 2, q, eps)
    if mant2 == 0.0:
        return 0.0
    mant3, e3 = _poch_inf_scaled(-om, -2 * w, 2, q, eps)
    val = psi_qpow((-nu, 2 * v + 2), (nu * om, 2 * t + 2), (rho * om, 2 * m + 2),
                   2, q, ctx)
    sign = _parity(-rho, m) * _parity(nu, v + 1)
    etotal = m + u * (u + 1) // 2 + e1 // 2 + e2 // 2 - e3 // 2
    den = _poch_inf_q(1, 4, 4, q, eps)
    return (sign * q**etotal * sqrt_checked(mant1 * mant2)
            / (den * sqrt_checked(mant3)) * val / _SQRT2)


def q_coeff(p_idx: SignedIndex, r: int, n: int, ctx: QContext) -> float:
    """Eigenvector coefficient for the eigenvalue ``sign * q^(2r)`` family.

    ``p_idx`` is the eigenvalue-label index; for the negative family only
    ``r + p >= 0`` labels are admissible and everything else contributes 0.
    """
    return _q_coeff(p_idx.sign, p_idx.value, r, n, ctx)


@lru_cache(maxsize=None)
def _q_coeff(sigma: int, p: int, r: int, n: int, ctx: QContext) -> float:
    if r < 0 or n < 0:
        return 0.0
    if sigma < 0 and p + r < 0:
        return 0.0   # inadmissible label for the negative-eigenvalue family
    if p + n < 0:
        return 0.0   # target leg below the natural range
    q, eps = ctx.q, ctx.eps_term
    mant_a, e_a = _poch_fin_scaled(-sigma, 2 * (p + r + 1), 2, n, q)
    if mant_a == 0.0:
        return 0.0
    b_inf = _poch_inf_q(1, 4 * (p + n + 1), 4, q, eps)
    mant_c, e_c = _poch_inf_scaled(-sigma, 2 * (p + r + 1), 2, q, eps)
    d_r = _poch_fin(1, 4, 4, r, q)
    e_m1 = _poch_inf_q(-1, 0, 2, q, eps)
    f_n = _poch_fin(1, 2, 2, n, q)
    phi = phi_qpow(((1, -2 * n), (1, -2 * r), (sigma, -2 * (p + n))),
                   ((-sigma, -2 * (p + n + r)), QP_ZERO),
                   2, (1, 2), termination=min(n, r), q=q)
    sign = _parity(-sigma, r) * _parity(sigma, n)
    etotal = r + n * (n - 1) // 2 + e_a - e_c // 2
    return (sign * q**etotal * mant_a * sqrt_checked(b_inf)
            / (sqrt_checked(mant_c) * sqrt_checked(d_r * e_m1 * f_n)) * phi)


def g_elem(sign: int, r: int, s: int, n: int, k: int, ctx: QContext):
    """One matrix element of the implementing unitary's (r,s) block.

    Returns ``(coefficient, target)`` where target is the basis index
    ``(SignedIndex(sign, n-r-s-1), k-r+s)``; the coefficient is forced to an
    exact 0 (with target None) when that index leaves its split set.
    """
    mval = n - r - s - 1
    if sign < 0 and mval >= 0:
        return 0.0, None
    coeff = _g_coeff(sign, r, s, n, ctx, alt=False)
    return coeff, (SignedIndex(sign, mval), k - r + s)


def g_elem_alt(sign: int, r: int, s: int, n: int, k: int, ctx: QContext):
    """Alternate terminating form of :func:`g_elem`; must agree with it."""
    mval = n - r - s - 1
    if sign < 0 and mval >= 0:
        return 0.0, None
    coeff = _g_coeff(sign, r, s, n, ctx, alt=True)
    return coeff, (SignedIndex(sign, mval), k - r + s)


@lru_cache(maxsize=None)
def _g_coeff(sign: int, r: int, s: int, n: int, ctx: QContext, alt: bool) -> float:
    if r < 0 or s < 0 or n < 0:
        return 0.0
    q, eps = ctx.q, ctx.eps_term
    mant_g, e_g = _poch_fin_scaled(-sign, 2 * (s + r - n + 1), 2, n, q)
    if mant_g == 0.0:
        return 0.0
    num_inf = _poch_inf_q(1, 2 * n + 2, 2, q, eps)
    mant_d, e_d = _poch_inf_scaled(-sign, 2 * (s + r + 1), 2, q, eps)
    d4 = _poch_fin(1, 4, 4, r, q) * _poch_fin(1, 4, 4, s, q)
    if alt:
        phi = phi_qpow(((1, -2 * n), (sign, -2 * r), (1, -2 * s)),
                       ((-sign, -2 * (s + r)), QP_ZERO),
                       2, (1, 2), termination=min(n, s), q=q)
        spre = _parity(-sign, r)
    else:
        phi = phi_qpow(((1, -2 * n), (1, -2 * r), (sign, -2 * s)),
                       ((-sign, -2 * (s + r)), QP_ZERO),
                       2, (1, 2), termination=min(n, r), q=q)
        spre = _parity(-sign, r) * _parity(sign, n)
    etotal = r + n * (n - 1) // 2 + e_g // 2 - e_d // 2
    return (spre * q**etotal * sqrt_checked(mant_g) * sqrt_checked(num_inf)
            / (sqrt_checked(mant_d) * sqrt_checked(d4)) * phi / _SQRT2)


def k_polynomial(r: int, s: int, sign: int, x: float, ctx: QContext) -> float:
    """Terminating 2phi1 of degree min(r,s) in the variable ``ctx.q2 * x``."""
    if r < 0 or s < 0:
        raise ValueError("r and s must be natural numbers")
    q = ctx.q
    mn = min(r, s)
    d = abs(r - s)
    spec = HyperSeriesSpec(
        numerators=(q ** (-2 * mn), -(q ** (-2 * mn))),
        denominators=(sign * q ** (2 * d + 2),),
        base=ctx.q2,
        argument=ctx.q2 * x,
        termination=mn,
    )
    return basic_hypergeometric(spec, ctx)


# ---------------------------------------------------------------------------
# support profiles (decay-truncated coefficient lines)
# ---------------------------------------------------------------------------

def _walk_up(fn, start: int, rel: float = _REL_CUT, min_steps: int = 6,
             hard_cap: int = 400):
    """Collect (k, fn(k)) for k = start, start+1, ... until the magnitude has
    stayed below rel * running-peak for four consecutive steps."""
    out = []
    peak = 0.0
    streak = 0
    k = start
    while True:
        c = fn(k)
        if c != 0.0:
            out.append((k, c))
            peak = max(peak, abs(c))
        if peak > 0.0 and abs(c) < rel * peak:
            streak += 1
            if streak >= 4 and k >= start + min_steps:
                break
        else:
            streak = 0
        k += 1
        if k > start + hard_cap:
            raise WindowTooSmall(f"no coefficient decay within {hard_cap} steps")
    return out, peak


def _walk_down(fn, start: int, rel: float = _REL_CUT, min_steps: int = 6,
               hard_cap: int = 400):
    out = []
    peak = 0.0
    streak = 0
    k = start
    while True:
        c = fn(k)
        if c != 0.0:
            out.append((k, c))
            peak = max(peak, abs(c))
        if peak > 0.0 and abs(c) < rel * peak:
            streak += 1
            if streak >= 4 and k <= start - min_steps:
                break
        else:
            streak = 0
        k -= 1
        if k < start - hard_cap:
            raise WindowTooSmall(f"no coefficient decay within {hard_cap} steps")
    return out, peak


@lru_cache(maxsize=None)
def xi_plus_profile(p: int, t: int, ctx: QContext):
    """Support line of the first-family basis vector: entries (v, w, coeff)
    over v - w = t, truncated at relative decay 1e-18."""
    start = max(0, -t)
    out, peak = _walk_up(lambda w: _p_plus(p, w + t, w, ctx), start)
    return tuple((w + t, w, c) for (w, c) in out if abs(c) >= _REL_CUT * peak)


@lru_cache(maxsize=None)
def xi_zero_profile(t: int, ctx: QContext):
    """Support line of the second-family vector, keyed by m = p - w:
    entries (m, coeff).  Translation covariance makes this p-independent."""
    down, peak1 = _walk_up(lambda m: _p_zero_line(m, t, ctx), 0)
    up, peak2 = _walk_down(lambda m: _p_zero_line(m, t, ctx), -1)
    peak = max(peak1, peak2)
    ents = sorted(down + up)
    return tuple((m, c) for (m, c) in ents if abs(c) >= _REL_CUT * peak)


@lru_cache(maxsize=None)
def xi_minus_profile(rho: int, p: int, t: int, ctx: QContext):
    """Support of the split-family vector: entries (v_idx, w_idx, coeff) over
    value difference t with the sign-parity constraint."""
    combos = [(1, 1), (-1, -1)] if rho > 0 else [(1, -1), (-1, 1)]
    raw = []
    peak = 0.0
    for nu, om in combos:
        w_hi = None  # upper bound on w from the sign constraints
        if om < 0:
            w_hi = -1
        if nu < 0:
            cap = -1 - t
            w_hi = cap if w_hi is None else min(w_hi, cap)
        def coeff(w, nu=nu, om=om):
            return _p_minus(rho, p, nu, w + t, om, w, ctx)
        if w_hi is None:
            dn, pk1 = _walk_up(coeff, p)
            up, pk2 = _walk_down(coeff, p - 1)
            ents = dn + up
            pk = max(pk1, pk2)
        else:
            start = min(w_hi, p + abs(t) + 16)
            ents, pk = _walk_down(coeff, start)
        peak = max(peak, pk)
        raw.extend((SignedIndex(nu, w + t), SignedIndex(om, w), c) for (w, c) in ents)
    return tuple((vi, wi, c) for (vi, wi, c) in raw if abs(c) >= _REL_CUT * peak)


@lru_cache(maxsize=None)
def p_plus_label_line(v: int, w: int, ctx: QContext):
    """First-family coefficients along the label direction: (p, coeff)."""
    out, peak = _walk_up(lambda p: _p_plus(p, v, w, ctx), 0)
    return tuple((p, c) for (p, c) in out if abs(c) >= _REL_CUT * peak)


@lru_cache(maxsize=None)
def p_minus_label_line(nu: int, v: int, om: int, w: int, ctx: QContext):
    """Split-family coefficients along the label direction: (p_idx, coeff)."""
    sigma = nu * om
    def coeff(p):
        return _p_minus(sigma, p, nu, v, om, w, ctx)
    if sigma > 0:
        up, pk1 = _walk_up(coeff, w)
        dn, pk2 = _walk_down(coeff, w - 1)
        ents = sorted(up + dn)
        peak = max(pk1, pk2)
    else:
        ents, peak = _walk_down(coeff, -1)
        ents = sorted(ents)
    return tuple((SignedIndex(sigma, p), c) for (p, c) in ents
                 if abs(c) >= _REL_CUT * peak)


@lru_cache(maxsize=None)
def eigvec_profile(sigma: int, p: int, r: int, ctx: QContext):
    """Eigenvector coefficient line: entries (n, coeff); label-independent of t."""
    if sigma < 0 and p + r < 0:
        return ()
    start = max(0, -p)
    out, peak = _walk_up(lambda n: _q_coeff(sigma, p, r, n, ctx), start)
    return tuple((n, c) for (n, c) in out if abs(c) >= _REL_CUT * peak)


@lru_cache(maxsize=None)
def eig_r_line(sigma: int, p: int, n: int, ctx: QContext):
    """Eigenvector coefficients along the r direction: (r, coeff)."""
    out, peak = _walk_up(lambda r: _q_coeff(sigma, p, r, n, ctx), 0)
    return tuple((r, c) for (r, c) in out if abs(c) >= _REL_CUT * peak)


# ---------------------------------------------------------------------------
# basis-vector assembly
# ---------------------------------------------------------------------------

def xi_vector(family: str, labels: tuple, window, ctx: QContext,
              tail_tol: float | None = None) -> SparseVector:
    """Assemble a four-leg basis vector for the given family and labels.

    ``labels`` is (r, s, p, t) with p an int for families "+"/"0" and a
    :class:`SignedIndex` for family "-".  Entries whose legs fall outside
    ``window`` (duck-typed: n_cut, z_lo, z_hi) are dropped and their l2 mass
    recorded in ``tail_bound``; raises :class:`WindowTooSmall` when a
    requested ``tail_tol`` is exceeded.
    """
    r, s, p, t = labels
    n_cut, z_lo, z_hi = window.n_cut, window.z_lo, window.z_hi
    entries: dict = {}
    dropped = 0.0
    peak = 0.0

    def keep(key, c):
        nonlocal dropped, peak
        peak = max(peak, abs(c))
        for kind, leg in zip(FAMILY_SIGS[family] * 2, key):
            if not leg_in_window(kind, leg, n_cut, z_lo, z_hi):
                dropped += c * c
                return
        entries[key] = c

    if family == "+":
        if p < 0:
            raise ValueError("family + labels need p >= 0")
        for v, w, c in xi_plus_profile(p, t, ctx):
            keep((v, r + p - w, w, s - p + v), c)
    elif family == "0":
        for m, c in xi_zero_profile(t, ctx):
            w = p - m
            v = w + t
            keep((v, r + p - w, w, s - p + v), c)
    elif family == "-":
        if not isinstance(p, SignedIndex) or not in_split_lower(p):
            raise ValueError("family - labels need a split-set SignedIndex p")
        for vi, wi, c in xi_minus_profile(p.sign, p.value, t, ctx):
            keep((vi, r + p.value - wi.value, wi, s - p.value + vi.value), c)
    else:
        raise ValueError(f"unknown family {family!r}")

    tail = math.sqrt(dropped) + 4.0 * _REL_CUT * peak
    if tail_tol is not None and tail > tail_tol:
        raise WindowTooSmall(
            f"certified tail {tail:.3e} exceeds requested {tail_tol:.3e}")
    return SparseVector(entries=entries, tail_bound=tail)


def xi_eigen_vector(sigma: int, r: int, t: int, p: int, ctx: QContext) -> SparseVector:
    """Three-leg eigenvector of the deformed-sphere coaction image at
    eigenvalue ``sigma * q^(2r)``; entries over (n, t-n, p+n)."""
    entries = {}
    for n, c in eigvec_profile(sigma, p, r, ctx):
        entries[(n, t - n, p + n)] = c
    return SparseVector(entries=entries, tail_bound=0.0)
