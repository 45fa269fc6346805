"""Finite truncations of the generator operators, coaction images, Jacobi
blocks, the multiplicative unitaries, the implementing unitary and the
comultiplication sandwiches built from them.

Representation
--------------
Operators are sparse and column-oriented: a column function maps a domain
basis tuple to a ``{row tuple: coefficient}`` dict.  Columns are computed on
demand and cached, so deep compositions (comultiplication sandwiches,
coassociativity towers) never materialize more than the columns a check
touches.  Basis tuples follow the leg-kind signatures from
:mod:`qmu.coefficients`; every leg of a stored entry lies inside the
operator's window.

Assertion discipline: checks evaluate only on columns whose legs keep at
least ``interior_margin`` distance from every truncation edge (the natural
boundary at 0 of an "N" leg is not a truncation edge), so shift operators
never lose mass off the window inside an asserted equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SignatureMismatch, WindowTooSmall
from .qseries import QContext, _poch_fin, _poch_inf_q, _poch_inf_scaled, sqrt_checked
from .coefficients import (
    LEG_N,
    LEG_S,
    LEG_Z,
    SIG_MINUS,
    SIG_PLUS,
    SIG_ZERO,
    FAMILY_SIGS,
    SignedIndex,
    SparseVector,
    eig_r_line,
    eigvec_profile,
    in_split_lower,
    leg_in_window,
    p_minus_label_line,
    p_plus_label_line,
    splus,
    sminus,
    xi_minus_profile,
    xi_plus_profile,
    xi_zero_profile,
)

LABEL_SIGS = {
    "+": (LEG_Z, LEG_Z, LEG_N, LEG_Z),
    "0": (LEG_Z, LEG_Z, LEG_Z, LEG_Z),
    "-": (LEG_Z, LEG_Z, LEG_S, LEG_Z),
}

# 3-leg spaces of the sphere-coaction picture
SIG_COACT = (LEG_N, LEG_Z, LEG_N)          # l2(N) x l2(Z) x l2(N)
SIG_GTARGET = (LEG_S, LEG_Z, LEG_N)        # split x l2(Z) x l2(N)


@dataclass(frozen=True)
class Window:
    """Truncation window: N-type legs span 0..n_cut, Z-type legs z_lo..z_hi.

    ``interior_margin`` is the shift budget kept clear of the truncation
    edges when equalities are asserted.
    """

    n_cut: int = 24
    z_lo: int = -12
    z_hi: int = 12
    interior_margin: int = 8

    def __post_init__(self):
        if self.z_lo >= self.z_hi:
            raise ValueError("need z_lo < z_hi")
        if self.interior_margin < 0:
            raise ValueError("interior_margin must be >= 0")

    def leg_ok(self, kind: str, leg) -> bool:
        return leg_in_window(kind, leg, self.n_cut, self.z_lo, self.z_hi)

    def tuple_ok(self, sig: tuple[str, ...], tup: tuple) -> bool:
        return all(self.leg_ok(k, leg) for k, leg in zip(sig, tup))

    def leg_interior(self, kind: str, leg) -> bool:
        m = self.interior_margin
        if kind == LEG_N:
            return 0 <= leg <= self.n_cut - m
        if kind == LEG_Z:
            return self.z_lo + m <= leg <= self.z_hi - m
        if kind == LEG_S:
            return self.z_lo + m <= leg.value <= self.z_hi - m
        raise ValueError(f"unknown leg kind {kind}")

    def tuple_interior(self, sig: tuple[str, ...], tup: tuple) -> bool:
        return all(self.leg_interior(k, leg) for k, leg in zip(sig, tup))

    def leg_range(self, kind: str, interior: bool = False):
        m = self.interior_margin if interior else 0
        if kind == LEG_N:
            return range(0, self.n_cut - m + 1)
        if kind == LEG_Z:
            return range(self.z_lo + m, self.z_hi - m + 1)
        if kind == LEG_S:
            return [SignedIndex(s, v) for s in (-1, 1)
                    for v in range(self.z_lo + m, self.z_hi - m + 1)
                    if s > 0 or v < 0]
        raise ValueError(f"unknown leg kind {kind}")


class TruncatedOperator:
    """Sparse window-truncated operator with lazily computed columns.

    ``column_fn(col) -> {row: coeff}`` provides the action on a domain basis
    tuple; an entry-backed operator just wraps a dict.  Values are immutable
    after assembly by convention; arithmetic returns new operators.
    """

    def __init__(self, domain: tuple[str, ...], codomain: tuple[str, ...],
                 window: Window, column_fn=None, columns: dict | None = None,
                 adjoint_fn=None):
        self.domain = domain
        self.codomain = codomain
        self.window = window
        self._fn = column_fn
        self._cols: dict = dict(columns) if columns else {}
        self._adjoint_fn = adjoint_fn

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_entries(cls, domain, codomain, window, entries):
        """Build from {(row, col): value}; out-of-window entries are dropped."""
        cols: dict = {}
        for (row, col), val in entries.items():
            if val == 0:
                continue
            if not (window.tuple_ok(codomain, row) and window.tuple_ok(domain, col)):
                continue
            cols.setdefault(col, {})[row] = val
        return cls(domain, codomain, window, columns=cols)

    # -- column access --------------------------------------------------------

    def col(self, col: tuple) -> dict:
        c = self._cols.get(col)
        if c is None:
            if self._fn is None:
                return {}
            c = self._fn(col)
            self._cols[col] = c
        return c

    def apply(self, vec: SparseVector) -> SparseVector:
        out: dict = {}
        for key, amp in sorted(vec.entries.items()):
            for row, val in self.col(key).items():
                out[row] = out.get(row, 0.0) + amp * val
        return SparseVector(entries={k: v for k, v in out.items() if v != 0},
                            tail_bound=vec.tail_bound)

    # -- algebra ---------------------------------------------------------------

    def compose(self, other: "TruncatedOperator") -> "TruncatedOperator":
        """self after other (matrix product self @ other)."""
        if other.codomain != self.domain:
            raise SignatureMismatch(
                f"cannot compose {self.domain} after {other.codomain}")

        def fn(col, a=self, b=other):
            out: dict = {}
            for mid, v in sorted(b.col(col).items()):
                for row, u in a.col(mid).items():
                    out[row] = out.get(row, 0.0) + u * v
            return {k: v for k, v in out.items() if v != 0}

        return TruncatedOperator(other.domain, self.codomain, self.window, fn)

    def __matmul__(self, other):
        return self.compose(other)

    def add(self, other: "TruncatedOperator", scale=1.0) -> "TruncatedOperator":
        if other.domain != self.domain or other.codomain != self.codomain:
            raise SignatureMismatch("cannot add operators of unlike signature")

        def fn(col, a=self, b=other, s=scale):
            out = dict(a.col(col))
            for row, v in b.col(col).items():
                out[row] = out.get(row, 0.0) + s * v
            return {k: v for k, v in out.items() if v != 0}

        return TruncatedOperator(self.domain, self.codomain, self.window, fn)

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other, scale=-1.0)

    def scaled(self, s) -> "TruncatedOperator":
        def fn(col, a=self, s=s):
            return {k: s * v for k, v in a.col(col).items()}
        return TruncatedOperator(self.domain, self.codomain, self.window, fn)

    def __mul__(self, s):
        return self.scaled(s)

    __rmul__ = __mul__

    def tensor(self, other: "TruncatedOperator") -> "TruncatedOperator":
        n = len(self.domain)

        def fn(col, a=self, b=other, n=n):
            ca, cb = col[:n], col[n:]
            out = {}
            for ra, va in a.col(ca).items():
                for rb, vb in b.col(cb).items():
                    out[ra + rb] = va * vb
            return out

        return TruncatedOperator(self.domain + other.domain,
                                 self.codomain + other.codomain,
                                 self.window, fn)

    def adjoint(self) -> "TruncatedOperator":
        """Conjugate transpose.  Entry-backed operators are transposed
        literally; lazily generated ones must supply an adjoint companion."""
        if self._fn is None:
            entries = {}
            for col, rows in self._cols.items():
                for row, v in rows.items():
                    entries[(col, row)] = v.conjugate() if isinstance(v, complex) else v
            return TruncatedOperator.from_entries(
                self.codomain, self.domain, self.window, entries)
        if self._adjoint_fn is not None:
            return self._adjoint_fn()
        raise SignatureMismatch("adjoint of a generator-backed operator "
                                "requires an adjoint companion")

    def on_legs(self, domain: tuple[str, ...], codomain: tuple[str, ...],
                legs: tuple[int, ...]) -> "TruncatedOperator":
        """Embed this operator so it acts on the given legs of a larger
        space, identity elsewhere.  ``legs`` refer to domain positions; the
        same positions in ``codomain`` receive this operator's codomain legs.
        """
        if tuple(domain[i] for i in legs) != self.domain:
            raise SignatureMismatch("selected legs do not match operator domain")
        passive = [i for i in range(len(domain)) if i not in legs]
        if tuple(codomain[i] for i in passive) != tuple(domain[i] for i in passive):
            raise SignatureMismatch("passive legs must be identical in domain "
                                    "and codomain")

        def fn(col, op=self, legs=legs, passive=passive, m=len(codomain)):
            sub = tuple(col[i] for i in legs)
            out = {}
            base = [None] * m
            for i in passive:
                base[i] = col[i]
            for row, v in op.col(sub).items():
                full = list(base)
                for i, leg in zip(legs, row):
                    full[i] = leg
                out[tuple(full)] = v
            return out

        return TruncatedOperator(domain, codomain, self.window, fn)

    # -- inspection -------------------------------------------------------------

    def materialize(self, cols) -> "TruncatedOperator":
        columns = {c: dict(self.col(c)) for c in cols}
        return TruncatedOperator(self.domain, self.codomain, self.window,
                                 columns={c: r for c, r in columns.items() if r})

    def entries_on(self, cols):
        for c in sorted(cols):
            for row, v in sorted(self.col(c).items()):
                yield (row, c), v

    def restriction_norm(self, cols) -> float:
        """Largest singular value of the restriction to the given columns."""
        cols = sorted(cols)
        rows = sorted({r for c in cols for r in self.col(c)})
        if not rows or not cols:
            return 0.0
        ridx = {r: i for i, r in enumerate(rows)}
        mat = np.zeros((len(rows), len(cols)), dtype=complex)
        for j, c in enumerate(cols):
            for r, v in self.col(c).items():
                mat[ridx[r], j] = v
        return float(np.linalg.svd(mat, compute_uv=False)[0])

    def dump_lines(self, cols):
        """Textual dump: one line per entry, "row TAB col TAB re TAB im",
        sorted lexicographically."""
        lines = []
        for (row, c), v in self.entries_on(cols):
            z = complex(v)
            lines.append(f"{row}\t{c}\t{z.real!r}\t{z.imag!r}")
        return lines


def identity_operator(sig: tuple[str, ...], window: Window) -> TruncatedOperator:
    op = TruncatedOperator(sig, sig, window,
                           column_fn=lambda col: {col: 1.0})
    op._adjoint_fn = lambda: op
    return op


def max_col_deviation(a: TruncatedOperator, b: TruncatedOperator, cols) -> float:
    """Max absolute entry difference of a and b over the given columns."""
    worst = 0.0
    for c in cols:
        ca, cb = a.col(c), b.col(c)
        for row in ca.keys() | cb.keys():
            worst = max(worst, abs(ca.get(row, 0.0) - cb.get(row, 0.0)))
    return worst


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_su2(window: Window, ctx: QContext):
    """Generator pair on l2(N) x l2(Z): a weighted one-step lowering operator
    and a diagonal-times-shift."""
    q = ctx.q
    ent_a = {}
    ent_b = {}
    for k in window.leg_range(LEG_N):
        for z in window.leg_range(LEG_Z):
            if k >= 1:
                ent_a[((k - 1, z), (k, z))] = sqrt_checked(1.0 - q ** (2 * k))
            ent_b[((k, z + 1), (k, z))] = q**k
    a = TruncatedOperator.from_entries(SIG_PLUS, SIG_PLUS, window, ent_a)
    b = TruncatedOperator.from_entries(SIG_PLUS, SIG_PLUS, window, ent_b)
    return a, b


def gen_e2(window: Window, ctx: QContext):
    """Generator pair on l2(Z) x l2(Z): the backward shift (first leg) and
    the unbounded diagonal-times-shift acting on core basis vectors."""
    q = ctx.q
    ent_a = {}
    ent_b = {}
    for n in window.leg_range(LEG_Z):
        for z in window.leg_range(LEG_Z):
            ent_a[((n - 1, z), (n, z))] = 1.0
            ent_b[((n, z + 1), (n, z))] = q**n
    a = TruncatedOperator.from_entries(SIG_ZERO, SIG_ZERO, window, ent_a)
    b = TruncatedOperator.from_entries(SIG_ZERO, SIG_ZERO, window, ent_b)
    return a, b


def gen_sphere(window: Window, ctx: QContext, sign: int = 1):
    """One-leg sphere generators: weighted lowering Y and diagonal W."""
    q = ctx.q
    ent_y = {}
    ent_w = {}
    for k in window.leg_range(LEG_N):
        if k >= 1:
            ent_y[((k - 1,), (k,))] = sign * sqrt_checked(1.0 - q ** (4 * k))
        ent_w[((k,), (k,))] = sign * q ** (2 * k)
    y = TruncatedOperator.from_entries((LEG_N,), (LEG_N,), window, ent_y)
    w = TruncatedOperator.from_entries((LEG_N,), (LEG_N,), window, ent_w)
    return y, w


def coaction_sphere(which: str, window: Window, ctx: QContext) -> TruncatedOperator:
    """Positive-fiber coaction image of a sphere generator on
    l2(N) x l2(Z) x l2(N), assembled from the displayed generator formulas."""
    a, b = gen_su2(window, ctx)
    y, w = gen_sphere(window, ctx, sign=1)
    ad, bd = a.adjoint(), b.adjoint()
    yd = y.adjoint()
    one2 = identity_operator(SIG_PLUS, window)
    q = ctx.q
    if which == "W":
        t1 = ad.compose(bd).tensor(yd)
        mid = one2 - (1.0 + q * q) * bd.compose(b)
        t2 = mid.tensor(w)
        t3 = b.compose(a).tensor(y)
        return t1 + t2 + t3
    if which == "Y":
        t1 = (-q) * bd.compose(bd).tensor(yd)
        t2 = (-q * (1.0 + q * q)) * bd.compose(a).tensor(w)
        t3 = a.compose(a).tensor(y)
        return t1 + t2 + t3
    if which == "Ystar":
        t1 = ad.compose(ad).tensor(yd)
        t2 = (-q * (1.0 + q * q)) * ad.compose(b).tensor(w)
        t3 = (-q) * b.compose(b).tensor(y)
        return t1 + t2 + t3
    raise ValueError("which must be 'W', 'Y' or 'Ystar'")


def jacobi_block(p: int, window: Window, ctx: QContext) -> TruncatedOperator:
    """The real symmetric tridiagonal block of the coaction image of the
    diagonal sphere generator on one invariant subspace."""
    q = ctx.q
    ent = {}
    for n in range(window.n_cut + 1):
        if p >= 0:
            up = q**n * sqrt_checked((1 - q ** (2 * n + 2)) * (1 - q ** (4 * (p + n) + 4)))
            diag = (1 - (1 + q * q) * q ** (2 * n)) * q ** (2 * (p + n))
            dn = (q ** (n - 1) * sqrt_checked((1 - q ** (2 * n)) * (1 - q ** (4 * (p + n))))
                  if n >= 1 else 0.0)
        else:
            up = q ** (n - p) * sqrt_checked((1 - q ** (2 * n - 2 * p + 2)) * (1 - q ** (4 * n + 4)))
            diag = (1 - (1 + q * q) * q ** (2 * (n - p))) * q ** (2 * n)
            dn = (q ** (n - p - 1) * sqrt_checked((1 - q ** (2 * n - 2 * p)) * (1 - q ** (4 * n)))
                  if n >= 1 else 0.0)
        if n + 1 <= window.n_cut:
            ent[((n + 1,), (n,))] = up
        ent[((n,), (n,))] = diag
        if n >= 1:
            ent[((n - 1,), (n,))] = dn
    return TruncatedOperator.from_entries((LEG_N,), (LEG_N,), window, ent)


# ---------------------------------------------------------------------------
# multiplicative unitaries
# ---------------------------------------------------------------------------

def multiplicative_unitary(family: str, window: Window, ctx: QContext) -> TruncatedOperator:
    """The unitary sending each four-leg basis vector of the family to its
    label vector; the adjoint's columns are the basis vectors themselves.

    Returned operator maps the doubled Hilbert space to the label space;
    ``.adjoint()`` gives the reverse map.  Both directions are generated
    lazily from the coefficient profiles, clipped to the window.
    """
    sig = FAMILY_SIGS[family] * 2
    lsig = LABEL_SIGS[family]
    win = window

    def w_fn(col):
        # column of W at a doubled-space basis tuple: overlap with every
        # label vector supported on it; one free label direction remains.
        out = {}
        if family == "+":
            v, z1, w, z2 = col
            t = v - w
            for p, c in p_plus_label_line(v, w, ctx):
                lab = (z1 - p + w, z2 + p - v, p, t)
                if win.tuple_ok(lsig, lab):
                    out[lab] = c
        elif family == "0":
            v, z1, w, z2 = col
            t = v - w
            for m, c in xi_zero_profile(t, ctx):
                p = w + m
                lab = (z1 - p + w, z2 + p - v, p, t)
                if win.tuple_ok(lsig, lab):
                    out[lab] = c
        else:
            vi, z1, wi, z2 = col
            t = vi.value - wi.value
            for pidx, c in p_minus_label_line(vi.sign, vi.value, wi.sign, wi.value, ctx):
                lab = (z1 - pidx.value + wi.value, z2 + pidx.value - vi.value, pidx, t)
                if win.tuple_ok(lsig, lab):
                    out[lab] = c
        return out

    def wstar_fn(lab):
        r, s, p, t = lab
        out = {}
        if family == "+":
            prof = xi_plus_profile(p, t, ctx)
            for v, w, c in prof:
                key = (v, r + p - w, w, s - p + v)
                if win.tuple_ok(sig, key):
                    out[key] = c
        elif family == "0":
            for m, c in xi_zero_profile(t, ctx):
                w = p - m
                v = w + t
                key = (v, r + p - w, w, s - p + v)
                if win.tuple_ok(sig, key):
                    out[key] = c
        else:
            pv = p.value
            for vi, wi, c in xi_minus_profile(p.sign, pv, t, ctx):
                key = (vi, r + pv - wi.value, wi, s - pv + vi.value)
                if win.tuple_ok(sig, key):
                    out[key] = c
        return out

    wop = TruncatedOperator(sig, lsig, window, w_fn)
    wstar = TruncatedOperator(lsig, sig, window, wstar_fn)
    wop._adjoint_fn = lambda: wstar
    wstar._adjoint_fn = lambda: wop
    return wop


def comult(x: TruncatedOperator, corner: tuple[str, str], window: Window,
           ctx: QContext) -> TruncatedOperator:
    """Comultiplication sandwich: W_mu^* (1 (x) x) W_nu on the doubled space.

    ``x`` must map the nu-family space into the mu-family space (two legs
    each).  The result acts H_nu (x) H_nu -> H_mu (x) H_mu and is evaluated
    lazily column by column.
    """
    mu, nu = corner
    sig_nu, sig_mu = FAMILY_SIGS[nu], FAMILY_SIGS[mu]
    if x.domain != sig_nu or x.codomain != sig_mu:
        raise SignatureMismatch(
            f"x has signature {x.domain}->{x.codomain}, corner needs "
            f"{sig_nu}->{sig_mu}")
    w_nu = multiplicative_unitary(nu, window, ctx)
    w_mu_star = multiplicative_unitary(mu, window, ctx).adjoint()
    lsig_nu = LABEL_SIGS[nu]
    lsig_mu = LABEL_SIGS[mu]
    mid = x.on_legs(lsig_nu, lsig_mu, legs=(2, 3))
    return w_mu_star.compose(mid.compose(w_nu))


# ---------------------------------------------------------------------------
# implementing unitary of the projective-plane coaction
# ---------------------------------------------------------------------------

def implementing_unitary_G(window: Window, ctx: QContext) -> TruncatedOperator:
    """Unitary sending the coaction eigenvector with labels (r, sign, t, p)
    to ``e_{-p-r-1}^{(sign)} (x) e_{p+t-r} (x) e_r``; built lazily from the
    eigenvector coefficient lines in both directions."""
    win = window

    def g_fn(col):
        n, k, s = col
        out = {}
        p = s - n
        for sigma in (1, -1):
            for r, c in eig_r_line(sigma, p, n, ctx):
                row = (SignedIndex(sigma, n - s - r - 1), k - r + s, r)
                if in_split_lower(row[0]) and win.tuple_ok(SIG_GTARGET, row):
                    out[row] = c
        return out

    def gstar_fn(col):
        mi, l, r = col
        p = -mi.value - r - 1
        t = l + 2 * r + mi.value + 1
        out = {}
        for n, c in eigvec_profile(mi.sign, p, r, ctx):
            row = (n, t - n, p + n)
            if win.tuple_ok(SIG_COACT, row):
                out[row] = c
        return out

    g = TruncatedOperator(SIG_COACT, SIG_GTARGET, window, g_fn)
    gstar = TruncatedOperator(SIG_GTARGET, SIG_COACT, window, gstar_fn)
    g._adjoint_fn = lambda: gstar
    gstar._adjoint_fn = lambda: g
    return g


def sign_operator_e(window: Window) -> TruncatedOperator:
    """The self-adjoint unitary acting as the sign label on the split leg."""
    def fn(col):
        return {col: float(col[0].sign)}
    op = TruncatedOperator(SIG_MINUS, SIG_MINUS, window, fn)
    op._adjoint_fn = lambda: op
    return op


def g_block(sign: int, r: int, s: int, window: Window, ctx: QContext) -> TruncatedOperator:
    """The (r, s) block of the implementing unitary restricted to one sign,
    as a two-leg operator, from the closed matrix-element formula."""
    from .coefficients import g_elem

    def fn(col, sign=sign, r=r, s=s):
        n, k = col
        coeff, target = g_elem(sign, r, s, n, k, ctx)
        if coeff == 0.0 or target is None:
            return {}
        if not window.tuple_ok(SIG_MINUS, target):
            return {}
        return {target: coeff}

    return TruncatedOperator(SIG_PLUS, SIG_MINUS, window, fn)


def g_block_factored(sign: int, r: int, s: int, window: Window,
                     ctx: QContext) -> TruncatedOperator:
    """The same block assembled from the factored one-leg operator chain
    (diagonal dressings, a power of the backward shift, a parity twist and a
    terminating polynomial of the number operator)."""
    from .coefficients import k_polynomial

    q = ctx.q
    eps = ctx.eps_term
    mn, mx = min(r, s), max(r, s)
    d4r = _poch_fin(1, 4, 4, r, q)
    d4s = _poch_fin(1, 4, 4, s, q)
    d4inf = _poch_inf_q(1, 4, 4, q, eps)
    pinf = _poch_inf_q(-sign, 2 * (mx - mn) + 2, 2, q, eps)
    if s >= r:
        pref = (_parity(sign, s) / math.sqrt(2.0)
                * q ** ((r - s) * (3 * r + s + 1) // 2)
                * sqrt_checked(d4s / d4r) * pinf / d4inf)
    else:
        pref = (_parity(sign, r) / math.sqrt(2.0)
                * q ** ((s - r) * (3 * s + r + 1) // 2)
                * sqrt_checked(d4r / d4s) * pinf / d4inf)

    def fn(col):
        n, k = col
        # rightmost factors: b-shift power and the terminating polynomial
        if s >= r:
            val = q ** (n * (s - r))
            k2 = k + (s - r)
        else:
            val = (-q) ** (r - s) * q ** (n * (r - s))
            k2 = k - (r - s)
        val *= k_polynomial(r, s, sign, q ** (2 * n), ctx)
        val *= sqrt_checked(_poch_inf_q(1, 2 * n + 2, 2, q, eps))  # N -> Z dressing
        m = n - r - s - 1
        # split-leg dressing q^{m(m+1)/2} ((-sign) q^{-2m}; q^2)_inf^{1/2}
        if sign < 0 and m >= 0:
            return {}
        mant, e2 = _poch_inf_scaled(-sign, -2 * m, 2, q, eps)
        if mant == 0.0:
            return {}
        val *= q ** (m * (m + 1) // 2 + e2 // 2) * sqrt_checked(mant)
        if s >= r:
            val *= _parity(sign, m + 1)  # parity twist on the shifted leg
        row = (SignedIndex(sign, m), k2)
        if not window.tuple_ok(SIG_MINUS, row):
            return {}
        return {row: pref * val}

    return TruncatedOperator(SIG_PLUS, SIG_MINUS, window, fn)


def _parity(sign: int, k: int) -> int:
    return 1 if k % 2 == 0 else sign
