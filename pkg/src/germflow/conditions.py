"""Pointwise quantities behind the gradient conditions on F(x, t) = f(x) + t g(x).

Every condition is exposed as a ``(numerator, denominator)`` pair whose ratio
the condition constrains; deciding "tends to zero" versus "bounded" needs a
limit and lives in :mod:`germflow.arcs`.  All kinds share one convention: a
condition is violated when the ratio is unbounded.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import InputError, NotLiftableError, NumericInconsistencyError
from .poly_core import Field, Polynomial, raw_partials

EPS_REL = 1e-12


class ConditionKind(str, enum.Enum):
    C0_1 = "C0_1"
    C1_1 = "C1_1"
    C1_2 = "C1_2"
    C2_6_LeSaito = "C2_6_LeSaito"
    C2_7_Kuo = "C2_7_Kuo"
    C3_1_Malgrange = "C3_1_Malgrange"
    C3_2 = "C3_2"
    C3_3 = "C3_3"
    CorAg_ii = "CorAg_ii"

    @classmethod
    def parse(cls, value) -> "ConditionKind":
        if isinstance(value, ConditionKind):
            return value
        text = str(value).strip().lower()
        for kind in cls:
            # short aliases such as "C2_6" or "C3_1"
            if text in (kind.value.lower(), "_".join(kind.value.lower().split("_")[:2])):
                return kind
        raise InputError(f"unknown condition kind {value!r}")


# kinds whose statement lives on the zero set F = 0
ZERO_SET_KINDS = frozenset({ConditionKind.C1_1, ConditionKind.C1_2, ConditionKind.CorAg_ii, ConditionKind.C3_2})
INFINITY_KINDS = frozenset({ConditionKind.C3_2, ConditionKind.C3_3})


@dataclass(frozen=True)
class GermFamily:
    """The deformation F(x, t) = f(x) + t g(x).

    ``germ=False`` lifts the requirement f(0) = g(0) = 0, which the chart
    families at infinity and Malgrange probes do not satisfy.
    """

    f: Polynomial
    g: Polynomial
    field: Field = Field.REAL
    germ: bool = True
    at_infinity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "field", Field.parse(self.field))
        if self.f.nvars != self.g.nvars:
            raise InputError(f"f has {self.f.nvars} variables, g has {self.g.nvars}")
        if self.field is Field.REAL and not (self.f.is_real and self.g.is_real):
            raise InputError("real family with complex coefficients")
        if self.germ and (self.f.constant_term() != 0 or self.g.constant_term() != 0):
            raise InputError("germ condition f(0) = g(0) = 0 violated")

    @property
    def nvars(self) -> int:
        return self.f.nvars

    @property
    def dtype(self):
        return complex if self.field is Field.COMPLEX else float

    def point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape != (self.nvars,):
            raise InputError(f"expected a point with {self.nvars} coordinates, got shape {x.shape}")
        return x

    def jet(self, x) -> "Jet":
        x = self.point(x)
        pts = x.reshape(1, -1)
        fv = self.f.evaluate_many(pts)[0]
        gv = self.g.evaluate_many(pts)[0]
        return Jet(x=x, f=fv, g=gv, df=raw_partials(self.f, x), dg=raw_partials(self.g, x),
                   g_scale=float(self.g.magnitude_many(pts)[0]), field=self.field)

    def value(self, x, t):
        j = self.jet(x)
        return j.f + t * j.g


@dataclass(frozen=True)
class Jet:
    """Values and raw (unconjugated) partials of f and g at one x."""

    x: np.ndarray
    f: complex
    g: complex
    df: np.ndarray
    dg: np.ndarray
    g_scale: float
    field: Field

    def _conj(self, v):
        return np.conj(v) if self.field is Field.COMPLEX else v

    @property
    def grad_f(self):
        return self._conj(self.df)

    @property
    def grad_g(self):
        return self._conj(self.dg)

    def raw_dxF(self, t):
        return self.df + t * self.dg

    def grad_x_F(self, t):
        return self._conj(self.raw_dxF(t))

    def grad_F(self, t):
        """Full gradient in (x, t): (grad_x f + t grad_x g, dF/dt) with conjugation."""
        return np.append(self.grad_x_F(t), self._conj(np.asarray(self.g)))

    def grad_g_ext(self):
        return np.append(self.grad_g, 0.0)

    @property
    def g_is_zero(self) -> bool:
        return abs(self.g) <= EPS_REL * self.g_scale


def hermitian(a, b) -> complex:
    """<a, b> = sum a_i conj(b_i)."""
    return complex(np.vdot(b, a))


def norm(v) -> float:
    return float(np.linalg.norm(v)) if np.size(v) else 0.0


@dataclass(frozen=True)
class InfLambdaResult:
    value: float
    minimizer: complex
    degenerate: bool


def line_distance(u, w) -> InfLambdaResult:
    """min over lambda of |u + lambda w|.

    The minimiser is -<u, w>/|w|^2.  The value is measured on the residual
    vector (after one re-orthogonalisation pass) rather than through the Gram
    expression, which loses everything to cancellation when u is nearly
    parallel to w.
    """
    u = np.asarray(u)
    w = np.asarray(w)
    if u.shape != w.shape:
        raise InputError(f"vector length mismatch: {u.shape} vs {w.shape}")
    nu, nw = norm(u), norm(w)
    if nw <= EPS_REL * max(nu, nw) or nw == 0.0:
        return InfLambdaResult(nu, 0j, True)
    ww = nw * nw
    lam = -hermitian(u, w) / ww
    if not np.iscomplexobj(u) and not np.iscomplexobj(w):
        lam = complex(lam.real, 0.0)
        r = u + lam.real * w
        corr = -float(np.dot(r, w)) / ww
        r = r + corr * w
        lam += corr
    else:
        r = u + lam * w
        corr = -hermitian(r, w) / ww
        r = r + corr * w
        lam += corr
    return InfLambdaResult(norm(r), complex(lam), False)


def delta(fam: GermFamily, x) -> float:
    """|grad f|^2 |grad g|^2 - |<grad g, grad f>|^2, clamped at roundoff level."""
    j = fam.jet(x)
    return _delta(j)


def _delta(j: Jet) -> float:
    # Lagrange identity: a sum of squared 2x2 minors, so no cancellation
    # between two large products when the gradients are nearly parallel
    a, b = j.grad_f, j.grad_g
    minors = np.outer(a, b) - np.outer(b, a)
    d = 0.5 * float(np.sum(np.abs(minors) ** 2))
    nf = norm(a) ** 2
    ng = norm(b) ** 2
    direct = nf * ng - abs(hermitian(b, a)) ** 2
    if direct < -EPS_REL * nf * ng * 10 and d > EPS_REL * nf * ng:
        raise NumericInconsistencyError(f"Delta = {direct:.3e} is negative beyond roundoff (scale {nf * ng:.3e})")
    return d


def phi_ratio(fam: GermFamily, x) -> float:
    """|g(x)| / inf_lambda |grad f + lambda grad g|.

    Takes only x: the quantity does not depend on t.  Returns inf when only
    the denominator vanishes and nan when both do.
    """
    j = fam.jet(x)
    num = abs(j.g)
    den = line_distance(j.grad_f, j.grad_g).value
    scale = max(norm(j.grad_f), norm(j.grad_g))
    return _ratio(num, den, EPS_REL * j.g_scale, EPS_REL * scale)


def _ratio(num, den, num_floor=0.0, den_floor=0.0):
    if den <= den_floor:
        return math.nan if num <= num_floor else math.inf
    return num / den


def split_point(fam: GermFamily, p):
    """Split a point of K^n x K into (x, t)."""
    if isinstance(p, tuple) and len(p) == 2 and np.ndim(p[0]) == 1:
        return fam.point(p[0]), p[1]
    arr = np.asarray(p)
    if arr.shape == (fam.nvars + 1,):
        t = arr[-1]
        if fam.field is Field.REAL:
            if np.iscomplexobj(arr):
                raise InputError("complex point for a real family")
            t = float(t)
        else:
            t = complex(t)
        return fam.point(arr[:-1]), t
    raise InputError(f"expected a point (x, t) with {fam.nvars} + 1 coordinates")


def condition_point_values(fam: GermFamily, kind: ConditionKind | str, p) -> tuple[float, float]:
    """The (numerator, denominator) pair of a condition at one point.

    ``x``-gradients are used for the kinds stated with |grad F|; adding the
    dF/dt = g component to the denominator does not change any of the
    asymptotic statements, but would cap the ratio at 1 and hide divergence.
    """
    kind = ConditionKind.parse(kind)
    if kind is ConditionKind.C3_1_Malgrange:
        x = np.asarray(p, dtype=fam.dtype)
        x = x[: fam.nvars] if x.shape == (fam.nvars + 1,) else fam.point(x)
        gf = raw_partials(fam.f, x)
        return 1.0, float(norm(x) * norm(gf))
    if kind in INFINITY_KINDS and not fam.at_infinity:
        raise InputError(f"{kind.value} needs a chart family built by the infinity module")
    x, t = split_point(fam, p)
    j = fam.jet(x)
    g = float(abs(j.g))
    if kind is ConditionKind.C0_1 or kind is ConditionKind.C2_6_LeSaito:
        return g, norm(j.grad_x_F(t))
    if kind is ConditionKind.C2_7_Kuo:
        return g, norm(x) * norm(j.grad_x_F(t))
    if kind is ConditionKind.C1_1:
        pnorm = math.hypot(norm(x), abs(t))
        return g, pnorm * line_distance(j.grad_g_ext(), j.grad_F(t)).value
    if kind is ConditionKind.C1_2:
        return g, line_distance(j.grad_g_ext(), j.grad_F(t)).value
    if kind is ConditionKind.CorAg_ii:
        return g, line_distance(j.grad_F(t), j.grad_g_ext()).value
    # chart at infinity: variables (y0, y1, ..., y_{n-1}); dF/dt = g_fam = -y0^d
    dyF = j.raw_dxF(t)
    if kind is ConditionKind.C3_2:
        return g, norm(dyF[1:])
    return g, norm(dyF)


def _rows_line_distance(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise line_distance for stacked vectors (same recipe, vectorised)."""
    nu = np.linalg.norm(u, axis=1)
    nw = np.linalg.norm(w, axis=1)
    deg = (nw == 0) | (nw <= EPS_REL * np.maximum(nu, nw))
    ww = np.where(deg, 1.0, nw * nw)
    real = not (np.iscomplexobj(u) or np.iscomplexobj(w))
    ip = np.sum(u * np.conj(w), axis=1)
    lam = -(ip.real if real else ip) / ww
    r = u + lam[:, None] * w
    ip2 = np.sum(r * np.conj(w), axis=1)
    corr = -(ip2.real if real else ip2) / ww
    r = r + corr[:, None] * w
    return np.where(deg, nu, np.linalg.norm(r, axis=1))


def condition_values_many(fam: GermFamily, kind: ConditionKind | str, X, T):
    """condition_point_values over many points at once; rows with nan t give nan."""
    kind = ConditionKind.parse(kind)
    X = np.asarray(X, dtype=fam.dtype)
    if kind is ConditionKind.C3_1_Malgrange:
        df = np.stack([d.evaluate_many(X) if not d.is_zero else np.zeros(len(X)) for d in fam.f.partials], axis=1)
        return np.ones(len(X)), np.linalg.norm(X, axis=1) * np.linalg.norm(df, axis=1)
    if kind in INFINITY_KINDS and not fam.at_infinity:
        raise InputError(f"{kind.value} needs a chart family built by the infinity module")
    T = np.asarray(T)
    bad = ~np.isfinite(T)
    T = np.where(bad, 0, T).astype(fam.dtype)
    zeros = np.zeros(len(X), dtype=fam.dtype)

    def partials(p):
        return np.stack([d.evaluate_many(X) if not d.is_zero else zeros for d in p.partials], axis=1)

    df, dg = partials(fam.f), partials(fam.g)
    gv = fam.g.evaluate_many(X)
    num = np.abs(gv).astype(float)
    cj = np.conj if fam.field is Field.COMPLEX else (lambda v: v)
    dxF = df + T[:, None] * dg
    if kind in (ConditionKind.C0_1, ConditionKind.C2_6_LeSaito):
        den = np.linalg.norm(dxF, axis=1)
    elif kind is ConditionKind.C2_7_Kuo:
        den = np.linalg.norm(X, axis=1) * np.linalg.norm(dxF, axis=1)
    elif kind in (ConditionKind.C1_1, ConditionKind.C1_2, ConditionKind.CorAg_ii):
        full = np.concatenate([cj(dxF), cj(gv)[:, None]], axis=1)
        gext = np.concatenate([cj(dg), zeros[:, None]], axis=1)
        if kind is ConditionKind.CorAg_ii:
            den = _rows_line_distance(full, gext)
        else:
            den = _rows_line_distance(gext, full)
            if kind is ConditionKind.C1_1:
                den = np.hypot(np.linalg.norm(X, axis=1), np.abs(T)) * den
    elif kind is ConditionKind.C3_2:
        den = np.linalg.norm(dxF[:, 1:], axis=1)
    else:
        den = np.linalg.norm(dxF, axis=1)
    den = np.asarray(den, dtype=float)
    num = np.where(bad, np.nan, num)
    den = np.where(bad, np.nan, den)
    return num, den


def lift_to_zero_set(fam: GermFamily, x):
    """(x, -f(x)/g(x)), the point above x on F = 0."""
    j = fam.jet(x)
    if j.g == 0 or j.g_is_zero:
        raise NotLiftableError(f"g(x) = {j.g!r} vanishes to roundoff; t = -f/g undefined")
    t = -j.f / j.g
    if fam.field is Field.REAL:
        t = float(np.real(t))
    else:
        t = complex(t)
    return np.append(j.x, t).astype(fam.dtype), t


def split_bound_values(fam: GermFamily, p, grid: int = 801) -> tuple[float, float]:
    """(|g|, inf_eta |x||eta grad_x F + grad g| + |t||eta dF/dt|).

    Diagnostic refinement of the C1_1 bound.  No closed form is claimed; the
    convex objective is scanned on a dense log grid and then refined.
    """
    x, t = split_point(fam, p)
    j = fam.jet(x)
    a = j.grad_x_F(t)
    b = j.grad_g
    c = abs(j.g)
    nx, nt = norm(x), abs(t)

    def h(eta):
        return nx * norm(eta * a + b) + nt * abs(eta) * c

    mags = np.concatenate([[0.0], np.logspace(-10, 10, grid)])
    if fam.field is Field.REAL:
        cands = np.concatenate([mags, -mags[1:]])
        vals = np.array([h(e) for e in cands])
        k = int(np.argmin(vals))
        e0 = cands[k]
        lo = min(e0 * 0.5, e0 * 2.0, e0 - 1e-10)
        hi = max(e0 * 0.5, e0 * 2.0, e0 + 1e-10)
        res = optimize.minimize_scalar(h, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        best = min(vals[k], float(res.fun))
    else:
        phases = np.exp(2j * np.pi * np.arange(32) / 32)
        best_val, best_eta = h(0.0), 0j
        for m in mags[1::4]:
            for ph in phases:
                v = h(m * ph)
                if v < best_val:
                    best_val, best_eta = v, m * ph
        res = optimize.minimize(lambda z: h(complex(z[0], z[1])), [best_eta.real, best_eta.imag],
                                method="Nelder-Mead", options={"xatol": 1e-14, "fatol": 1e-16, "maxiter": 4000})
        best = min(best_val, float(res.fun))
    return c, float(best)
