"""Test arcs and asymptotic verdicts.

An arc is a Laurent polynomial curve s -> (x(s), t(s)) on (0, s_max].  A
condition ratio is sampled along a geometric s-grid and its order in s is
fitted by least squares on log-log axes.  Verdicts are evidence, not proof:
a failing condition always has a violating analytic arc, but a bounded search
over arcs can miss it.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize

from ._parallel import parallel_map
from .conditions import (
    ZERO_SET_KINDS,
    ConditionKind,
    GermFamily,
    condition_point_values,
    condition_values_many,
    line_distance,
)
from .errors import InputError
from .poly_core import Field

MAX_EXPONENT = 12
FLOOR = 1e-300
SLOPE_MIN = 0.05
ZERO_LEVEL = 1e-3


class Target(str, enum.Enum):
    ORIGIN = "origin"
    ZERO_SET_LIFTED = "zero_set_lifted"
    INFINITY = "infinity"


class Verdict(str, enum.Enum):
    TENDS_TO_ZERO = "TendsToZero"
    BOUNDED_RATIO = "BoundedRatio"
    DIVERGES = "Diverges"
    INDETERMINATE = "Indeterminate"


Series = tuple  # tuple of (exponent, coefficient) pairs sorted by exponent


def _series(terms) -> Series:
    if isinstance(terms, dict):
        items = terms.items()
    else:
        items = terms
    acc: dict[int, complex] = {}
    for e, c in items:
        if int(e) != e:
            raise InputError(f"arc exponent {e!r} is not an integer")
        e = int(e)
        if not -MAX_EXPONENT <= e <= MAX_EXPONENT:
            raise InputError(f"arc exponent {e} outside [-{MAX_EXPONENT}, {MAX_EXPONENT}]")
        c = complex(c)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise InputError("non-finite arc coefficient")
        acc[e] = acc.get(e, 0j) + c
    return tuple(sorted((e, c) for e, c in acc.items() if c != 0))


def _eval_series(series: Series, s: np.ndarray, dtype) -> np.ndarray:
    out = np.zeros(s.shape, dtype=dtype)
    for e, c in series:
        out = out + (c if dtype is complex else c.real) * s ** float(e)
    return out


def _nonconstant(series: Series) -> bool:
    return any(e != 0 for e, _ in series)


@dataclass(frozen=True)
class Arc:
    """Laurent-polynomial arc.

    ``x`` holds one series per coordinate.  ``t`` is an optional series for
    the deformation parameter; ``lifted`` arcs instead take t = -f/g at each
    sample, which puts them on F = 0.
    """

    x: tuple
    t: Series | None = None
    lifted: bool = False
    s_max: float = 1.0
    complex_valued: bool = False
    arc_id: int = 0

    def __post_init__(self):
        xs = tuple(_series(c) for c in self.x)
        t = None if self.t is None else _series(self.t)
        if self.lifted and t is not None:
            raise InputError("a lifted arc takes t from the zero set; drop the t series")
        if not (any(_nonconstant(c) for c in xs) or (t is not None and _nonconstant(t))):
            raise InputError("arc has no nonconstant coordinate")
        if not self.s_max > 0:
            raise InputError("s_max must be positive")
        cplx = self.complex_valued or any(c.imag != 0 for ser in xs + ((t,) if t else ()) for _, c in ser)
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "complex_valued", bool(cplx))

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def dtype(self):
        return complex if self.complex_valued else float

    def x_at(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s <= 0) or np.any(s > self.s_max):
            raise InputError(f"arc parameter outside (0, {self.s_max}]")
        return np.stack([_eval_series(c, s, self.dtype) for c in self.x], axis=-1)

    def t_at(self, s) -> np.ndarray | None:
        if self.t is None:
            return None
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return _eval_series(self.t, s, self.dtype)

    def points(self, fam: GermFamily, s):
        """Sample (X, T) along the arc; lifted t is nan where g vanishes."""
        if self.dim != fam.nvars:
            raise InputError(f"arc has {self.dim} coordinates, family has {fam.nvars} variables")
        X = self.x_at(s).astype(fam.dtype)
        if self.lifted:
            fv = fam.f.evaluate_many(X)
            gv = fam.g.evaluate_many(X)
            gs = fam.g.magnitude_many(X)
            bad = (gv == 0) | (np.abs(gv) <= 1e-12 * gs)
            with np.errstate(divide="ignore", invalid="ignore"):
                T = np.where(bad, np.nan, -fv / np.where(bad, 1.0, gv))
            if fam.field is Field.REAL:
                T = np.real(T)
        elif self.t is not None:
            T = self.t_at(s).astype(fam.dtype)
        else:
            T = np.zeros(X.shape[0], dtype=fam.dtype)
        return X, T

    def to_json(self) -> dict:
        def enc(ser):
            return [[e, c.real, c.imag] for e, c in ser]
        return {
            "x": [enc(c) for c in self.x],
            "t": None if self.t is None else enc(self.t),
            "lifted": self.lifted,
            "s_max": self.s_max,
            "complex": self.complex_valued,
            "id": self.arc_id,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Arc":
        def dec(ser):
            return [(int(e), complex(float(re), float(im))) for e, re, im in ser]
        return cls(
            x=tuple(dec(c) for c in data["x"]),
            t=None if data.get("t") is None else dec(data["t"]),
            lifted=bool(data.get("lifted", False)),
            s_max=float(data.get("s_max", 1.0)),
            complex_valued=bool(data.get("complex", False)),
            arc_id=int(data.get("id", 0)),
        )


def make_monomial_arc(leading_exponents: Sequence[int], coefficients: Sequence, corrections=None,
                      t=None, lifted: bool = False, arc_id: int = 0) -> Arc:
    """Arc with coordinate i equal to c_i s^k_i plus optional correction terms.

    ``corrections`` maps a coordinate index to extra ``{exponent: coef}`` terms.
    A zero leading coefficient is rejected: the leading term must be genuine.
    """
    if len(leading_exponents) != len(coefficients):
        raise InputError("exponent and coefficient vectors differ in length")
    corrections = corrections or {}
    coords = []
    for i, (k, c) in enumerate(zip(leading_exponents, coefficients)):
        if complex(c) == 0:
            raise InputError(f"coordinate {i}: zero leading coefficient")
        terms = {int(k): complex(c)}
        for e, cc in dict(corrections.get(i, {})).items():
            if int(e) == int(k):
                raise InputError("correction term repeats the leading exponent")
            terms[int(e)] = complex(cc)
        coords.append(terms)
    return Arc(x=tuple(coords), t=t, lifted=lifted, arc_id=arc_id)


# -- grids and order fitting --------------------------------------------------

@dataclass(frozen=True)
class SGrid:
    """Geometric grid s_k = s0 * ratio**k, k = 0 .. count-1."""

    s0: float = 0.5
    ratio: float = 0.5
    count: int = 24
    window: int = 12

    def __post_init__(self):
        if not (0 < self.ratio < 1 and self.s0 > 0):
            raise InputError("grid needs s0 > 0 and 0 < ratio < 1")
        if self.count < 8 or not 2 <= self.window <= self.count:
            raise InputError("grid needs count >= 8 and 2 <= window <= count")

    def values(self) -> np.ndarray:
        return self.s0 * self.ratio ** np.arange(self.count, dtype=float)

    def to_json(self) -> dict:
        return {"s0": self.s0, "ratio": self.ratio, "count": self.count, "window": self.window}


@dataclass(frozen=True)
class OrderEstimate:
    slope: float
    intercept: float
    r2: float
    window: tuple[float, float]
    floored: bool = False
    indeterminate: bool = False

    @property
    def constant(self) -> float:
        return math.exp(self.intercept)

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "window": list(self.window), "floored": self.floored, "indeterminate": self.indeterminate}


def estimate_order(samples, window: int = 12) -> OrderEstimate:
    """Least-squares order of ``value ~ C s^slope`` over the smallest-s window."""
    pts = [(float(s), float(v)) for s, v in samples]
    if len(pts) < 8:
        raise InputError("order estimation needs at least 8 samples")
    ss = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.any(ss <= 0) or np.any(np.diff(ss) >= 0):
        raise InputError("s values must be positive and strictly decreasing")
    if np.any(np.isnan(vs)) or np.any(vs < 0) or np.any(np.isinf(vs)):
        raise InputError("values must be finite and non-negative")
    w = min(window, len(pts))
    ss, vs = ss[-w:], vs[-w:]
    floored = bool(np.any(vs < FLOOR))
    vs = np.maximum(vs, FLOOR)
    win = (float(ss.min()), float(ss.max()))
    if np.all(vs == FLOOR):
        return OrderEstimate(0.0, math.log(FLOOR), 0.0, win, True, True)
    lx, ly = np.log(ss), np.log(vs)
    mx, my = lx.mean(), ly.mean()
    dx, dy = lx - mx, ly - my
    slope = float(np.dot(dx, dy) / np.dot(dx, dx))
    intercept = float(my - slope * mx)
    sst = float(np.dot(dy, dy))
    ssr = float(np.sum((dy - slope * dx) ** 2))
    r2 = 1.0 if sst == 0 else min(1.0, max(0.0, 1.0 - ssr / sst))
    return OrderEstimate(slope, intercept, r2, win, floored, False)


# -- per-arc ratio analysis ----------------------------------------------------

@dataclass(frozen=True)
class ArcRatio:
    """Order of a condition ratio along one arc."""

    arc_id: int
    estimate: OrderEstimate | None
    terminal: float
    max_ratio: float
    unbounded: bool = False
    identically_zero: bool = False
    indeterminate: bool = False

    @property
    def slope(self) -> float:
        if self.unbounded:
            return -math.inf
        if self.identically_zero:
            return math.inf
        return self.estimate.slope if self.estimate else math.nan

    def violates(self, slope_min: float = SLOPE_MIN) -> bool:
        return not self.indeterminate and (self.unbounded or self.slope <= -slope_min)

    def tends_to_zero(self, slope_min: float = SLOPE_MIN, zero_level: float = ZERO_LEVEL) -> bool:
        if self.indeterminate or self.unbounded:
            return False
        return self.identically_zero or (self.slope >= slope_min and self.terminal <= zero_level)

    def to_json(self) -> dict:
        return {
            "arc": self.arc_id,
            "estimate": None if self.estimate is None else self.estimate.to_json(),
            "terminal_ratio": self.terminal,
            "max_ratio": self.max_ratio,
            "unbounded": self.unbounded,
            "identically_zero": self.identically_zero,
            "indeterminate": self.indeterminate,
        }


def ratio_profile(s: np.ndarray, num: np.ndarray, den: np.ndarray, window: int, arc_id: int = 0) -> ArcRatio:
    """Classify the samples num/den along a grid ordered by decreasing s."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, np.nan))
    r = np.where(np.isnan(num) | np.isnan(den), np.nan, r)
    rw = r[-window:]
    finite = np.isfinite(rw)
    if np.any(np.isposinf(rw)):
        return ArcRatio(arc_id, None, math.inf, math.inf, unbounded=True)
    if finite.sum() < 8:
        return ArcRatio(arc_id, None, math.nan, math.nan, indeterminate=True)
    keep = np.isfinite(r)
    fin = r[keep]
    if np.all(rw[finite] == 0):
        return ArcRatio(arc_id, None, 0.0, float(fin.max()), identically_zero=True)
    est = estimate_order(list(zip(s[keep], fin)), window=window)
    return ArcRatio(arc_id, est, float(fin[-1]), float(fin.max()))


def _ratio_samples(fam: GermFamily, kind: ConditionKind, arc: Arc, s: np.ndarray):
    X, T = arc.points(fam, s)
    return condition_values_many(fam, kind, X, T)


def arc_ratio(fam: GermFamily, kind, arc: Arc, grid: SGrid = SGrid()) -> ArcRatio:
    kind = ConditionKind.parse(kind)
    s = grid.values()
    num, den = _ratio_samples(fam, kind, arc, s)
    return ratio_profile(s, num, den, grid.window, arc.arc_id)


@dataclass
class ConditionVerdict:
    kind: ConditionKind
    verdict: Verdict
    arcs: list[ArcRatio]
    constant: float | None = None
    worst_arc: int | None = None
    grid: SGrid = dc_field(default_factory=SGrid)
    seed: int | None = None
    slope_min: float = SLOPE_MIN

    @property
    def estimates(self) -> list[OrderEstimate | None]:
        return [a.estimate for a in self.arcs]

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "verdict": self.verdict.value,
            "fitted_constant": self.constant,
            "worst_arc": self.worst_arc,
            "slope_min": self.slope_min,
            "seed": self.seed,
            "grid": self.grid.to_json(),
            "arcs": [a.to_json() for a in self.arcs],
            "note": "numerical evidence along sampled arcs, not a proof",
        }


def aggregate(kind: ConditionKind, results: list[ArcRatio], grid: SGrid, seed=None,
              slope_min: float = SLOPE_MIN, zero_level: float = ZERO_LEVEL) -> ConditionVerdict:
    results = sorted(results, key=lambda a: a.arc_id)
    usable = [a for a in results if not a.indeterminate]
    if not usable:
        return ConditionVerdict(kind, Verdict.INDETERMINATE, results, grid=grid, seed=seed, slope_min=slope_min)
    worst = min(usable, key=lambda a: (a.slope, a.arc_id))
    if any(a.violates(slope_min) for a in usable):
        verdict = Verdict.DIVERGES
        constant = None
    elif all(a.tends_to_zero(slope_min, zero_level) for a in usable):
        verdict = Verdict.TENDS_TO_ZERO
        constant = None
    else:
        verdict = Verdict.BOUNDED_RATIO
        constant = 1.05 * max(a.max_ratio for a in usable)
    return ConditionVerdict(kind, verdict, results, constant, worst.arc_id, grid, seed, slope_min)


def check_condition(fam: GermFamily, kind, arcs: Sequence[Arc], grid: SGrid = SGrid(),
                    slope_min: float = SLOPE_MIN, zero_level: float = ZERO_LEVEL, seed=None) -> ConditionVerdict:
    """Fit the order of the condition ratio on every arc and aggregate."""
    kind = ConditionKind.parse(kind)
    if not arcs:
        raise InputError("check_condition needs at least one arc")
    if kind in ZERO_SET_KINDS and not all(a.lifted for a in arcs):
        raise InputError(f"{kind.value} is stated on F = 0; use lifted arcs")
    if kind is ConditionKind.C3_1_Malgrange:
        raise InputError("use infinity.malgrange_check for the Malgrange condition")
    results = parallel_map(lambda a: arc_ratio(fam, kind, a, grid), arcs)
    return aggregate(kind, results, grid, seed, slope_min, zero_level)


# -- arc suites ----------------------------------------------------------------

@dataclass(frozen=True)
class ArcSuiteSpec:
    count: int = 64
    max_degree: int = 3
    target: Target = Target.ORIGIN
    include_t: bool = True
    t_limit: str = "zero"          # lifted arcs: "zero" (t -> 0) or "bounded"
    correction_prob: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        if self.count < 1:
            raise InputError("arc count must be at least 1")
        if not 1 <= self.max_degree <= MAX_EXPONENT:
            raise InputError(f"max_degree must lie in [1, {MAX_EXPONENT}]")
        if self.t_limit not in ("zero", "bounded"):
            raise InputError("t_limit must be 'zero' or 'bounded'")


def _draw_coef(rng, cplx: bool) -> complex:
    while True:
        c = complex(rng.normal(), rng.normal()) if cplx else complex(rng.normal(), 0.0)
        if abs(c) > 0.1:
            return c


def _draw_series(rng, lead: int, cplx: bool, correction_prob: float) -> dict:
    terms = {lead: _draw_coef(rng, cplx)}
    if rng.random() < correction_prob:
        e = lead + int(rng.integers(1, 4))
        if e <= MAX_EXPONENT:
            terms[e] = _draw_coef(rng, cplx)
    return terms


def _limit_ok(T: np.ndarray, s: np.ndarray, window: int, mode: str) -> bool:
    a = np.abs(T)
    if np.any(~np.isfinite(a[-window:])):
        return False
    if np.all(a[-window:] == 0):
        return True
    est = estimate_order(list(zip(s, np.where(np.isfinite(a), a, 0.0))), window)
    if mode == "zero":
        return est.slope >= SLOPE_MIN and a[-1] <= ZERO_LEVEL
    return est.slope > -SLOPE_MIN


def escapes(X: np.ndarray, s: np.ndarray, window: int, slope_min: float = SLOPE_MIN) -> bool:
    """True when |x| grows like a negative power of s over the fit window."""
    norms = np.linalg.norm(X[-window:], axis=1)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0):
        return False
    return estimate_order(list(zip(s[-window:], norms)), window).slope <= -slope_min


def lifted_limit_ok(fam: GermFamily, arc: Arc, grid: SGrid, mode: str = "zero") -> bool:
    """Whether the lifted t(s) tends to 0 (``mode='zero'``) or stays bounded."""
    s = grid.values()
    _, T = arc.points(fam, s)
    return _limit_ok(T, s, grid.window, mode)


def _g_identically_zero(fam: GermFamily, arc: Arc, s: np.ndarray) -> bool:
    X = arc.x_at(s).astype(fam.dtype)
    gv = np.abs(fam.g.evaluate_many(X))
    return bool(np.all(gv <= 1e-12 * fam.g.magnitude_many(X)))


def random_arc_suite(fam: GermFamily, spec: ArcSuiteSpec = ArcSuiteSpec(), seed: int = 0,
                     grid: SGrid = SGrid()) -> list[Arc]:
    """Deterministic suite of random arcs aimed at the requested target."""
    rng = np.random.default_rng(seed)
    cplx = fam.field is Field.COMPLEX
    n = fam.nvars
    s = grid.values()
    arcs: list[Arc] = []
    attempts = 0
    while len(arcs) < spec.count:
        attempts += 1
        if attempts > 10 * spec.count:
            raise InputError(f"could only build {len(arcs)} of {spec.count} arcs in {10 * spec.count} draws")
        if spec.target is Target.INFINITY:
            leads = rng.integers(-spec.max_degree, spec.max_degree + 1, size=n)
            if leads.min() >= 0:
                leads[int(rng.integers(n))] = -int(rng.integers(1, spec.max_degree + 1))
        else:
            leads = rng.integers(1, spec.max_degree + 1, size=n)
        coords = tuple(_draw_series(rng, int(k), cplx, spec.correction_prob) for k in leads)
        t = None
        lifted = spec.target is Target.ZERO_SET_LIFTED
        if spec.target is Target.ORIGIN and spec.include_t and rng.random() >= 0.1:
            t = _draw_series(rng, int(rng.integers(1, spec.max_degree + 1)), cplx, spec.correction_prob)
        try:
            arc = Arc(x=coords, t=t, lifted=lifted, complex_valued=cplx, arc_id=len(arcs))
        except InputError:
            continue
        # Malgrange probes carry no g, so only finite targets need g != 0
        if spec.target is not Target.INFINITY and _g_identically_zero(fam, arc, s):
            continue
        if lifted and not lifted_limit_ok(fam, arc, grid, spec.t_limit):
            continue
        arcs.append(arc)
    return arcs


# -- Lojasiewicz exponent --------------------------------------------------------

@dataclass(frozen=True)
class ExponentEstimate:
    alpha: float
    residual: float
    reliable: bool
    per_arc: tuple = ()

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "residual": self.residual, "reliable": self.reliable,
                "per_arc": [list(p) for p in self.per_arc]}


def alpha_from_orders(order_g: float, order_q: float) -> float:
    """Largest alpha with |g| <= |g|^alpha q when |g| ~ s^order_g and q ~ s^order_q."""
    return 1.0 - order_q / order_g


def estimate_lojasiewicz_exponent(fam: GermFamily, arcs: Sequence[Arc], grid: SGrid = SGrid()) -> ExponentEstimate:
    """Exponent in |g| <= |g|^alpha inf_eta |eta grad F + grad g| along lifted arcs."""
    s = grid.values()
    per_arc = []
    residual = 0.0
    for arc in arcs:
        if not arc.lifted:
            raise InputError("exponent estimation runs on lifted (zero-set) arcs")
        X, T = arc.points(fam, s)
        if np.any(~np.isfinite(T)):
            continue
        gs = np.empty(len(s))
        qs = np.empty(len(s))
        for k in range(len(s)):
            j = fam.jet(X[k])
            gs[k] = abs(j.g)
            qs[k] = line_distance(j.grad_g_ext(), j.grad_F(T[k])).value
        eg = estimate_order(list(zip(s, gs)), grid.window)
        eq = estimate_order(list(zip(s, qs)), grid.window)
        if eg.indeterminate or eg.slope <= SLOPE_MIN or eq.indeterminate:
            continue
        a = alpha_from_orders(eg.slope, eq.slope)
        per_arc.append((arc.arc_id, eg.slope, eq.slope, a))
        residual = max(residual, 1.0 - eg.r2, 1.0 - eq.r2)
    if not per_arc:
        raise InputError("no arc with g -> 0 and a well-defined lift")
    raw = min(p[3] for p in per_arc)
    reliable = 0.0 < raw <= 1.0 + 1e-9
    alpha = min(1.0, max(raw, np.nextafter(0.0, 1.0)))
    return ExponentEstimate(float(alpha), float(residual), bool(reliable), tuple(per_arc))


# -- violating arc search --------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 20
    iterations: int = 400
    seed: int = 0
    max_exponent: int = 3
    draws: int = 2


def _snap(c: complex, tol: float = 1e-6, max_den: int = 12) -> complex:
    def one(v):
        if v == 0:
            return 0.0
        fr = Fraction(v).limit_denominator(max_den)
        return float(fr) if abs(float(fr) - v) <= tol * max(1.0, abs(v)) else v
    return complex(one(c.real), one(c.imag))


class _ArcSearch:
    """Beam over exponent patterns, then Nelder-Mead over the coefficients."""

    def __init__(self, fam: GermFamily, kind: ConditionKind, cfg: SearchConfig, grid: SGrid, t0=None,
                 slope_min: float = SLOPE_MIN):
        self.fam = fam
        self.kind = kind
        self.cfg = cfg
        self.grid = grid
        self.t0 = t0
        self.slope_min = slope_min
        self.cplx = fam.field is Field.COMPLEX
        self.n = fam.nvars
        if kind is ConditionKind.C3_1_Malgrange:
            self.target = Target.INFINITY
        elif kind in ZERO_SET_KINDS:
            self.target = Target.ZERO_SET_LIFTED
        else:
            self.target = Target.ORIGIN
        self.lifted = self.target is Target.ZERO_SET_LIFTED
        self.t_mode = "bounded" if kind is ConditionKind.C3_2 else "zero"
        self.ncoords = self.n + (1 if self.target is Target.ORIGIN else 0)
        s = grid.values()
        self.s_fit = s[-grid.window:]
        # validation on a shifted grid so tuned cancellations at the fit samples do not count
        self.check_grid = replace(grid, s0=grid.s0 * 0.83)

    def patterns(self, rng):
        m = self.cfg.max_exponent
        if self.target is Target.INFINITY:
            rng_exps = range(-m, m + 1)
            pats = [p for p in itertools.product(rng_exps, repeat=self.ncoords) if min(p) < 0]
        else:
            pats = list(itertools.product(range(1, m + 1), repeat=self.ncoords))
        if len(pats) > 400:
            idx = rng.choice(len(pats), size=400, replace=False)
            pats = [pats[i] for i in sorted(idx)]
        return pats

    def lead_index(self, pattern) -> int:
        if self.target is Target.INFINITY:
            return min(range(len(pattern)), key=lambda i: pattern[i])
        for i, k in enumerate(pattern):
            if k != 0:
                return i
        return 0

    def build(self, pattern, norm_coef, theta) -> Arc:
        coefs = self._pairs(theta)
        lead = self.lead_index(pattern)
        it = iter(coefs)
        series = []
        for i, k in enumerate(pattern):
            c_lead = norm_coef if i == lead else next(it)
            c_corr = next(it)
            terms = {int(k): c_lead}
            if k + 1 <= MAX_EXPONENT:
                terms[int(k) + 1] = terms.get(int(k) + 1, 0j) + c_corr
            series.append(terms)
        if self.target is Target.ORIGIN:
            x, t = tuple(series[:-1]), series[-1]
        else:
            x, t = tuple(series), None
        return Arc(x=x, t=t, lifted=self.lifted, complex_valued=self.cplx)

    def nparams(self) -> int:
        per = 2 if self.cplx else 1
        return per * (2 * self.ncoords - 1)

    def objective(self, pattern, norm_coef, theta) -> float:
        try:
            arc = self.build(pattern, norm_coef, theta)
            X, T = arc.points(self.fam, self.s_fit)
        except Exception:
            return 1e6
        if self.kind is ConditionKind.C3_1_Malgrange:
            return self._malgrange_objective(X)
        try:
            with np.errstate(all="ignore"):
                num, den = condition_values_many(self.fam, self.kind, X, T)
        except Exception:
            return 1e6
        penalty = 0.0
        if self.lifted and self.t_mode == "zero":
            at = np.abs(T[np.isfinite(T)])
            penalty = float(np.sum(np.maximum(0.0, np.log10(at + FLOOR) + 3.0)))
        with np.errstate(all="ignore"):
            logs = np.where(den > 0, np.log(np.maximum(num, FLOOR) / np.where(den > 0, den, 1.0)),
                            np.where(num > 0, 50.0, -50.0))
            logs = np.where(num <= 0, -50.0, logs)
        logs = np.where(np.isnan(num) | np.isnan(den), -50.0, np.clip(logs, -50.0, 50.0))
        return float(-logs.mean() + 5.0 * penalty / len(self.s_fit))

    def _malgrange_objective(self, X) -> float:
        f = self.fam.f
        with np.errstate(all="ignore"):
            dev = np.abs(f.evaluate_many(X) - self.t0)
            norms = np.linalg.norm(X, axis=1)
            grads = np.stack([d.evaluate_many(X) if not d.is_zero else np.zeros(len(X)) for d in f.partials], axis=1)
            q = norms * np.linalg.norm(grads, axis=1)
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(dev))):
                return 1e6
            logs = np.clip(-np.log(np.maximum(q, FLOOR)), -50.0, 50.0)
            penalty = np.maximum(0.0, np.log10(dev + FLOOR) + 3.0) + np.maximum(0.0, 2.0 - np.log10(norms + FLOOR))
        return float(-logs.mean() + 5.0 * penalty.mean())

    def validate(self, arc: Arc) -> ArcRatio | None:
        grid = self.check_grid
        s = grid.values()
        try:
            if self.kind is ConditionKind.C3_1_Malgrange:
                X = arc.x_at(s).astype(self.fam.dtype)
                if not escapes(X, s, grid.window):
                    return None
                fdev = np.abs(self.fam.f.evaluate_many(X) - self.t0)
                if not _limit_ok(fdev, s, grid.window, "zero"):
                    return None
                num = np.ones(len(s))
                den = np.array([condition_point_values(self.fam, self.kind, x)[1] for x in X])
            else:
                if self.lifted and not lifted_limit_ok(self.fam, arc, grid, self.t_mode):
                    return None
                if self.target is Target.ORIGIN and arc.t is not None:
                    T = np.abs(arc.t_at(s))
                    if not _limit_ok(T, s, grid.window, "zero"):
                        return None
                num, den = _ratio_samples(self.fam, self.kind, arc, s)
        except Exception:
            return None
        prof = ratio_profile(s, num, den, grid.window, arc.arc_id)
        return prof if prof.violates(self.slope_min) else None

    def run(self) -> Arc | None:
        rng = np.random.default_rng(self.cfg.seed)
        norms = [1.0, -1.0] if not self.cplx else [1.0, 1j, -1.0, -1j]
        cands = []
        for pat in self.patterns(rng):
            for nc in norms:
                draws = [rng.normal(size=self.nparams()) for _ in range(self.cfg.draws)]
                scored = sorted(((self.objective(pat, nc, th), k) for k, th in enumerate(draws)))
                cands.append((scored[0][0], pat, nc, draws[scored[0][1]]))
        # random starts rarely land in the narrow cancellation wells, so every
        # pattern gets a short local pass before the beam is cut
        short = max(20, self.cfg.iterations // 10)
        cands = [(r.fun, pat, nc, r.x) for _, pat, nc, th in cands
                 for r in [self._refine(pat, nc, th, short)]]
        cands.sort(key=lambda c: (c[0], sum(abs(k) for k in c[1])))
        best = None
        for _, pat, nc, theta in cands[: self.cfg.restarts]:
            res = self._refine(pat, nc, theta, self.cfg.iterations)
            for arc in self.variants(pat, nc, res.x):
                prof = self.validate(arc)
                if prof is not None:
                    score = prof.slope
                    if best is None or score < best[0]:
                        best = (score, arc)
                    break
            if best is not None and best[0] == -math.inf:
                break
        return None if best is None else best[1]

    def _refine(self, pat, nc, theta, iters):
        return optimize.minimize(lambda th: self.objective(pat, nc, th), theta, method="Nelder-Mead",
                                 options={"maxiter": iters, "xatol": 1e-13, "fatol": 1e-13, "adaptive": True})

    def variants(self, pattern, nc, theta):
        per = 2 if self.cplx else 1
        snapped = np.array([v for z in self._pairs(theta) for v in self._unpair(_snap(z))])
        no_corr = snapped.copy()
        # zero every correction coefficient (odd slots in the coefficient order)
        lead = self.lead_index(pattern)
        slot = 0
        for i in range(self.ncoords):
            if i != lead:
                slot += 1
            no_corr[slot * per:(slot + 1) * per] = 0.0
            slot += 1
        out = []
        for th in (no_corr, snapped, np.asarray(theta)):
            try:
                out.append(self.build(pattern, nc, th))
            except InputError:
                continue
        return out

    def _pairs(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.cplx:
            return [complex(theta[2 * k], theta[2 * k + 1]) for k in range(len(theta) // 2)]
        return [complex(v, 0.0) for v in theta]

    def _unpair(self, z: complex):
        return [z.real, z.imag] if self.cplx else [z.real]


def find_violating_arc(fam: GermFamily, kind, search: SearchConfig = SearchConfig(), grid: SGrid = SGrid(),
                       t0=None, slope_min: float = SLOPE_MIN) -> Arc | None:
    """Search for an arc along which the condition ratio is unbounded.

    Returns None when the search finds nothing, which is not a proof that the
    condition holds.  For the Malgrange kind ``t0`` is the fibre value and
    only arcs with f -> t0 and |x| -> infinity qualify.
    """
    kind = ConditionKind.parse(kind)
    if kind is ConditionKind.C3_1_Malgrange and t0 is None:
        raise InputError("the Malgrange search needs a fibre value t0")
    return _ArcSearch(fam, kind, search, grid, t0, slope_min).run()
