"""Behaviour of complex polynomials at infinity.

A polynomial f of degree d is studied through the family of projective
closures of its fibres.  In the chart y0 = 1/x_c, y_i = x_i/x_c of the
hyperplane at infinity that family is

    F(y, t) = f~(y0, y', 1) - t y0^d,

which is f_loc + t g_fam with g_fam = -y0^d, so the finite-distance machinery
applies unchanged.  Only the gradient form of the vanishing-cycle condition
is implemented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .arcs import (
    SLOPE_MIN,
    ZERO_LEVEL,
    Arc,
    SearchConfig,
    SGrid,
    _limit_ok,
    escapes,
    estimate_order,
    find_violating_arc,
    ratio_profile,
)
from .conditions import ConditionKind, GermFamily, condition_point_values
from .errors import InputError
from .poly_core import Field, Polynomial, chart_at_infinity, raw_partials


@dataclass(frozen=True)
class InfinityFamily:
    base: Polynomial
    d: int
    chart_index: int
    shift: tuple
    local_f: Polynomial      # f~(y0, y', 1) in n variables
    local_g: Polynomial      # y0^d

    @property
    def local_F(self) -> Polynomial:
        """f~(y, 1) - t y0^d in the n + 1 variables (y0, ..., y_{n-1}, t)."""
        n = self.base.nvars
        t = Polynomial.variable(n, n + 1)
        return self.local_f.insert_variables(n) - t * self.local_g.insert_variables(n)

    @property
    def family(self) -> GermFamily:
        return GermFamily(self.local_f, -self.local_g, Field.COMPLEX, germ=False, at_infinity=True)

    def affine_point(self, y) -> np.ndarray:
        """The affine x corresponding to chart coordinates y (y0 != 0)."""
        y = np.asarray(y, dtype=complex)
        n = self.base.nvars
        others = [i for i in range(n) if i != self.chart_index]
        x = np.empty(n, dtype=complex)
        x[self.chart_index] = 1.0 / y[0]
        for j, i in enumerate(others):
            x[i] = (y[j + 1] + self.shift[j]) / y[0]
        return x


def build_infinity_family(f: Polynomial, chart_index: int | None = None, shift: Sequence | None = None) -> InfinityFamily:
    """Local family at the point of the hyperplane at infinity in direction x_c.

    ``shift`` recentres the chart at (0 : a_1 : ... : 1); covering all of the
    hyperplane at infinity means looping over charts and shifts.
    """
    n = f.nvars
    if f.degree < 1:
        raise InputError("the infinity family needs a nonconstant polynomial")
    c = n - 1 if chart_index is None else int(chart_index)
    if not 0 <= c < n:
        raise InputError(f"chart index {c} out of range for {n} variables")
    shift = tuple(complex(a) for a in (shift or [0.0] * (n - 1)))
    if len(shift) != n - 1:
        raise InputError(f"shift needs {n - 1} entries")
    order = [i for i in range(n) if i != c] + [c]
    local = chart_at_infinity(f.permute(order))
    if any(shift):
        local = local.shift((0.0,) + shift)
    d = f.degree
    g = Polynomial.monomial((d,) + (0,) * (n - 1), 1.0)
    return InfinityFamily(f, d, c, shift, local, g)


@dataclass
class MalgrangeVerdict:
    t0: complex
    holds: bool | None          # None: no probed arc had f -> t0
    delta_estimate: float
    witness: Arc | None = None
    orders: list = dc_field(default_factory=list)
    note: str = "evidence along probed arcs, not a proof"

    def to_json(self) -> dict:
        t0 = complex(self.t0)
        return {
            "t0": [t0.real, t0.imag],
            "holds": self.holds,
            "delta_estimate": self.delta_estimate,
            "witness": None if self.witness is None else self.witness.to_json(),
            "orders": self.orders,
            "note": self.note,
        }


def malgrange_quantity(f: Polynomial, x) -> float:
    """|x| |grad f(x)| with the plain affine gradient."""
    x = np.asarray(x, dtype=complex)
    return float(np.linalg.norm(x) * np.linalg.norm(raw_partials(f, x)))


def _arc_malgrange(f: Polynomial, t0: complex, arc: Arc, grid: SGrid):
    """(passes the f -> t0 filter, order estimate of |x||grad f|, samples)."""
    s = grid.values()
    X = arc.x_at(s).astype(complex)
    fdev = np.abs(f.evaluate_many(X) - t0)
    if not np.all(np.isfinite(fdev)) or not _limit_ok(fdev, s, grid.window, "zero"):
        return False, None, None
    q = np.array([malgrange_quantity(f, x) for x in X])
    if np.all(q[-grid.window:] == 0):
        return True, None, q
    return True, estimate_order(list(zip(s, q)), grid.window), q


def malgrange_check(f: Polynomial, t0, arcs: Sequence[Arc], grid: SGrid = SGrid(),
                    slope_min: float = SLOPE_MIN, zero_level: float = ZERO_LEVEL) -> MalgrangeVerdict:
    """Probe |x||grad f| >= delta along arcs with |x| -> infinity and f -> t0."""
    t0 = complex(t0)
    s = grid.values()
    witness = None
    best = None
    delta_est = math.inf
    orders = []
    for arc in arcs:
        if not escapes(arc.x_at(s).astype(complex), s, grid.window):
            continue
        ok, est, q = _arc_malgrange(f, t0, arc, grid)
        if not ok:
            continue
        delta_est = min(delta_est, float(q.min()))
        if est is None:
            slope, terminal = math.inf, 0.0
        else:
            slope, terminal = est.slope, float(q[-1])
        orders.append({"arc": arc.arc_id, "order": slope, "terminal": terminal})
        if slope >= slope_min and terminal <= zero_level:
            if best is None or slope > best:
                best, witness = slope, arc
    if not orders:
        return MalgrangeVerdict(t0, None, math.nan, None, [], "no probed arc satisfies f -> t0")
    return MalgrangeVerdict(t0, witness is None, delta_est, witness, orders)


def atypical_scan(f: Polynomial, t_grid: Sequence, search: SearchConfig = SearchConfig(),
                  grid: SGrid = SGrid()) -> list[tuple[complex, MalgrangeVerdict]]:
    """Search each t0 for a Malgrange-violating arc; failures come first."""
    fam = GermFamily(f, Polynomial.zero(f.nvars), Field.COMPLEX, germ=False)
    out = []
    for t0 in t_grid:
        t0 = complex(t0)
        arc = find_violating_arc(fam, ConditionKind.C3_1_Malgrange, search, grid, t0=t0)
        if arc is not None:
            verdict = malgrange_check(f, t0, [arc], grid)
        else:
            verdict = MalgrangeVerdict(t0, True, math.nan, None, [],
                                       "no violating arc found by the bounded search; evidence, not proof")
        out.append((t0, verdict))
    order = sorted(range(len(out)), key=lambda k: (out[k][1].holds is not False, k))
    return [out[k] for k in order]


# -- transverse partials against the full gradient ------------------------------------

@dataclass
class Check3233Report:
    chart_index: int
    arcs: list
    retained: int
    agreement: float | None
    discarded: dict

    @property
    def all_agree(self) -> bool:
        return all(a["agree"] for a in self.arcs if a["retained"])

    def to_json(self) -> dict:
        return {
            "chart_index": self.chart_index,
            "retained": self.retained,
            "agreement": self.agreement,
            "discarded": self.discarded,
            "arcs": self.arcs,
            "note": ("the vanishing-cycle side is represented only by its gradient form; "
                     "per-arc agreement is evidence, not the equivalence theorem"),
        }


def check_32_33(f: Polynomial, chart_index: int | None, arcs: Sequence[Arc], grid: SGrid = SGrid(),
                slope_min: float = SLOPE_MIN, shift=None) -> Check3233Report:
    """Compare boundedness of the two ratios along arcs lifted to X.

    Arcs are taken in chart coordinates y -> 0 and lifted with
    t = f~(y, 1) / y0^d.  Arcs with y0 = 0 identically cannot be lifted, and
    arcs whose lifted t is unbounded do not approach any point of X over a
    finite value; both are discarded.
    """
    inf = build_infinity_family(f, chart_index, shift)
    fam = inf.family
    s = grid.values()
    rows = []
    discarded = {"y0_zero": 0, "t_unbounded": 0}
    for arc in arcs:
        lifted = Arc(x=arc.x, lifted=True, complex_valued=True, arc_id=arc.arc_id)
        X, T = lifted.points(fam, s)
        if np.any(~np.isfinite(T[-grid.window:])):
            discarded["y0_zero"] += 1
            rows.append({"arc": arc.arc_id, "retained": False, "reason": "y0_zero", "agree": True})
            continue
        if not _limit_ok(T, s, grid.window, "bounded"):
            discarded["t_unbounded"] += 1
            rows.append({"arc": arc.arc_id, "retained": False, "reason": "t_unbounded", "agree": True})
            continue
        profs = {}
        for kind in (ConditionKind.C3_2, ConditionKind.C3_3):
            num = np.empty(len(s))
            den = np.empty(len(s))
            for k in range(len(s)):
                if not np.isfinite(T[k]):
                    num[k] = den[k] = np.nan
                else:
                    num[k], den[k] = condition_point_values(fam, kind, (X[k], T[k]))
            profs[kind] = ratio_profile(s, num, den, grid.window, arc.arc_id)
        b32 = not profs[ConditionKind.C3_2].violates(slope_min)
        b33 = not profs[ConditionKind.C3_3].violates(slope_min)
        rows.append({
            "arc": arc.arc_id,
            "retained": True,
            "t_terminal": [complex(T[-1]).real, complex(T[-1]).imag],
            "bounded_3_2": b32,
            "bounded_3_3": b33,
            "slope_3_2": profs[ConditionKind.C3_2].slope,
            "slope_3_3": profs[ConditionKind.C3_3].slope,
            "agree": b32 == b33,
        })
    kept = [r for r in rows if r["retained"]]
    agreement = None if not kept else sum(r["agree"] for r in kept) / len(kept)
    return Check3233Report(inf.chart_index, rows, len(kept), agreement, discarded)
