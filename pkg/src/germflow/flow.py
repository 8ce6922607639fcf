"""Flows of the tangent fields and the diagnostics built on them.

Every field has t-component 1, so t itself is the flow parameter.  For complex
families t runs along the straight segment from t0 to t1 and x moves with
u * field_x, u the unit direction of the segment; the fields are complex-linear
in the t direction, so tangency is preserved.

The integrator is a Dormand-Prince 5(4) pair with local extrapolation.  The
step controller measures the error per unit step, which keeps the global
error roughly proportional to the tolerance (the drift-halving check relies
on that).
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .conditions import GermFamily, _delta, norm
from .errors import InputError, SingularLocusError
from .fields import DELTA_SING, FieldKind, PartitionParams, _v_from_jet, _w_from_jet, _weights
from ._parallel import parallel_map


BLOWUP_FACTOR = 100.0


class Status(str, enum.Enum):
    Completed = "Completed"
    HitSingularLocus = "HitSingularLocus"
    StepUnderflow = "StepUnderflow"
    MaxSteps = "MaxSteps"


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_steps: int = 100_000
    min_step: float = 1e-12
    box_radius: float = 0.5
    delta_sing: float = DELTA_SING
    partition: PartitionParams = PartitionParams()

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InputError("integrator tolerances must be positive")
        if self.max_steps < 1 or self.min_step <= 0 or self.box_radius <= 0:
            raise InputError("max_steps, min_step and box_radius must be positive")


@dataclass
class Trajectory:
    kind: FieldKind
    ts: list
    xs: list
    status: Status
    F_drift: float
    g_drift: float | None
    steps: int = 0
    rejected: int = 0
    message: str = ""
    payload: dict = dc_field(default_factory=dict)

    @property
    def samples(self) -> list[tuple]:
        return list(zip(self.ts, self.xs))

    @property
    def completed(self) -> bool:
        return self.status is Status.Completed

    @property
    def end(self) -> tuple:
        return self.xs[-1], self.ts[-1]

    def to_csv(self, fam: GermFamily) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = fam.nvars
        cplx = np.iscomplexobj(self.xs[0]) or isinstance(self.ts[0], complex)
        if cplx:
            head = ["t_param_re", "t_param_im"] + [c for i in range(n) for c in (f"x{i + 1}_re", f"x{i + 1}_im")]
        else:
            head = ["t_param"] + [f"x{i + 1}" for i in range(n)]
        w.writerow(head + ["abs_F", "abs_g"])
        for t, x in zip(self.ts, self.xs):
            j = fam.jet(x)
            if cplx:
                row = [repr(complex(t).real), repr(complex(t).imag)]
                row += [repr(v) for z in x for v in (complex(z).real, complex(z).imag)]
            else:
                row = [repr(float(t))] + [repr(float(v)) for v in x]
            row += [repr(float(abs(j.f + t * j.g))), repr(float(abs(j.g)))]
            w.writerow(row)
        return buf.getvalue()

    def summary(self) -> dict:
        x, t = self.end
        return {
            "kind": self.kind.value,
            "status": self.status.value,
            "F_drift": self.F_drift,
            "g_drift": self.g_drift,
            "steps": self.steps,
            "rejected": self.rejected,
            "samples": len(self.ts),
            "t_end": _num(t),
            "x_end": [_num(v) for v in x],
            "message": self.message,
        }


def _num(v):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class _Rhs:
    """x' along the t segment, with the early singular-locus guard."""

    def __init__(self, fam: GermFamily, kind: FieldKind, cfg: IntegratorConfig, t0, t1):
        self.fam, self.kind, self.cfg = fam, kind, cfg
        self.cplx = fam.dtype is complex
        self.t0 = t0
        span = t1 - t0
        self.length = abs(span)
        self.u = span / self.length if self.length > 0 else 1.0
        if not self.cplx:
            self.u = float(np.sign(span)) if self.length > 0 else 1.0
        self.guard = 10.0 * cfg.delta_sing

    def t_at(self, tau):
        return self.t0 + self.u * tau

    def unpack(self, y):
        return y[0::2] + 1j * y[1::2] if self.cplx else y

    def pack(self, x):
        if self.cplx:
            out = np.empty(2 * len(x))
            out[0::2], out[1::2] = x.real, x.imag
            return out
        return np.asarray(x, dtype=float)

    def __call__(self, tau, y):
        x = self.unpack(y)
        t = self.t_at(tau)
        j = self.fam.jet(x)
        g_zero = j.g_is_zero
        r1, r2 = (1.0, 0.0) if self.kind is FieldKind.V_paper else (0.0, 1.0)
        if self.kind is FieldKind.Glued:
            r1, r2 = _weights(abs(j.f + t * j.g), self.cfg.partition)
        vx = np.zeros(len(x), dtype=self.fam.dtype)
        if r1 > 0:
            if not g_zero and _delta(j) <= self.guard:
                raise SingularLocusError("Gram determinant below the step guard", {"delta": _delta(j), "t": t})
            vx = vx + r1 * _v_from_jet(j, self.cfg.delta_sing)
        if r2 > 0:
            nF = norm(j.grad_x_F(t))
            if not g_zero and nF <= self.guard:
                raise SingularLocusError("|grad_x F| below the step guard", {"abs_grad_x_F": nF, "t": t})
            vx = vx + r2 * _w_from_jet(j, t, self.cfg.delta_sing)
        return self.pack(self.u * vx)


def _dp_step(rhs, tau, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(rhs(tau + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[6]


def integrate(fam: GermFamily, kind, start, t_target, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Flow ``start = (x, t)`` along the chosen field until t reaches ``t_target``."""
    kind = FieldKind.parse(kind)
    x0 = fam.point(start[0])
    t0 = start[1]
    if fam.dtype is float:
        t0, t_target = float(np.real(t0)), float(np.real(t_target))
    else:
        t0, t_target = complex(t0), complex(t_target)
    rhs = _Rhs(fam, kind, cfg, t0, t_target)
    j0 = fam.jet(x0)
    F0, g0 = j0.f + t0 * j0.g, j0.g
    track_g = kind is FieldKind.V_paper
    ts, xs = [t0], [x0.copy()]
    F_dev, g_dev = 0.0, 0.0

    def finish(status, steps, rejected, msg="", payload=None):
        return Trajectory(kind, ts, xs, status, float(F_dev / (1.0 + abs(F0))),
                          float(g_dev / (1.0 + abs(g0))) if track_g else None,
                          steps, rejected, msg, payload or {})

    L = rhs.length
    if L == 0:
        return finish(Status.Completed, 0, 0)
    y = rhs.pack(x0)
    tau = 0.0
    try:
        k1 = rhs(0.0, y)
    except SingularLocusError as exc:
        return finish(Status.HitSingularLocus, 0, 0, str(exc), exc.payload)
    k1_start = float(np.max(np.abs(k1)))
    h = min(L, 0.01 * L, 0.1 / (1.0 + float(np.max(np.abs(k1)))))
    h = max(h, cfg.min_step)
    steps = rejected = 0
    while tau < L:
        if steps + rejected >= cfg.max_steps:
            return finish(Status.MaxSteps, steps, rejected, "step budget exhausted")
        last = tau + h >= L * (1 - 1e-15)
        if last:
            h = L - tau
        try:
            y_new, err, k7 = _dp_step(rhs, tau, y, h, k1)
        except SingularLocusError as exc:
            if h / 4 < cfg.min_step:
                return finish(Status.HitSingularLocus, steps, rejected, str(exc), exc.payload)
            h /= 4
            rejected += 1
            continue
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        # error per unit step
        en = float(np.max(np.abs(err) / scale)) / max(h, 1e-300) * min(1.0, L)
        if en <= 1.0 or h <= cfg.min_step:
            tau = L if last else tau + h
            y, k1 = y_new, k7
            steps += 1
            x = rhs.unpack(y)
            t = t_target if last else rhs.t_at(tau)
            ts.append(t)
            xs.append(x.copy())
            j = fam.jet(x)
            F_dev = max(F_dev, abs(j.f + t * j.g - F0))
            g_dev = max(g_dev, abs(j.g - g0))
            fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** (-1 / 4)))
            h *= fac
        else:
            rejected += 1
            h *= max(0.1, 0.9 * en ** (-1 / 4))
            if h < cfg.min_step:
                # a field that has grown by orders of magnitude is running into
                # a zero of its coefficient denominator, not merely stiff
                grow = float(np.max(np.abs(k1))) / max(k1_start, 1e-300)
                if grow >= BLOWUP_FACTOR:
                    return finish(Status.HitSingularLocus, steps, rejected,
                                  f"field grew {grow:.3g}x before the step fell below min_step",
                                  {"growth": grow, "t": rhs.t_at(tau)})
                return finish(Status.StepUnderflow, steps, rejected, f"step {h:.3e} below min_step")
    return finish(Status.Completed, steps, rejected)


def in_box(x, t, radius: float) -> bool:
    return bool(np.max(np.abs(np.asarray(x)), initial=0.0) <= radius and abs(t) <= radius)


def trivialization_map(fam: GermFamily, x_start, t0, t1, cfg: IntegratorConfig = IntegratorConfig(),
                       kind=FieldKind.Glued):
    """Transport x_start from the t0 fibre to the t1 fibre; returns (x_end, trajectory)."""
    x = fam.point(x_start)
    if not in_box(x, t0, cfg.box_radius):
        raise InputError(f"start point outside the neighbourhood box of radius {cfg.box_radius}")
    traj = integrate(fam, kind, (x, t0), t1, cfg)
    return traj.xs[-1], traj


# -- continuity of the flow ---------------------------------------------------------

@dataclass
class ContinuityEstimate:
    pairs: list            # (initial distance, max separation, |g(p1)|, status)
    table: list            # (eta, eps(eta)) with eps non-decreasing in eta
    slope: float | None
    decays: bool | None
    reliable: bool

    def to_json(self) -> dict:
        return {
            "pairs": [{"initial": a, "separation": b, "abs_g": c, "status": s} for a, b, c, s in self.pairs],
            "table": [{"eta": e, "eps": v} for e, v in self.table],
            "slope": self.slope,
            "decays": self.decays,
            "reliable": self.reliable,
            "note": "empirical modulus along sampled pairs, not a proof of continuity",
        }


def continuity_probe(fam: GermFamily, base_points: Sequence, offsets: Sequence, t_span: float,
                     cfg: IntegratorConfig = IntegratorConfig(), kind=FieldKind.V_paper,
                     t0=0.0, slope_min: float = 0.05) -> ContinuityEstimate:
    """Flow base points on {g = 0} and nearby points together and compare.

    eps(eta) is the largest (separation - initial distance)/|s| over pairs
    whose perturbed point has |g| <= eta.
    """
    kind = FieldKind.parse(kind)
    jobs = []
    for b in base_points:
        xb = fam.point(b)
        if not fam.jet(xb).g_is_zero:
            raise InputError("continuity base points must lie on g = 0")
        for off in offsets:
            jobs.append((xb, xb + np.asarray(off, dtype=fam.dtype)))
    t1 = t0 + t_span

    def run(job):
        xb, xp = job
        tb = integrate(fam, kind, (xb, t0), t1, cfg)
        tp = integrate(fam, kind, (xp, t0), t1, cfg)
        init = float(np.linalg.norm(xp - xb))
        gp = float(abs(fam.jet(xp).g))
        if not (tb.completed and tp.completed):
            return init, math.nan, gp, (tp.status if not tp.completed else tb.status).value
        # the base flow is x = const, so compare against it at the perturbed samples
        sep = max(float(np.linalg.norm(x - tb.xs[0])) for x in tp.xs)
        return init, sep, gp, Status.Completed.value

    pairs = parallel_map(run, jobs)
    good = [(a, b, c) for a, b, c, s in pairs if s == Status.Completed.value and c > 0]
    if len(good) < 3:
        return ContinuityEstimate(pairs, [], None, None, False)
    good.sort(key=lambda r: r[2])
    table = []
    running = 0.0
    for a, b, c in good:
        running = max(running, max(0.0, b - a) / abs(t_span))
        table.append((c, running))
    etas = np.array([e for e, v in table if v > 0])
    vals = np.array([v for e, v in table if v > 0])
    if len(etas) < 3 or np.ptp(np.log(etas)) == 0:
        return ContinuityEstimate(pairs, table, None, bool(table[-1][1] == 0), True)
    slope = float(np.polyfit(np.log(etas), np.log(vals), 1)[0])
    return ContinuityEstimate(pairs, table, slope, slope >= slope_min, True)


# -- Kuo control function -----------------------------------------------------------

@dataclass
class KuoControlReport:
    C: float | None
    band_ok: bool
    degenerate: bool
    arc_constant: float | None = None
    samples: int = 0

    def to_json(self) -> dict:
        return {"C": self.C, "band_ok": self.band_ok, "degenerate": self.degenerate,
                "arc_constant": self.arc_constant, "samples": self.samples}


def kuo_control_check(ts: Sequence, xs: Sequence, arc_constant: float | None = None) -> KuoControlReport:
    """Smallest C with rho0 e^{-C|s|} <= |x(s)| <= rho0 e^{C|s|} on the samples."""
    ts = list(ts)
    rho = np.array([float(np.linalg.norm(x)) for x in xs])
    if np.any(rho == 0):
        return KuoControlReport(None, False, True, arc_constant, len(ts))
    C = 0.0
    for t, r in zip(ts[1:], rho[1:]):
        ds = abs(t - ts[0])
        if ds > 0:
            C = max(C, abs(math.log(r / rho[0])) / ds)
    band = all(
        rho[0] * math.exp(-C * abs(t - ts[0])) * (1 - 1e-12) <= r <= rho[0] * math.exp(C * abs(t - ts[0])) * (1 + 1e-12)
        for t, r in zip(ts, rho)
    )
    return KuoControlReport(C, band, False, arc_constant, len(ts))


def kuo_control_from_trajectory(traj: Trajectory, arc_constant: float | None = None) -> KuoControlReport:
    if not traj.completed:
        raise InputError(f"trajectory did not complete ({traj.status.value})")
    return kuo_control_check(traj.ts, traj.xs, arc_constant)
