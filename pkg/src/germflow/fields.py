"""Vector fields tangent to the levels of F = f + t g.

All three fields have t-component exactly 1, so the flow parameter is t.

* ``V_paper``: tangent to the levels of both F and g, defined where the
  Gram determinant of (grad f, grad g) is positive.
* ``W_kuo``: tangent to the levels of F only, defined off the critical locus
  of F_t.
* ``Glued``: a partition of unity in |F| that uses the first field near
  F = 0 and the second away from it.

With conjugated gradients the scalar coefficients carry g itself, not its
conjugate; this is what makes dF and dg vanish exactly in the complex case.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .conditions import GermFamily, Jet, _delta, hermitian, norm, split_point
from .errors import InputError, SingularLocusError

DELTA_SING = 1e-10


class FieldKind(str, enum.Enum):
    V_paper = "V_paper"
    W_kuo = "W_kuo"
    Glued = "Glued"

    @classmethod
    def parse(cls, value) -> "FieldKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for k in cls:
            if k.value.lower() == key or k.value.split("_")[0].lower() == key:
                return k
        raise InputError(f"unknown field kind {value!r}")


@dataclass(frozen=True)
class PartitionParams:
    tau1: float = 0.01
    tau2: float = 0.1

    def __post_init__(self):
        if not (0 < self.tau1 < self.tau2):
            raise InputError(f"partition thresholds need 0 < tau1 < tau2, got {self.tau1}, {self.tau2}")


@dataclass(frozen=True)
class FieldVector:
    x: np.ndarray
    t: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.append(self.x, self.t)


def _payload(j: Jet, **extra) -> dict:
    out = {
        "x": [complex(v) for v in j.x],
        "delta": _delta(j),
        "abs_g": abs(j.g),
        "abs_grad_f": norm(j.grad_f),
        "abs_grad_g": norm(j.grad_g),
    }
    out.update(extra)
    return out


def _v_from_jet(j: Jet, delta_sing: float) -> np.ndarray:
    if j.g_is_zero:
        return np.zeros_like(j.grad_f)
    d = _delta(j)
    if d <= delta_sing:
        raise SingularLocusError(f"Gram determinant {d:.3e} below {delta_sing:.0e}", _payload(j))
    gf, gg = j.grad_f, j.grad_g
    a = -j.g * norm(gg) ** 2 / d
    b = j.g * hermitian(gf, gg) / d
    if j.field.value == "real":
        a, b = float(np.real(a)), float(np.real(b))
    return a * gf + b * gg


def _w_from_jet(j: Jet, t, delta_sing: float) -> np.ndarray:
    if j.g_is_zero:
        return np.zeros_like(j.grad_f)
    gF = j.grad_x_F(t)
    nF = norm(gF)
    if nF <= delta_sing:
        raise SingularLocusError(f"|grad_x F| = {nF:.3e} below {delta_sing:.0e}", _payload(j, abs_grad_x_F=nF))
    c = j.g / nF ** 2
    if j.field.value == "real":
        c = float(np.real(c))
    return -c * gF


def field_v(fam: GermFamily, p, delta_sing: float = DELTA_SING) -> FieldVector:
    x, _ = split_point(fam, p)
    return FieldVector(_v_from_jet(fam.jet(x), delta_sing))


def field_w(fam: GermFamily, p, delta_sing: float = DELTA_SING) -> FieldVector:
    x, t = split_point(fam, p)
    return FieldVector(_w_from_jet(fam.jet(x), t, delta_sing))


def smoothstep(z: float) -> float:
    z = min(1.0, max(0.0, z))
    return z * z * (3.0 - 2.0 * z)


def partition_weights(fam: GermFamily, p, params: PartitionParams = PartitionParams()) -> tuple[float, float]:
    x, t = split_point(fam, p)
    return _weights(abs(fam.value(x, t)), params)


def _weights(u: float, params: PartitionParams) -> tuple[float, float]:
    r1 = smoothstep((params.tau2 - u) / (params.tau2 - params.tau1))
    return r1, 1.0 - r1


def field_glued(fam: GermFamily, p, params: PartitionParams = PartitionParams(),
                delta_sing: float = DELTA_SING) -> FieldVector:
    x, t = split_point(fam, p)
    j = fam.jet(x)
    r1, r2 = _weights(abs(j.f + t * j.g), params)
    out = np.zeros_like(j.grad_f)
    if r1 > 0:
        out = out + r1 * _v_from_jet(j, delta_sing)
    if r2 > 0:
        out = out + r2 * _w_from_jet(j, t, delta_sing)
    return FieldVector(out)


def evaluate_field(fam: GermFamily, kind, p, params: PartitionParams = PartitionParams(),
                   delta_sing: float = DELTA_SING) -> FieldVector:
    kind = FieldKind.parse(kind)
    if kind is FieldKind.V_paper:
        return field_v(fam, p, delta_sing)
    if kind is FieldKind.W_kuo:
        return field_w(fam, p, delta_sing)
    return field_glued(fam, p, params, delta_sing)


def tangency_residuals(fam: GermFamily, p, kind, params: PartitionParams = PartitionParams(),
                       delta_sing: float = DELTA_SING) -> tuple[complex, complex]:
    """(dF(field), dg(field)) with raw partials, the t-term of dF included."""
    x, t = split_point(fam, p)
    j = fam.jet(x)
    vec = evaluate_field(fam, kind, p, params, delta_sing)
    dF = complex(np.sum(j.raw_dxF(t) * vec.x) + j.g * vec.t)
    dg = complex(np.sum(j.dg * vec.x))
    return dF, dg


@dataclass(frozen=True)
class DecayGap:
    constructed: float
    closed_form: float

    @property
    def difference(self) -> float:
        return abs(self.constructed - self.closed_form)


def decay_gap(fam: GermFamily, p, delta_sing: float = DELTA_SING) -> DecayGap:
    """|v - d/dt| from the field against |g| |grad g| / sqrt(Gram determinant).

    ``p`` may be x alone or (x, t); v does not depend on t.
    """
    if len(p) == fam.nvars and np.ndim(p[0]) == 0:
        x = fam.point(p)
    else:
        x, _ = split_point(fam, p)
    j = fam.jet(x)
    v = _v_from_jet(j, delta_sing)
    if j.g_is_zero:
        return DecayGap(norm(v), 0.0)
    closed = abs(j.g) * norm(j.grad_g) / math.sqrt(_delta(j))
    return DecayGap(norm(v), closed)
