"""Random polynomials and families for property tests and experiment scripts."""
from __future__ import annotations

import itertools

import numpy as np

from .conditions import GermFamily
from .poly_core import Field, Polynomial


def exponents_up_to(nvars: int, degree: int, min_degree: int = 0) -> list[tuple[int, ...]]:
    return [e for e in itertools.product(range(degree + 1), repeat=nvars) if min_degree <= sum(e) <= degree]


def random_polynomial(rng: np.random.Generator, nvars: int, degree: int, field=Field.REAL,
                      min_degree: int = 1, bound: float = 10.0, density: float = 1.0) -> Polynomial:
    """Dense (or thinned) polynomial with coefficients uniform in [-bound, bound]."""
    field = Field.parse(field)
    terms = {}
    for e in exponents_up_to(nvars, degree, min_degree):
        if density < 1.0 and rng.random() > density:
            continue
        c = rng.uniform(-bound, bound)
        if field is Field.COMPLEX:
            c = complex(c, rng.uniform(-bound, bound))
        terms[e] = c
    if not terms:
        e = (0,) * (nvars - 1) + (max(min_degree, 1),)
        terms[e] = 1.0
    return Polynomial(nvars, terms)


def random_family(rng: np.random.Generator, nvars: int = 2, degree: int = 3, field=Field.REAL,
                  bound: float = 10.0) -> GermFamily:
    f = random_polynomial(rng, nvars, degree, field, 1, bound)
    g = random_polynomial(rng, nvars, degree, field, 1, bound)
    return GermFamily(f, g, field)


def random_point(rng: np.random.Generator, nvars: int, field=Field.REAL, radius: float = 2.0) -> np.ndarray:
    field = Field.parse(field)
    x = rng.uniform(-radius, radius, nvars)
    if field is Field.COMPLEX:
        x = x + 1j * rng.uniform(-radius, radius, nvars)
        x *= radius / max(radius, float(np.linalg.norm(x)))
    return x
