"""Independent reference computations used by the test-suite.

None of these share code paths with the package: the Milnor number comes
from exact rational linear algebra on monomials, distances from direct
numerical minimisation, and flows from scipy's integrator.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize


# -- Milnor number --------------------------------------------------------------------

def _dpoly(poly: dict, var: int) -> dict:
    out = {}
    for e, c in poly.items():
        if e[var] == 0:
            continue
        ne = list(e)
        ne[var] -= 1
        out[tuple(ne)] = out.get(tuple(ne), 0) + c * e[var]
    return {e: c for e, c in out.items() if c != 0}


def _rational_rank(rows: list[dict], cols: dict) -> int:
    """Row rank over the rationals by fraction-exact elimination."""
    pivots: dict[int, dict] = {}
    rank = 0
    for row in rows:
        vec = {cols[e]: Fraction(c) for e, c in row.items() if e in cols}
        while vec:
            lead = min(vec)
            if lead not in pivots:
                inv = 1 / vec[lead]
                pivots[lead] = {k: v * inv for k, v in vec.items()}
                rank += 1
                break
            piv = pivots[lead]
            factor = vec[lead]
            for k, v in piv.items():
                nv = vec.get(k, 0) - factor * v
                if nv == 0:
                    vec.pop(k, None)
                else:
                    vec[k] = nv
    return rank


def milnor_number(poly: dict, nvars: int = 2, max_degree: int = 12) -> int:
    """dim Q[x]/(J + m^(max_degree+1)) for J the Jacobian ideal of ``poly``.

    ``poly`` maps exponent tuples to rational coefficients.  The answer is
    the Milnor number whenever m^(max_degree+1) lies in the localized
    Jacobian ideal, which holds for the small isolated singularities tested.
    """
    monos = [e for e in itertools.product(range(max_degree + 1), repeat=nvars) if sum(e) <= max_degree]
    # order columns by degree so pivots prefer low-degree monomials
    monos.sort(key=lambda e: (sum(e), e))
    cols = {e: k for k, e in enumerate(monos)}
    partials = [_dpoly(poly, i) for i in range(nvars)]
    rows = []
    for d in partials:
        for m in monos:
            prod = {}
            for e, c in d.items():
                ne = tuple(a + b for a, b in zip(e, m))
                if sum(ne) <= max_degree:
                    prod[ne] = prod.get(ne, 0) + c
            prod = {e: c for e, c in prod.items() if c != 0}
            if prod:
                rows.append(prod)
    return len(monos) - _rational_rank(rows, cols)


# -- line distance -------------------------------------------------------------------

def numeric_line_distance(u: np.ndarray, w: np.ndarray) -> tuple[float, complex]:
    """min over lambda |u + lambda w| by direct numerical minimisation."""
    u = np.asarray(u)
    w = np.asarray(w)
    if not (np.iscomplexobj(u) or np.iscomplexobj(w)):
        h = lambda lam: float(np.linalg.norm(u + lam * w))
        res = optimize.minimize_scalar(h, bounds=(-1e3, 1e3), method="bounded",
                                       options={"xatol": 1e-12, "maxiter": 2000})
        # polish with Brent from the bounded answer
        res2 = optimize.minimize_scalar(h, bracket=(res.x - 1e-3, res.x + 1e-3), tol=1e-14)
        best = min((res, res2), key=lambda r: r.fun)
        return float(best.fun), complex(best.x)

    def h2(z):
        return float(np.linalg.norm(u + complex(z[0], z[1]) * w) ** 2)

    # coarse grid then Nelder-Mead refinement of the squared distance
    grid = np.linspace(-20, 20, 81)
    best = min(((h2((a, b)), (a, b)) for a in grid for b in grid), key=lambda r: r[0])
    res = optimize.minimize(h2, best[1], method="Nelder-Mead",
                            options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 20000, "maxfev": 40000})
    return float(np.sqrt(res.fun)), complex(res.x[0], res.x[1])


# -- ODE cross-check -----------------------------------------------------------------

def scipy_flow(rhs, x0: np.ndarray, t0: float, t1: float, rtol: float = 1e-11, atol: float = 1e-13) -> np.ndarray:
    """Endpoint of x' = rhs(t, x) with scipy's DOP853."""
    sol = sp_integrate.solve_ivp(rhs, (t0, t1), np.asarray(x0, dtype=float), method="DOP853",
                                 rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return sol.y[:, -1]


# -- finite differences ----------------------------------------------------------------

def central_difference(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return out
