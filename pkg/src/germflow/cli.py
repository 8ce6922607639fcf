"""Command-line driver: ``germflow <task> --spec FILE [--seed N] [--out DIR]``.

A job spec is one JSON document.  Top-level keys:

    family      {"f": text, "g": text, "field": "real"|"complex", "variables": [...], "germ": bool}
    polynomial  text, for the malgrange and scan tasks
    seed        integer
    check       {"kinds": [...], "arcs": {...}, "grid": {...}, "slope_min": float, "search": {...}|null}
    exponent    {"arcs": {...}, "grid": {...}}
    flow        {"kind": ..., "start": [...], "t0": ..., "t1": ..., "integrator": {...}, "partition": {...}}
    malgrange   {"t0": ..., "arcs": {...}, "search": {...}}
    scan        {"t_grid": [...], "search": {...}}
    output      {"dir": path, "plots": bool, "csv": bool}

Complex numbers in JSON are written as [re, im] pairs.  Exit codes: 0 when
every requested analysis reached a verdict, 2 when one is indeterminate or a
flow did not complete, 1 on bad input.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .arcs import (
    SLOPE_MIN,
    ArcSuiteSpec,
    SearchConfig,
    SGrid,
    Target,
    Verdict,
    _ratio_samples,
    check_condition,
    estimate_lojasiewicz_exponent,
    find_violating_arc,
    random_arc_suite,
)
from .conditions import ConditionKind, GermFamily
from .errors import InputError, ParseError
from .fields import FieldKind, PartitionParams
from .flow import IntegratorConfig, integrate, trivialization_map
from .infinity import atypical_scan, malgrange_check
from .poly_core import Field, Polynomial, parse_polynomial, variable_names

SCHEMA_VERSION = "1.0"
TASKS = ("check", "exponent", "flow", "malgrange", "scan", "report-all")

EXIT_OK, EXIT_INPUT, EXIT_INDETERMINATE = 0, 1, 2


# -- spec loading and validation ---------------------------------------------------

class SpecError(InputError):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


def load_spec_text(text: str) -> dict:
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})"]) from None
    if not isinstance(spec, dict):
        raise SpecError(["the spec must be a JSON object"])
    return spec


def _scalar(v, cplx: bool):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v) if cplx else float(v)
    raise InputError(f"expected a number or [re, im] pair, got {v!r}")


def _build(cls, data, where: str, diags: list):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        diags.append(f"{where}: expected an object")
        return None
    names = {f.name for f in dataclasses.fields(cls)}
    extra = sorted(set(data) - names)
    if extra:
        diags.append(f"{where}: unknown keys {extra}")
        return None
    try:
        return cls(**data)
    except (InputError, TypeError, ValueError) as exc:
        diags.append(f"{where}: {exc}")
        return None


def _family(spec: dict, diags: list) -> GermFamily | None:
    fam = spec.get("family")
    if not isinstance(fam, dict) or "f" not in fam or "g" not in fam:
        diags.append("family: needs an object with 'f' and 'g'")
        return None
    try:
        field = Field.parse(fam.get("field", "real"))
    except (InputError, ValueError) as exc:
        diags.append(f"family.field: {exc}")
        return None
    names = fam.get("variables") or variable_names(fam["f"], fam["g"])
    polys = {}
    for key in ("f", "g"):
        try:
            polys[key] = parse_polynomial(fam[key], names)
        except ParseError as exc:
            diags.append(f"family.{key}: {exc}")
        except InputError as exc:
            diags.append(f"family.{key}: {exc}")
    if len(polys) < 2:
        return None
    try:
        return GermFamily(polys["f"], polys["g"], field, germ=bool(fam.get("germ", True)))
    except InputError as exc:
        diags.append(f"family: {exc}")
        return None


def _polynomial(spec: dict, diags: list) -> Polynomial | None:
    text = spec.get("polynomial")
    if not isinstance(text, str):
        diags.append("polynomial: a polynomial text is required for this task")
        return None
    try:
        return parse_polynomial(text, spec.get("variables") or variable_names(text))
    except InputError as exc:
        diags.append(f"polynomial: {exc}")
        return None


def _grid(section: dict, where: str, diags: list) -> SGrid | None:
    return _build(SGrid, section.get("grid"), f"{where}.grid", diags)


def _arc_spec(section: dict, where: str, diags: list) -> ArcSuiteSpec | None:
    data = dict(section.get("arcs") or {})
    if "target" in data:
        try:
            data["target"] = Target(data["target"])
        except ValueError:
            diags.append(f"{where}.arcs.target: unknown target {data['target']!r}")
            return None
    return _build(ArcSuiteSpec, data, f"{where}.arcs", diags)


def _search(section: dict, where: str, diags: list) -> SearchConfig | None:
    if section.get("search") is None:
        return None
    return _build(SearchConfig, section["search"], f"{where}.search", diags)


def _integrator(section: dict, diags: list) -> IntegratorConfig | None:
    data = dict(section.get("integrator") or {})
    part = _build(PartitionParams, section.get("partition"), "flow.partition", diags)
    if part is None:
        return None
    data["partition"] = part
    return _build(IntegratorConfig, data, "flow.integrator", diags)


def _sections(spec: dict, task: str) -> list[str]:
    if task != "report-all":
        return [task]
    return [t for t in TASKS[:-1] if t in spec]


def _prepare(spec: dict, task: str) -> tuple[dict, list[str]]:
    """Parse everything the task needs; returns (parsed objects, diagnostics)."""
    diags: list[str] = []
    out: dict = {}
    if task not in TASKS:
        return out, [f"task: unknown task {task!r}; expected one of {list(TASKS)}"]
    seed = spec.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        diags.append("seed: must be a non-negative integer")
    out["seed"] = seed
    sections = _sections(spec, task)
    if not sections:
        diags.append("report-all: the spec contains no task sections")
    if any(s in ("check", "exponent", "flow") for s in sections):
        out["family"] = _family(spec, diags)
    if any(s in ("malgrange", "scan") for s in sections):
        out["polynomial"] = _polynomial(spec, diags)
    for name in sections:
        sec = spec.get(name) or {}
        if not isinstance(sec, dict):
            diags.append(f"{name}: expected an object")
            continue
        where = name
        if name == "check":
            kinds = sec.get("kinds", [sec.get("kind", "C0_1")])
            parsed = []
            for k in kinds if isinstance(kinds, list) else [kinds]:
                try:
                    kind = ConditionKind.parse(k)
                except (InputError, ValueError) as exc:
                    diags.append(f"check.kinds: {exc}")
                    continue
                if kind is ConditionKind.C3_1_Malgrange:
                    diags.append("check.kinds: use the malgrange task for the Malgrange condition")
                    continue
                parsed.append(kind)
            slope_min = sec.get("slope_min", SLOPE_MIN)
            if not isinstance(slope_min, (int, float)) or slope_min <= 0:
                diags.append("check.slope_min: must be positive")
            out["check"] = dict(kinds=parsed, arcs=_arc_spec(sec, where, diags), grid=_grid(sec, where, diags),
                                search=_search(sec, where, diags), slope_min=slope_min)
        elif name == "exponent":
            arcs = dict(sec.get("arcs") or {})
            arcs.setdefault("target", Target.ZERO_SET_LIFTED.value)
            out["exponent"] = dict(arcs=_arc_spec({"arcs": arcs}, where, diags), grid=_grid(sec, where, diags))
        elif name == "flow":
            fam = out.get("family")
            cplx = fam is not None and fam.field is Field.COMPLEX
            try:
                kind = FieldKind.parse(sec.get("kind", "Glued"))
            except InputError as exc:
                diags.append(f"flow.kind: {exc}")
                kind = None
            try:
                start = [_scalar(v, cplx) for v in sec["start"]]
                t0, t1 = _scalar(sec["t0"], cplx), _scalar(sec["t1"], cplx)
                if fam is not None and len(start) != fam.nvars:
                    diags.append(f"flow.start: expected {fam.nvars} coordinates")
            except KeyError as exc:
                diags.append(f"flow: missing key {exc.args[0]!r}")
                start = t0 = t1 = None
            except InputError as exc:
                diags.append(f"flow: {exc}")
                start = t0 = t1 = None
            out["flow"] = dict(kind=kind, start=start, t0=t0, t1=t1, cfg=_integrator(sec, diags),
                               transport=bool(sec.get("transport", kind is FieldKind.Glued)))
        elif name == "malgrange":
            try:
                t0 = _scalar(sec.get("t0", 0.0), True)
            except InputError as exc:
                diags.append(f"malgrange.t0: {exc}")
                t0 = None
            arcs = dict(sec.get("arcs") or {})
            arcs.setdefault("target", Target.INFINITY.value)
            out["malgrange"] = dict(t0=t0, arcs=_arc_spec({"arcs": arcs}, where, diags),
                                    grid=_grid(sec, where, diags),
                                    search=_build(SearchConfig, sec.get("search"), "malgrange.search", diags))
        elif name == "scan":
            grid = sec.get("t_grid")
            try:
                ts = [_scalar(v, True) for v in grid] if isinstance(grid, list) and grid else None
            except InputError as exc:
                diags.append(f"scan.t_grid: {exc}")
                ts = []
            if ts is None:
                diags.append("scan.t_grid: needs a non-empty list of values")
            out["scan"] = dict(t_grid=ts, grid=_grid(sec, where, diags),
                               search=_build(SearchConfig, sec.get("search"), "scan.search", diags))
    output = spec.get("output", {})
    if not isinstance(output, dict):
        diags.append("output: expected an object")
    return out, diags


def validate(spec: dict, task: str | None = None) -> list[str]:
    """Diagnostics for a parsed spec; empty iff ``run`` would not reject its input."""
    task = task or spec.get("task")
    if task is None:
        return ["task: no task given"]
    return _prepare(spec, task)[1]


# -- JSON helpers -----------------------------------------------------------------

def _clean(obj):
    """Make a result tree JSON-safe: numpy scalars, complex, non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def determinism_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k != "determinism_hash"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- task runners -----------------------------------------------------------------

def _run_check(fam, cfg, seed):
    out, curves, indeterminate = [], {}, False
    for kind in cfg["kinds"]:
        spec = cfg["arcs"]
        if kind in (ConditionKind.C1_1, ConditionKind.C1_2, ConditionKind.CorAg_ii, ConditionKind.C3_2):
            spec = dataclasses.replace(spec, target=Target.ZERO_SET_LIFTED)
        arcs = random_arc_suite(fam, spec, seed, cfg["grid"])
        verdict = check_condition(fam, kind, arcs, cfg["grid"], slope_min=cfg["slope_min"], seed=seed)
        entry = {"verdict": verdict.to_json()}
        if cfg["search"] is not None:
            arc = find_violating_arc(fam, kind, dataclasses.replace(cfg["search"], seed=seed), cfg["grid"],
                                     slope_min=cfg["slope_min"])
            entry["violating_arc"] = None if arc is None else arc.to_json()
            if arc is not None and verdict.verdict is not Verdict.DIVERGES:
                entry["note"] = "random suite did not diverge but the search found a violating arc"
        indeterminate |= verdict.verdict is Verdict.INDETERMINATE
        s = cfg["grid"].values()
        curves[kind.value] = []
        for arc in arcs[:8]:
            num, den = _ratio_samples(fam, kind, arc, s)
            with np.errstate(all="ignore"):
                curves[kind.value].append(num / den)
        out.append(entry)
    return {"conditions": out}, indeterminate, {"curves": curves, "s": cfg["grid"].values()}


def _run_exponent(fam, cfg, seed):
    arcs = random_arc_suite(fam, cfg["arcs"], seed, cfg["grid"])
    est = estimate_lojasiewicz_exponent(fam, arcs, cfg["grid"])
    res = est.to_json()
    res.update({"seed": seed, "grid": cfg["grid"].to_json(), "arcs": len(arcs)})
    return res, not est.reliable, None


def _run_flow(fam, cfg, seed):
    x0 = np.asarray(cfg["start"], dtype=fam.dtype)
    t0, t1 = cfg["t0"], cfg["t1"]
    icfg = cfg["cfg"]
    if cfg["transport"] and cfg["kind"] is FieldKind.Glued:
        _, traj = trivialization_map(fam, x0, t0, t1, icfg)
    else:
        traj = integrate(fam, cfg["kind"], (x0, t0), t1, icfg)
    res = {"trajectory": traj.summary(), "integrator": _config_json(icfg)}
    if t0 == t1:
        res["note"] = "zero-length flow: identity transport"
    # a small cloud on the start fibre, transported for the before/after plot
    rng = np.random.default_rng(seed)
    cloud_before, cloud_after = [], []
    if traj.completed and t0 != t1:
        for _ in range(12):
            p = x0 + 0.02 * rng.standard_normal(len(x0))
            tr = integrate(fam, cfg["kind"], (p.astype(fam.dtype), t0), t1, icfg)
            if tr.completed:
                cloud_before.append(p)
                cloud_after.append(tr.xs[-1])
        res["cloud_transported"] = len(cloud_after)
    return res, not traj.completed, {"traj": traj, "before": cloud_before, "after": cloud_after}


def _run_malgrange(f, cfg, seed):
    fam = GermFamily(f, Polynomial.zero(f.nvars), Field.COMPLEX, germ=False)
    arcs = random_arc_suite(fam, dataclasses.replace(cfg["arcs"], include_t=False), seed, cfg["grid"])
    witness = find_violating_arc(fam, ConditionKind.C3_1_Malgrange, dataclasses.replace(cfg["search"], seed=seed),
                                 cfg["grid"], t0=cfg["t0"])
    if witness is not None:
        arcs = [witness] + list(arcs)
    verdict = malgrange_check(f, cfg["t0"], arcs, cfg["grid"])
    res = verdict.to_json()
    res.update({"seed": seed, "grid": cfg["grid"].to_json(), "probed_arcs": len(arcs)})
    return res, verdict.holds is None, None


def _run_scan(f, cfg, seed):
    search = dataclasses.replace(cfg["search"], seed=seed)
    rows = atypical_scan(f, cfg["t_grid"], search, cfg["grid"])
    flagged = [t0 for t0, v in rows if v.holds is False]
    return {"seed": seed, "grid": cfg["grid"].to_json(), "search": _config_json(search),
            "flagged": flagged, "values": [v.to_json() for _, v in rows],
            "note": "values without a witness are evidence of typicality, not a proof"}, False, None


def _config_json(cfg) -> dict:
    return {k: _clean(v) if not dataclasses.is_dataclass(v) else _config_json(v)
            for k, v in dataclasses.asdict(cfg).items()}


RUNNERS = {
    "check": (_run_check, "family"),
    "exponent": (_run_exponent, "family"),
    "flow": (_run_flow, "family"),
    "malgrange": (_run_malgrange, "polynomial"),
    "scan": (_run_scan, "polynomial"),
}


# -- plots ------------------------------------------------------------------------

def _plot_ratios(path: Path, extra: dict) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "germflow"
    fig, ax = plt.subplots(figsize=(5, 4))
    s = extra["s"]
    for kind, curves in extra["curves"].items():
        for k, r in enumerate(curves):
            ok = np.isfinite(r) & (r > 0)
            ax.loglog(s[ok], r[ok], lw=0.8, label=kind if k == 0 else None)
    ax.set_xlabel("s")
    ax.set_ylabel("ratio")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save_svg(fig, path)


def _plot_cloud(path: Path, extra: dict) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "germflow"
    fig, ax = plt.subplots(figsize=(5, 4))
    for pts, label in ((extra["before"], "start fibre"), (extra["after"], "target fibre")):
        if pts:
            arr = np.real(np.array(pts))
            ax.scatter(arr[:, 0], arr[:, 1] if arr.shape[1] > 1 else np.zeros(len(arr)), s=10, label=label)
    xs = np.real(np.array(extra["traj"].xs))
    ax.plot(xs[:, 0], xs[:, 1] if xs.shape[1] > 1 else np.zeros(len(xs)), "k-", lw=0.8, label="trajectory")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save_svg(fig, path)


def _save_svg(fig, path: Path) -> None:
    import io
    import matplotlib.pyplot as plt
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


# -- run --------------------------------------------------------------------------

def run(spec: dict, task: str, out_dir: Path | None = None, plots: bool | None = None) -> tuple[dict, int]:
    """Run one job; returns (report, exit code).  Raises SpecError on bad input."""
    parsed, diags = _prepare(spec, task)
    if diags:
        raise SpecError(diags)
    seed = parsed["seed"]
    output = spec.get("output", {}) or {}
    out_dir = Path(out_dir or output.get("dir") or ".")
    plots = output.get("plots", False) if plots is None else plots
    write_csv = output.get("csv", True)
    echo = {k: v for k, v in spec.items() if k != "output"}
    echo["task"] = task
    results, code = {}, EXIT_OK
    started = time.perf_counter()
    for name in _sections(spec, task):
        runner, needs = RUNNERS[name]
        res, indeterminate, extra = runner(parsed[needs], parsed[name], seed)
        results[name] = res
        if indeterminate:
            code = EXIT_INDETERMINATE
        if name == "flow" and write_csv:
            atomic_write(out_dir / "trajectory.csv", extra["traj"].to_csv(parsed["family"]))
        if plots and name == "check":
            _plot_ratios(out_dir / "ratios.svg", extra)
        if plots and name == "flow" and len(extra["traj"].xs) > 1:
            _plot_cloud(out_dir / "fibres.svg", extra)
    elapsed = time.perf_counter() - started
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "germflow", "version": __version__},
        "task": task,
        "seed": seed,
        "job": echo,
        "results": results,
        "exit_code": code,
    }
    report = json.loads(canonical_json(report))
    report["determinism_hash"] = determinism_hash(report)
    atomic_write(out_dir / "report.json", canonical_json(report))
    atomic_write(out_dir / "report.timing.json", canonical_json({"wall_clock_seconds": elapsed}))
    return report, code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="germflow", description="Arc-sampling checks and flows for families f + t g.")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--spec", required=True, help="JSON job spec")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--out", help="output directory (default: spec output.dir or .)")
    p.add_argument("--f", dest="f", help="override family.f")
    p.add_argument("--g", dest="g", help="override family.g")
    p.add_argument("--field", choices=["real", "complex"], help="override family.field")
    p.add_argument("--kind", help="override check.kinds (single kind) or flow.kind")
    p.add_argument("--count", type=int, help="override the arc count of check/exponent/malgrange")
    p.add_argument("--plots", action="store_true", help="write SVG plots")
    p.add_argument("--validate", action="store_true", help="only validate the spec")
    return p


def _apply_overrides(spec: dict, args) -> dict:
    spec = json.loads(json.dumps(spec))
    if args.seed is not None:
        spec["seed"] = args.seed
    for key in ("f", "g", "field"):
        val = getattr(args, key)
        if val is not None:
            spec.setdefault("family", {})[key] = val
    if args.kind is not None:
        if args.task == "flow":
            spec.setdefault("flow", {})["kind"] = args.kind
        else:
            spec.setdefault("check", {})["kinds"] = [args.kind]
    if args.count is not None:
        for sec in ("check", "exponent", "malgrange"):
            if sec in spec or sec == args.task:
                spec.setdefault(sec, {}).setdefault("arcs", {})["count"] = args.count
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.spec).read_text()
    except OSError as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        spec = _apply_overrides(load_spec_text(text), args)
        if args.validate:
            diags = validate(spec, args.task)
            for d in diags:
                print(f"error: {d}", file=sys.stderr)
            return EXIT_INPUT if diags else EXIT_OK
        report, code = run(spec, args.task, Path(args.out) if args.out else None, args.plots or None)
    except SpecError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps({"task": args.task, "exit_code": code, "determinism_hash": report["determinism_hash"]}))
    return code


if __name__ == "__main__":
    sys.exit(main())
