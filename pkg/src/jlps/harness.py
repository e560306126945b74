"""Experiment plumbing: TOML configs, seeded ensembles, checks and JSON reports."""

from __future__ import annotations

import copy
import csv
import json
import math
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np
import tomli

from .core import JacobiParams
from .weights import DiscreteWeight, load_weight_table

EXPERIMENTS = ("identity", "kernels", "decay", "equivalence", "multiplier", "apweight")
DISTRIBUTIONS = ("gaussian", "rademacher", "sparse")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    count: int = 50
    support_max: int = 32
    seed: int = 0
    distribution: str = "gaussian"


@dataclass(frozen=True)
class ModelSpec:
    L_init: int = 64
    L_max: int = 4096
    tol: float = 1e-10


@dataclass
class ExperimentConfig:
    experiment: str
    params: list[JacobiParams]
    k_list: list[int]
    ensemble: EnsembleSpec
    model: ModelSpec
    weights: list[DiscreteWeight]
    p_list: list[float]
    output: str = "jlps-out"
    tolerances: dict[str, Any] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": [list(p.as_tuple()) for p in self.params],
            "k_list": list(self.k_list),
            "ensemble": vars(self.ensemble).copy(),
            "model": vars(self.model).copy(),
            "weights": [_weight_echo(w) for w in self.weights],
            "p_list": list(self.p_list),
            "tolerances": copy.deepcopy(self.tolerances),
            "options": copy.deepcopy(self.options),
        }


def _weight_echo(w: DiscreteWeight) -> dict:
    if w.kind == "power":
        return {"kind": "power", "s": w.s}
    if w.kind == "constant":
        return {"kind": "constant", "c": w.c}
    return {"kind": "tabulated", "values": list(w.table)}


_ALL_PARAMS = [[-0.5, -0.5], [0.0, 0.0], [0.7, 2.3]]

# every default equals the acceptance value
DEFAULTS: dict[str, dict[str, Any]] = {
    "identity": {
        "params": _ALL_PARAMS,
        "k_list": [1, 2, 3],
        "ensemble": {"count": 50, "support_max": 32},
        "tolerances": {"identity_rel": 1e-8, "composition": 1e-6, "domination_slack": 1e-12},
        "options": {
            "kinds": ["heat", "poisson"],
            "domination_count": 100,
            "composition_params": [0.0, 0.0],
            "composition_t": [1.0],
            "composition_levels": [128, 256, 512, 1024],
            "composition_n_out": 16,
        },
    },
    "kernels": {
        "params": _ALL_PARAMS,
        "tolerances": {"oracle": 1e-10, "semigroup": 1e-10, "subordination": 1e-8},
        "options": {
            "oracle_max_index": 64,
            "oracle_t": [0.1, 1.0, 10.0, 50.0],
            "law_pairs": [[0.5, 1.0], [1.0, 2.0], [3.0, 7.0]],
            "law_size": 96,
            "sub_max_index": 32,
            "sub_t": [0.5, 1.0, 5.0],
        },
    },
    "decay": {
        "params": [[-0.5, -0.5]],
        "k_list": [1],
        "model": {"L_init": 1024},
        "tolerances": {"size_slope": [-1.2, -0.8], "smooth_slope": [-2.3, -1.7], "band": 10.0, "diag_bound": 1.0},
        "options": {
            "window": [8, 128],
            "anchor": 1,
            "diag_max": 256,
            "general_window": [8, 256],
            "schlafli_I": [8, 128],
            "schlafli_J": [8, 64],
            "schlafli_step": 4,
        },
    },
    "equivalence": {
        "params": _ALL_PARAMS,
        "k_list": [1],
        "ensemble": {"count": 100, "support_max": 32},
        "weights": [{"kind": "power", "s": s} for s in (-0.5, 0.0, 0.25, 0.5, 1.0)],
        "p_list": [1.5, 2.0, 3.0],
        "tolerances": {"spread": 100.0, "spread_growth": 0.10, "exact_rel": 1e-8},
    },
    "multiplier": {
        "params": _ALL_PARAMS,
        "ensemble": {"count": 100, "support_max": 32},
        "tolerances": {"two_path": 1e-8, "isometry": 1e-10, "bound_growth": 0.1},
        "options": {"densities": ["one", "exp", "step"], "step_t0": 1.0, "gammas": [0.5, 1.0, 3.0]},
    },
    "apweight": {
        "p_list": [1.5, 2.0, 3.0],
        "weights": [],
        "tolerances": {"stable": 0.01, "grow": 0.10, "boundary_margin": 0.1},
        "options": {"window_max": 4096, "doublings": 4, "power_grid": True},
    },
}

_TOP_KEYS = {"experiment", "params", "k_list", "ensemble", "model", "weights", "p_list", "output", "tolerances", "options"}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_weight(spec: dict, base_dir: Path) -> DiscreteWeight:
    kind = spec.get("kind", "power")
    try:
        if kind == "power":
            return DiscreteWeight.power(float(spec["s"]))
        if kind == "constant":
            return DiscreteWeight("constant", c=float(spec.get("c", 1.0)))
        if kind in ("table", "tabulated"):
            path = Path(spec["path"])
            return load_weight_table(path if path.is_absolute() else base_dir / path)
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"bad weight spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown weight kind {kind!r}")


def build_config(experiment: str, raw: dict | None = None, base_dir: str | os.PathLike = ".") -> ExperimentConfig:
    """Merge a parsed TOML table over the experiment defaults and validate."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    raw = dict(raw or {})
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    d = _merge(DEFAULTS[experiment], raw)
    try:
        ens = EnsembleSpec(**d.get("ensemble", {}))
        model = ModelSpec(**d.get("model", {}))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if ens.count < 1:
        raise ConfigError("ensemble must contain at least one sequence")
    if ens.support_max < 0:
        raise ConfigError("support_max must be nonnegative")
    if ens.distribution not in DISTRIBUTIONS:
        raise ConfigError(f"distribution must be one of {DISTRIBUTIONS}")
    if not 0 <= ens.seed < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    if not 1 <= model.L_init <= model.L_max:
        raise ConfigError("need 1 <= L_init <= L_max")
    if not model.tol > 0:
        raise ConfigError("tol must be positive")
    try:
        params = [JacobiParams(float(a), float(b)) for a, b in d.get("params", _ALL_PARAMS)]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc
    k_list = [int(k) for k in d.get("k_list", [1])]
    if any(k < 1 for k in k_list):
        raise ConfigError("orders in k_list must be >= 1")
    p_list = [float(p) for p in d.get("p_list", [2.0])]
    if any(not 1 < p < math.inf for p in p_list):
        raise ConfigError("exponents must satisfy 1 < p < inf")
    weights = [_parse_weight(w, Path(base_dir)) for w in d.get("weights", [])]
    return ExperimentConfig(
        experiment=experiment,
        params=params,
        k_list=k_list,
        ensemble=ens,
        model=model,
        weights=weights,
        p_list=p_list,
        output=str(d.get("output", "jlps-out")),
        tolerances=d.get("tolerances", {}),
        options=d.get("options", {}),
    )


def load_config(experiment: str, path: str | os.PathLike | None) -> ExperimentConfig:
    if path is None:
        return build_config(experiment)
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(experiment, raw, Path(path).parent)


def case_rng(seed: int, case_id: int) -> np.random.Generator:
    """Independent Philox stream per case; unaffected by execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(case_id,))))


def draw_sequence(rng: np.random.Generator, support_max: int, distribution: str) -> np.ndarray:
    """Entries on 0..s with s uniform in [0, support_max]; the last entry is nonzero."""
    s = int(rng.integers(0, support_max + 1))
    if distribution == "gaussian":
        f = rng.standard_normal(s + 1)
    elif distribution == "rademacher":
        f = rng.choice([-1.0, 1.0], size=s + 1)
    elif distribution == "sparse":
        f = rng.standard_normal(s + 1) * (rng.random(s + 1) < 0.25)
    else:
        raise ConfigError(f"unknown distribution {distribution!r}")
    if f[-1] == 0:
        f[-1] = 1.0
    return f


def ensemble(spec: EnsembleSpec, support_max: int | None = None) -> list[np.ndarray]:
    smax = spec.support_max if support_max is None else support_max
    return [draw_sequence(case_rng(spec.seed, i), smax, spec.distribution) for i in range(spec.count)]


def run_ordered(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """map() over items, in item order regardless of thread count."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---- checks and reports -------------------------------------------------

_AGGS = ("max", "min", "spread", "slope", "all", "sum", "nonincreasing")
_OPS = ("<", "<=", ">=", "==", "in")


def _aggregate(agg: str, xs: list, vals: list):
    if not vals:
        raise ValueError("check has no contributing cases")
    if agg == "max":
        return max(vals)
    if agg == "min":
        return min(vals)
    if agg == "spread":
        return max(vals) / min(vals)
    if agg == "sum":
        return sum(vals)
    if agg == "all":
        return bool(all(vals))
    if agg == "nonincreasing":
        return bool(all(b <= a for a, b in zip(vals[:-1], vals[1:])))
    if agg == "slope":
        x = np.log(np.asarray(xs, dtype=float))
        y = np.log(np.asarray(vals, dtype=float))
        return float(np.polyfit(x, y, 1)[0])
    raise ValueError(f"unknown aggregate {agg!r}")


def _compare(op: str, value, threshold) -> bool:
    if op == "<":
        return bool(value < threshold)
    if op == "<=":
        return bool(value <= threshold)
    if op == ">=":
        return bool(value >= threshold)
    if op == "==":
        return bool(value == threshold)
    if op == "in":
        lo, hi = threshold
        return bool(lo <= value <= hi)
    raise ValueError(f"unknown comparison {op!r}")


@dataclass
class Check:
    name: str
    agg: str
    op: str
    threshold: Any
    hard: bool = True
    note: str = ""


class Recorder:
    """Collects per-case records and the checks that summarise them."""

    def __init__(self):
        self.cases: list[dict] = []
        self.checks: dict[str, Check] = {}
        self.grids: dict[str, tuple[list[str], list[list]]] = {}
        self.plots: dict[str, dict[str, tuple[list, list]]] = {}

    def check(self, name, agg, op, threshold, hard=True, note=""):
        if agg not in _AGGS or op not in _OPS:
            raise ValueError(f"bad check {name}: {agg} {op}")
        self.checks[name] = Check(name, agg, op, threshold, hard, note)

    def add(self, check: str | None, value, x=None, **inputs) -> None:
        rec = {"id": len(self.cases), "check": check, "value": _jsonable(value)}
        if x is not None:
            rec["x"] = _jsonable(x)
        rec.update({k: _jsonable(v) for k, v in inputs.items()})
        self.cases.append(rec)

    def grid(self, name: str, header: list[str], rows: Iterable) -> None:
        self.grids[name] = (header, [list(r) for r in rows])

    def plot(self, name: str, series: dict[str, tuple[Sequence, Sequence]]) -> None:
        self.plots[name] = {k: (list(map(float, x)), list(map(float, y))) for k, (x, y) in series.items()}


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def summarize(cases: list[dict], checks: dict[str, dict]) -> dict[str, dict]:
    """Recompute every check value from the case records."""
    out = {}
    for name, c in checks.items():
        rows = [r for r in cases if r.get("check") == name]
        if not rows:
            # a hard check nobody fed cannot pass
            out[name] = dict(c, value=None, passed=not c["hard"], n_cases=0)
            continue
        value = _aggregate(c["agg"], [r.get("x") for r in rows], [r["value"] for r in rows])
        out[name] = dict(c, value=value, passed=_compare(c["op"], value, c["threshold"]), n_cases=len(rows))
    return out


def build_report(cfg: ExperimentConfig, rec: Recorder, runtime: float, timestamp: str, threads: int) -> dict:
    import scipy

    from . import __version__

    checks = {n: {"agg": c.agg, "op": c.op, "threshold": c.threshold, "hard": c.hard, "note": c.note} for n, c in rec.checks.items()}
    summary = summarize(rec.cases, checks)
    return {
        "experiment": cfg.experiment,
        "config": cfg.echo(),
        "cases": rec.cases,
        "summary": summary,
        "passed": all(v["passed"] for v in summary.values() if v["hard"]),
        "versions": {
            "jlps": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        # excluded from determinism comparisons
        "run_info": {"timestamp": timestamp, "runtime_s": runtime, "threads": threads},
    }


def verify_report(report: dict, rtol: float = 1e-12) -> list[str]:
    """Re-derive summary verdicts from per-case records; returns mismatches."""
    problems = []
    stored = report["summary"]
    spec = {n: {k: v[k] for k in ("agg", "op", "threshold", "hard", "note")} for n, v in stored.items()}
    fresh = summarize(report["cases"], spec)
    for name, s in stored.items():
        f = fresh[name]
        a, b = s["value"], f["value"]
        if a is None or b is None:
            if a is not b:
                problems.append(f"{name}: stored value {a!r} != recomputed {b!r}")
            continue
        same = a == b or (isinstance(a, float) and isinstance(b, float) and math.isclose(a, b, rel_tol=rtol))
        if not same:
            problems.append(f"{name}: stored value {a!r} != recomputed {b!r}")
        if s["passed"] != f["passed"]:
            problems.append(f"{name}: stored verdict {s['passed']} != recomputed {f['passed']}")
    overall = all(v["passed"] for v in fresh.values() if v["hard"])
    if overall != report["passed"]:
        problems.append(f"overall verdict {report['passed']} != recomputed {overall}")
    return problems


def strip_run_info(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "run_info"}


def write_report(report: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1, ensure_ascii=False)
        fh.write("\n")


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for r in rows:
            wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_svg(path: str | os.PathLike, series: dict[str, tuple[list, list]], title: str = "", size=(480, 320)) -> None:
    """Minimal log-log line plot; nonpositive points are dropped."""
    W, H = size
    pad = 40
    pts = {}
    for name, (x, y) in series.items():
        xy = [(math.log10(a), math.log10(b)) for a, b in zip(x, y) if a > 0 and b > 0]
        if xy:
            pts[name] = xy
    allx = [p[0] for v in pts.values() for p in v] or [0.0, 1.0]
    ally = [p[1] for v in pts.values() for p in v] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx) if max(allx) > min(allx) else min(allx) + 1
    y0, y1 = min(ally), max(ally) if max(ally) > min(ally) else min(ally) + 1
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
        f'<rect x="{pad}" y="{pad // 2}" width="{W - 1.5 * pad}" height="{H - 1.5 * pad}" fill="none" stroke="#444"/>',
        f'<text x="{W / 2}" y="14" text-anchor="middle" font-size="12">{title}</text>',
    ]
    for i, (name, xy) in enumerate(pts.items()):
        coords = " ".join(
            f"{pad + (a - x0) / (x1 - x0) * (W - 1.5 * pad):.1f},{H - pad - (b - y0) / (y1 - y0) * (H - 1.5 * pad):.1f}"
            for a, b in xy
        )
        col = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{col}" points="{coords}"/>')
        parts.append(f'<text x="{pad + 6}" y="{pad + 14 * (i + 1)}" font-size="11" fill="{col}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
