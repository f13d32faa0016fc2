"""Config-driven experiment runner and report emission.

Configs are JSON objects validated strictly (unknown keys anywhere are usage
errors, reported with their field path).  Runs are deterministic: random
families require a seed, worker threads only parallelize independent rows,
and reports never contain wall-clock data.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nodal, partition
from .defaults import DEFAULTS, TOLERANCES
from .doubling import cube_index, doubling_index
from .errors import InputError
from .frequency import monotonicity_profile, proof_decomposition
from .geometry import Ball, Cube, PolarMetric
from .polynomials import BiharmonicFunction, function_from_dict, random_family

EXPERIMENT_KINDS = (
    "frequency-scan", "doubling-scan", "nodal-measure", "partition-scan",
    "propagation", "f-recursion", "decomposition", "compare",
)


class ConfigError(InputError):
    """Invalid experiment config; message carries the offending field path."""


def _require_keys(obj: dict, allowed: set, required: set, path: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}: missing required key")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    family: dict
    metric: dict
    region: dict
    params: dict
    output: dict
    seed: int | None = None

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "family": self.family,
               "metric": self.metric, "region": self.region,
               "params": self.params, "output": self.output}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @property
    def config_hash(self) -> str:
        # the output block is excluded: where a report lands is not part of
        # the experiment's identity
        payload = self.to_dict()
        payload.pop("output", None)
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def parse_config(payload: dict) -> ExperimentConfig:
    """Validate a raw config dict; raises ConfigError with a field path."""
    _require_keys(payload, {"experiment", "family", "metric", "region",
                            "params", "output", "seed"},
                  {"experiment"}, "config")
    kind = payload["experiment"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"config.experiment: unknown kind {kind!r}")

    family = payload.get("family", {})
    _require_keys(family, {"functions", "random", "harmonics"}, set(), "config.family")
    if "random" in family:
        _require_keys(family["random"], {"count", "degree", "n"}, {"count"},
                      "config.family.random")
        if payload.get("seed") is None:
            raise ConfigError("config.seed: required for random families")
    if "functions" in family:
        for i, fn in enumerate(family["functions"]):
            _require_keys(fn, {"n", "h1", "h2"}, {"n", "h1", "h2"},
                          f"config.family.functions[{i}]")

    metric = payload.get("metric", {"family": "identity", "n": 2})
    _require_keys(metric, {"family", "param", "n"}, set(), "config.metric")

    region = payload.get("region", {"ball": {"center": [0.0, 0.0], "radius": 0.5}})
    _require_keys(region, {"ball", "cube"}, set(), "config.region")
    if "ball" in region:
        _require_keys(region["ball"], {"center", "radius"}, {"center", "radius"},
                      "config.region.ball")
    if "cube" in region:
        _require_keys(region["cube"], {"center", "half_width"},
                      {"center", "half_width"}, "config.region.cube")

    params = payload.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("config.params: expected an object")
    _validate_params(kind, params)

    output = payload.get("output", {})
    _require_keys(output, {"dir", "format"}, set(), "config.output")
    if output.get("format", "csv") not in ("csv", "json"):
        raise ConfigError("config.output.format: must be 'csv' or 'json'")
    return ExperimentConfig(kind, family, metric, region, params, output,
                            payload.get("seed"))


_PARAM_KEYS = {
    "frequency-scan": {"r_lo", "r_hi", "r_count", "C0", "degree"},
    "doubling-scan": {"radii", "depth", "samples", "n_radii"},
    "nodal-measure": {"grid_n", "gamma", "r_cap"},
    "partition-scan": {"A", "axis", "offset", "rule", "c", "depth"},
    "propagation": {"family_kind", "m_values", "eps_values", "grid_n"},
    "f-recursion": {"A2", "c", "scales", "grid_n", "E_grid"},
    "decomposition": {"radii", "n_r", "n_theta"},
    "compare": {"eps_coeff", "n_r", "n_theta", "boundary_degree"},
}


def _validate_params(kind: str, params: dict):
    allowed = _PARAM_KEYS[kind]
    for key in params:
        if key not in allowed:
            raise ConfigError(f"config.params.{key}: unknown key for {kind}")


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    row_id: int
    config_hash: str
    values: dict
    flags: dict = field(default_factory=dict)
    tolerances_version: str = TOLERANCES["version"]

    def flat(self) -> dict:
        out = {"experiment": self.experiment, "row_id": self.row_id,
               "config_hash": self.config_hash}
        out.update(self.values)
        for k, v in self.flags.items():
            out[f"flag_{k}"] = v
        out["tolerances_version"] = self.tolerances_version
        return out


def worker_count() -> int:
    env = os.environ.get("NODAL_LAB_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _parallel_map(fn, items):
    """Index-ordered map; worker threads never change the output."""
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _build_family(config: ExperimentConfig) -> list[BiharmonicFunction]:
    fam = config.family
    out: list[BiharmonicFunction] = []
    if "functions" in fam:
        out.extend(function_from_dict(fn) for fn in fam["functions"])
    if "random" in fam:
        spec = fam["random"]
        out.extend(random_family(config.seed, count=int(spec["count"]),
                                 n=int(spec.get("n", 2)),
                                 degree=int(spec.get("degree", 6))))
    if not fam and config.experiment not in ("propagation", "compare"):
        raise ConfigError("config.family: no functions specified")
    return out  # an explicit empty list is legal and yields an empty report


def _build_metric(config: ExperimentConfig) -> PolarMetric:
    m = config.metric
    return PolarMetric(int(m.get("n", 2)), m.get("family", "identity"),
                       float(m.get("param", 0.0)))


def _build_region(config: ExperimentConfig):
    r = config.region
    if "cube" in r:
        spec = r["cube"]
        return Cube(np.asarray(spec["center"], dtype=float), float(spec["half_width"]))
    spec = r.get("ball", {"center": [0.0, 0.0], "radius": 0.5})
    return Ball(np.asarray(spec["center"], dtype=float), float(spec["radius"]))


def run_experiment(config: ExperimentConfig) -> list[ReportRow]:
    """Dispatch one experiment; deterministic given the config (seed included)."""
    handler = _HANDLERS[config.experiment]
    return handler(config)


def _rows(config, payloads, flags_list=None) -> list[ReportRow]:
    flags_list = flags_list or [{} for _ in payloads]
    return [ReportRow(config.experiment, i, config.config_hash, vals, fl)
            for i, (vals, fl) in enumerate(zip(payloads, flags_list))]


def _run_frequency_scan(config: ExperimentConfig) -> list[ReportRow]:
    metric = _build_metric(config)
    region = _build_region(config)
    center = region.center
    p = config.params
    grid = np.geomspace(float(p.get("r_lo", DEFAULTS["r_grid_lo"])),
                        float(p.get("r_hi", DEFAULTS["r_grid_hi"])),
                        int(p.get("r_count", DEFAULTS["r_grid_count"])))
    C0 = float(p.get("C0", DEFAULTS["frequency_floor"]))
    family = _build_family(config)

    def one(f):
        return monotonicity_profile(f, metric, center, grid, C0,
                                    degree=p.get("degree"))

    profiles = _parallel_map(one, family)
    payloads, flags = [], []
    for fi, prof in enumerate(profiles):
        for row in prof.csv_rows():
            payloads.append({"function": fi, **row})
            flags.append({"growth_ok": prof.growth_ok, "floor_ok": prof.floor_ok,
                          "C_emp": prof.C_emp})
    return _rows(config, payloads, flags)


def _run_doubling_scan(config: ExperimentConfig) -> list[ReportRow]:
    region = _build_region(config)
    p = config.params
    family = _build_family(config)
    payloads, flags = [], []
    if isinstance(region, Cube):
        def one(f):
            return cube_index(f, region, samples=int(p.get("samples", 3)),
                              n_radii=p.get("n_radii"), depth=int(p.get("depth", 1)))
        for fi, rep in enumerate(_parallel_map(one, family)):
            payloads.append({"function": fi, **rep.csv_row()})
            flags.append({})
    else:
        radii = [float(r) for r in p.get("radii", [region.radius])]
        for fi, f in enumerate(family):
            for r in radii:
                E = doubling_index(f, region.center, r, depth=int(p.get("depth", 4)))
                payloads.append({"function": fi, "r": r, "E": E})
                flags.append({})
    return _rows(config, payloads, flags)


def _run_nodal_measure(config: ExperimentConfig) -> list[ReportRow]:
    region = _build_region(config)
    p = config.params
    grid_n = int(p.get("grid_n", 512))
    family = _build_family(config)

    def one(f):
        curves = nodal.extract_nodal_curves(f, region, grid_n)
        mids = curves.midpoints()
        counts: dict = {}
        if len(mids):
            sample = mids[:: max(1, len(mids) // 256)]
            for lab in nodal.classify_strata(f, sample):
                counts[lab.label] = counts.get(lab.label, 0) + 1
        cover = None
        if "gamma" in p:
            cover = nodal.critical_cover(f, region, float(p["gamma"]),
                                         float(p.get("r_cap", 0.05)), grid_n)
        return curves, counts, cover

    payloads, flags = [], []
    for fi, (curves, counts, cover) in enumerate(_parallel_map(one, family)):
        vals = {"function": fi, "length": curves.total_length,
                "segments": len(curves.segments), "grid_n": grid_n}
        for lab in ("C1", "C2", "C3", "C4"):
            vals[f"strata_{lab}"] = counts.get(lab, 0)
        if cover is not None:
            vals["cover_balls"] = len(cover.balls)
            vals["cover_sum_pow"] = cover.sum_pow
        payloads.append(vals)
        flags.append({"budget_ok": cover.budget_ok if cover else True})
    return _rows(config, payloads, flags)


def _run_partition_scan(config: ExperimentConfig) -> list[ReportRow]:
    region = _build_region(config)
    if not isinstance(region, Cube):
        raise ConfigError("config.region: partition-scan needs a cube region")
    p = config.params
    family = _build_family(config)
    payloads, flags = [], []
    for fi, f in enumerate(family):
        rep = partition.dividing_scan(
            f, region, int(p.get("A", 9)),
            (int(p.get("axis", 1)), float(p.get("offset", 0.0))),
            p.get("rule", "contraction"), p.get("c"), int(p.get("depth", 1)))
        for row in rep.csv_rows():
            payloads.append({"function": fi, **row})
            flags.append({"E_Q": rep.E_Q,
                          "count_half": rep.count_half,
                          "count_contraction": rep.count_contraction})
    return _rows(config, payloads, flags)


def _run_propagation(config: ExperimentConfig) -> list[ReportRow]:
    p = config.params
    kind = p.get("family_kind", "harmonic-sine")
    if kind == "harmonic-sine":
        members, Q, face = partition.harmonic_sine_family(
            [int(m) for m in p.get("m_values", range(2, 9))])
    elif kind == "linear-ramp":
        members, Q, face = partition.linear_ramp_family(
            [float(e) for e in p.get("eps_values", [0.5, 0.1, 0.02, 0.004])])
    else:
        raise ConfigError(f"config.params.family_kind: unknown kind {kind!r}")
    rep = partition.cauchy_propagation_experiment(members, Q, face,
                                                  grid_n=int(p.get("grid_n", 512)))
    payloads, flags = [], []
    for rec in rep.records:
        payloads.append({"label": rec.label, "epsilon": rec.epsilon,
                         "sup_half": rec.sup_half, "sup_trap": rec.sup_trap})
        flags.append({"included": rec.included, "alpha_emp": rep.alpha_emp,
                      "alpha_trap": rep.alpha_trap})
    return _rows(config, payloads, flags)


def _run_f_recursion(config: ExperimentConfig) -> list[ReportRow]:
    region = _build_region(config)
    if not isinstance(region, Cube):
        raise ConfigError("config.region: f-recursion needs a cube region")
    p = config.params
    family = _build_family(config)
    scales = [float(s) for s in p.get("scales", [1.0, 0.5, 0.25])]
    cubes = [Cube(region.center, region.half_width * s) for s in scales]
    fc = partition.f_recursion(family, cubes, p.get("A2"), p.get("c"),
                               p.get("E_grid"), grid_n=int(p.get("grid_n", 256)))
    payloads = [dict(row) for row in fc.csv_rows()]
    flags = [{"alpha": fc.alpha, "C_envelope": fc.C_envelope} for _ in payloads]
    return _rows(config, payloads, flags)


def _run_decomposition(config: ExperimentConfig) -> list[ReportRow]:
    metric = _build_metric(config)
    region = _build_region(config)
    p = config.params
    radii = [float(r) for r in p.get("radii", [0.05, 0.1, 0.15])]
    family = _build_family(config)
    payloads, flags = [], []
    for fi, f in enumerate(family):
        for r in radii:
            d = proof_decomposition(f, metric, region.center, r,
                                    n_r=int(p.get("n_r", 4096)),
                                    n_theta=int(p.get("n_theta", 16384)))
            payloads.append({"function": fi, "r": r, "D1": d.D1, "D2": d.D2,
                             "D3": d.D3, "D4": d.D4, "D": d.D,
                             "residual": d.residual,
                             "d4_ratio": d.d4_ratio, "d2_ratio": d.d2_ratio})
            flags.append({"d3_ok": d.d3_ok})
    return _rows(config, payloads, flags)


def _run_compare(config: ExperimentConfig) -> list[ReportRow]:
    from . import solver as solver_mod
    from .polynomials import almansi_compose, circular_harmonic
    p = config.params
    eps = float(p.get("eps_coeff", 0.05))
    n_r = int(p.get("n_r", 96))
    n_theta = int(p.get("n_theta", 192))
    deg = int(p.get("boundary_degree", 3))
    op = (solver_mod.linear_coefficient_operator(eps) if eps != 0.0
          else solver_mod.identity_operator())
    f = almansi_compose(circular_harmonic(deg, "cos"),
                        circular_harmonic(max(deg - 2, 0), "sin", 0.5))
    ball = Ball(np.zeros(2), 1.0)
    u_field, v_field = solver_mod.solve_split_biharmonic(
        op, ball, f, f.v_harmonic, n_r=n_r, n_theta=n_theta, method="pcg")
    rep = solver_mod.constant_coefficient_compare(op, u_field, v_field)
    payload = {"eps_coeff": eps, "omega": rep.omega,
               "distance_u": rep.distance_u, "distance_v": rep.distance_v,
               "ratio": rep.ratio, "boundary_norm": rep.boundary_norm}
    return _rows(config, [payload], [{"residual_u": rep.input_residual_u,
                                      "residual_v": rep.input_residual_v}])


_HANDLERS = {
    "frequency-scan": _run_frequency_scan,
    "doubling-scan": _run_doubling_scan,
    "nodal-measure": _run_nodal_measure,
    "partition-scan": _run_partition_scan,
    "propagation": _run_propagation,
    "f-recursion": _run_f_recursion,
    "decomposition": _run_decomposition,
    "compare": _run_compare,
}


# ---------------------------------------------------------------------------
# emission


def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def emit_report(rows: list[ReportRow], fmt: str, path_base) -> list[Path]:
    """Write rows to <path_base>.csv or .json; output is byte-stable.

    CSV columns are the union of row keys in first-seen order; floats are
    written with repr (shortest round-trip), so identical inputs give
    identical bytes.
    """
    path_base = Path(path_base)
    path_base.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        columns: list[str] = []
        flats = [row.flat() for row in rows]
        for flat in flats:
            for key in flat:
                if key not in columns:
                    columns.append(key)
        lines = [",".join(columns)]
        for flat in flats:
            lines.append(",".join(_format_value(flat.get(c, "")) for c in columns))
        path = path_base.with_suffix(".csv")
        path.write_text("\n".join(lines) + "\n")
        return [path]
    if fmt == "json":
        path = path_base.with_suffix(".json")
        payload = [row.flat() for row in rows]
        path.write_text(json.dumps(payload, indent=1, sort_keys=False) + "\n")
        return [path]
    raise ConfigError(f"config.output.format: unknown format {fmt!r}")


def run_config_file(path) -> list[Path]:
    """Load, validate, run, and emit one experiment config file."""
    with open(path) as fh:
        payload = json.load(fh)
    config = parse_config(payload)
    rows = run_experiment(config)
    out = config.output
    out_dir = Path(out.get("dir", "nodal-lab-out"))
    fmt = out.get("format", "csv")
    return emit_report(rows, fmt, out_dir / config.experiment)


def verify_suite(level: str = "fast", out_dir=None, quiet: bool = False) -> dict:
    """Run the acceptance criteria; see the acceptance module for the list.

    The full level also re-runs everything and byte-compares the two report
    files (the determinism criterion).  Returns a summary dict; pass/fail
    lines go to stdout unless quiet.
    """
    from . import acceptance
    return acceptance.run_suite(level, out_dir=out_dir, quiet=quiet)
