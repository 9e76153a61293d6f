"""Experiment registry, config schema and result files.

A run is described by one JSON document::

    {"experiment": "bh-variance", "seed": 20240601, "format": "csv",
     "output": "results/bh-variance.csv", "parameters": {"n": 100, "nu": [0.1, 1, 10]}}

Each experiment declares the parameter keys it needs and returns one or more
named tables. The first table goes to the output path, the others next to it
as ``<stem>.<table>.<ext>``. CSV files start with ``#`` metadata lines
followed by a header row; floats carry 17 significant digits.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pandas as pd

from quench_lab import __version__
from quench_lab.aqc import (
    ScanConfig,
    SectorPolicy,
    WeightRule,
    build_h_in_x,
    build_h_in_xy,
    build_h_out,
    compare_schemes,
    gap_scan,
    random_ec3_instance,
    runtime_estimate,
)
from quench_lab.bosehubbard import (
    BHParams,
    SweepThresholds,
    adiabaticity_parameter,
    frozen_number_variance,
    horizon_forms,
    simulate_bh_sweep,
)
from quench_lab.common import DEFAULT_SEED, MASK64, derive_seed, load_json_document, sibling_path
from quench_lab.dispersion import (
    CouplingMatrix,
    classify_dispersion,
    coupling_eigenvalues,
    dispersion_from_dict,
    horizon_shrink_rate,
    horizon_size,
    is_divergent,
    landscape_minimum,
    phase_of_mixture,
)
from quench_lab.errors import ConfigError, PreconditionError, SingularFitError
from quench_lab.modes import IntegratorConfig
from quench_lab.scaling import (
    BathSpectrum,
    FirstOrderModel,
    first_order_gap,
    log_gap_regression,
    scheme_vulnerability_report,
    tfim_dense_gap,
    tfim_gap,
)
from quench_lab.spinor import SpinorQuenchParams, scaling_fit, winding_statistics
from quench_lab.sweeps import Exponential, profile_from_dict


logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
FLOAT_FORMAT = "%.17g"
REQUIRED = object()


# --------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class Field:
    kind: str
    default: Any = REQUIRED
    choices: tuple[str, ...] | None = None

    @property
    def required(self) -> bool:
        return self.default is REQUIRED


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_integer(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


TYPE_CHECKS: dict[str, Callable[[Any], bool]] = {
    "number": _is_number,
    "integer": _is_integer,
    "string": lambda value: isinstance(value, str),
    "boolean": lambda value: isinstance(value, bool),
    "object": lambda value: isinstance(value, dict),
    "number list": lambda value: isinstance(value, list) and bool(value) and all(_is_number(v) for v in value),
    "integer list": lambda value: isinstance(value, list) and bool(value) and all(_is_integer(v) for v in value),
}


def _type_ok(value: Any, spec: Field) -> bool:
    if value is None and not spec.required and spec.default is None:
        return True
    return TYPE_CHECKS[spec.kind](value)


TOP_LEVEL: dict[str, Field] = {
    "experiment": Field("string"),
    "parameters": Field("object"),
    "seed": Field("integer", DEFAULT_SEED),
    "output": Field("string", None),
    "format": Field("string", "csv", FORMATS),
    "description": Field("string", None),
}


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _check_block(block: dict[str, Any], schema: dict[str, Field], prefix: str, report: ValidationReport) -> None:
    for key in block:
        if key not in schema:
            report.warnings.append(f"unknown key {prefix}{key}")
    for key, spec in schema.items():
        if key not in block:
            if spec.required:
                report.errors.append(f"missing required key {prefix}{key}")
            continue
        value = block[key]
        if not _type_ok(value, spec):
            report.errors.append(f"{prefix}{key}: expected {spec.kind}, got {type(value).__name__}")
        elif spec.choices is not None and value not in spec.choices:
            report.errors.append(f"{prefix}{key}: expected one of {', '.join(spec.choices)}, got {value!r}")


def validate_document(doc: dict[str, Any]) -> ValidationReport:
    """Schema check of a config document without running anything."""
    report = ValidationReport()
    _check_block(doc, TOP_LEVEL, "", report)
    seed = doc.get("seed")
    if _is_integer(seed) and not 0 <= seed <= MASK64:
        report.errors.append("seed: expected an unsigned 64-bit integer")
    name = doc.get("experiment")
    if isinstance(name, str) and name not in EXPERIMENTS:
        report.errors.append(f"experiment: unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}")
    elif isinstance(name, str) and isinstance(doc.get("parameters"), dict):
        _check_block(doc["parameters"], EXPERIMENTS[name].schema, "parameters.", report)
    return report


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    parameters: dict[str, Any]
    seed: int = DEFAULT_SEED
    output: str | None = None
    format: str = "csv"


def build_config(doc: dict[str, Any], seed: int | None = None, output: str | None = None, fmt: str | None = None) -> ExperimentConfig:
    """Validated config with defaults filled in; CLI overrides win over the document."""
    report = validate_document(doc)
    for warning in report.warnings:
        logger.warning(warning)
    if not report.ok:
        raise ConfigError("; ".join(report.errors))
    schema = EXPERIMENTS[doc["experiment"]].schema
    parameters = {key: doc["parameters"].get(key, spec.default) for key, spec in schema.items()}
    if seed is not None and not 0 <= seed <= MASK64:
        raise ConfigError("--seed: expected an unsigned 64-bit integer")
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError(f"--format: expected one of {', '.join(FORMATS)}")
    return ExperimentConfig(
        experiment=doc["experiment"],
        parameters=parameters,
        seed=doc.get("seed", DEFAULT_SEED) if seed is None else seed,
        output=output if output is not None else doc.get("output"),
        format=fmt or doc.get("format", "csv"),
    )


def load_config(path: str | Path, **overrides: Any) -> ExperimentConfig:
    return build_config(load_json_document(path), **overrides)


# --------------------------------------------------------------------------
# experiments

Tables = dict[str, pd.DataFrame]


def _horizon(params: dict[str, Any], seed: int, threads: int) -> Tables:
    c = profile_from_dict(params["profile"])
    t_end = math.inf if params["t_end"] is None else float(params["t_end"])
    rows = []
    for t in params["times"]:
        size = horizon_size(c, float(t), t_end, params["method"])
        rate = math.nan if is_divergent(size) else horizon_shrink_rate(c, float(t), t_end=t_end)
        speed = float(c(float(t)))
        rows.append(
            {
                "t": float(t),
                "c": speed,
                "horizon": size,
                "divergent": is_divergent(size),
                "shrink_rate": rate,
                "identity_residual": abs(rate + speed) / speed if speed > 0 else math.nan,
            }
        )
    return {"horizon": pd.DataFrame(rows)}


def _bh_params(params: dict[str, Any]) -> BHParams:
    return BHParams(float(params["n"]), float(params["U"]), float(params["ell"]), profile_from_dict(params["J"]))


def _bh_sweep(params: dict[str, Any], seed: int, threads: int) -> Tables:
    p = _bh_params(params)
    cfg = IntegratorConfig(method=params["method"], rtol=params["rtol"], atol=params["atol"])
    thresholds = SweepThresholds(window_fraction=params["window_fraction"], window_samples=params["window_samples"])
    result = simulate_bh_sweep(p, params["k_list"], params["t0"], params["t1"], cfg, thresholds, threads)
    forms = horizon_forms(p, params["t0"])
    summary = result.summary
    return {
        "outcomes": result.to_frame(),
        "summary": pd.DataFrame(
            [
                {
                    "k": summary.k,
                    "outcome": summary.kind.value,
                    "frozen_value": summary.value,
                    "horizon_forms": forms,
                    "nu": adiabaticity_parameter(p) if isinstance(p.J, Exponential) else math.nan,
                }
            ]
        ),
    }


def _bh_variance(params: dict[str, Any], seed: int, threads: int) -> Tables:
    n = float(params["n"])
    rows = [{"nu": float(nu), "variance": frozen_number_variance(n, float(nu))} for nu in params["nu"]]
    return {"variance": pd.DataFrame(rows, columns=["nu", "variance"])}


def _dispersion(params: dict[str, Any], seed: int, threads: int) -> Tables:
    d = dispersion_from_dict(params["dispersion"])
    rows = []
    for t in params["times"]:
        result = classify_dispersion(d, float(t), float(params["k_max"]))
        rows.append(
            {
                "t": float(t),
                "kind": result.variant.value,
                "k_min": result.k_min,
                "omega2_min": result.omega2_min,
                "k_crit": result.k_crit,
            }
        )
    tables = {"classification": pd.DataFrame(rows)}
    if params["coupling"] is not None:
        g = CouplingMatrix(**{key: float(params["coupling"][key]) for key in ("g11", "g22", "g12")})
        g_plus, g_minus = coupling_eigenvalues(g)
        tables["mixture"] = pd.DataFrame(
            [
                {
                    "g_plus": g_plus,
                    "g_minus": g_minus,
                    "phase": phase_of_mixture(g).value,
                    "fraction": landscape_minimum(g_minus, float(params["quartic"])),
                }
            ]
        )
    return tables


SPINOR_KEYS = ("L", "a", "q_initial", "q_final", "spin_coupling", "density", "stiffness", "t_grow", "cutoff_k")


def _spinor(params: dict[str, Any], seed: int, threads: int) -> Tables:
    p = SpinorQuenchParams(seed=seed, **{key: params[key] for key in SPINOR_KEYS})
    report = winding_statistics(
        p, params["radii"], params["samples"], threads=threads, check_identity=params["check_identity"]
    )
    tables = {"windings": report.to_frame()}
    try:
        fit = scaling_fit(report)
    except (PreconditionError, SingularFitError) as exc:
        logger.warning("no scaling fit: %s", exc)
        return tables
    models = fit.models.copy()
    models["best"] = models["model"] == fit.best
    models["log_slope"] = fit.log_slope
    tables["fit"] = models
    return tables


def _instance(params: dict[str, Any], seed: int, index: int):
    return random_ec3_instance(
        params["n"], params["m"], derive_seed(seed, index), require_unique_solution=params["unique_solution"]
    )


def _aqc_compare(params: dict[str, Any], seed: int, threads: int) -> Tables:
    batch = [_instance(params, seed, i) for i in range(params["instances"])]
    x_cfg = ScanConfig(points=params["points"], policy=SectorPolicy(params["x_policy"]), method=params["method"], seed=seed)
    xy_cfg = ScanConfig(points=params["points"], policy=SectorPolicy(params["xy_policy"]), method=params["method"], seed=seed)
    comparison = compare_schemes(batch, x_cfg, xy_cfg, WeightRule(params["weight_rule"]), threads)
    summary = [{"metric": f"median_{key}", "value": value} for key, value in comparison.medians.items()]
    summary += [{"metric": f"wins_{key}", "value": float(value)} for key, value in comparison.wins.items()]
    return {"instances": comparison.table, "summary": pd.DataFrame(summary)}


def _aqc_scan(params: dict[str, Any], seed: int, threads: int) -> Tables:
    inst = _instance(params, seed, 0)
    h_out = build_h_out(inst)
    if params["scheme"] == "x":
        h_in = build_h_in_x(inst, WeightRule(params["weight_rule"]))
    else:
        h_in = build_h_in_xy(inst)
    cfg = ScanConfig(
        points=params["points"], policy=SectorPolicy(params["policy"]), method=params["method"], seed=seed, threads=threads
    )
    scan = gap_scan(h_in, h_out, cfg)
    summary = {
        "scheme": params["scheme"],
        "clauses": len(inst.clauses),
        "policy": scan.policy.value,
        "sector": scan.sector,
        "min_gap": scan.min_gap,
        "g_min": scan.g_min,
        "runtime": runtime_estimate(scan, allow_crossing=True),
    }
    return {"scan": scan.to_frame(), "summary": pd.DataFrame([summary])}


def _scaling(params: dict[str, Any], seed: int, threads: int) -> Tables:
    model = FirstOrderModel(float(params["overlap_decay"]), params["norm_poly_degree"])
    gaps = [first_order_gap(model, n) for n in params["ns"]]
    first_order = pd.DataFrame({"n": params["ns"], "gap": gaps, "log_gap": np.log(gaps)})
    fit = log_gap_regression(model, params["ns"])
    regression = pd.DataFrame(
        [
            {
                "slope": fit.slope,
                "log_overlap_decay": math.log(model.overlap_decay),
                "intercept": fit.intercept,
                "max_residual": fit.max_residual,
            }
        ]
    )
    g, J = float(params["g"]), float(params["J"])
    rows = []
    for n in params["tfim_ns"]:
        gap = tfim_gap(n, g, J)
        dense = tfim_dense_gap(n, g, J) if n <= params["dense_max_n"] else math.nan
        rows.append({"n": n, "g": g, "gap": gap, "gap_times_n": gap * n, "dense_gap": dense})
    return {"first_order": first_order, "regression": regression, "tfim": pd.DataFrame(rows)}


SECOND_ORDER_GAPS: dict[str, Callable[[float], Callable[[int], float]]] = {
    "tfim": lambda J: lambda n: tfim_gap(n, 1.0, J),
    "inverse": lambda J: lambda n: 2.0 * math.pi * J / n,
}


def _decoherence(params: dict[str, Any], seed: int, threads: int) -> Tables:
    cutoff = math.inf if params["cutoff"] is None else float(params["cutoff"])
    bath = BathSpectrum(float(params["eta"]), float(params["exponent"]), cutoff)
    model = FirstOrderModel(float(params["overlap_decay"]), params["norm_poly_degree"])
    second_order = SECOND_ORDER_GAPS[params["second_order"]](float(params["J"]))
    report = scheme_vulnerability_report(model, second_order, bath, params["ns"], float(params["prefactor"]))
    return {"report": report}


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    schema: dict[str, Field]
    runner: Callable[[dict[str, Any], int, int], Tables]


INTEGRATOR_FIELDS = {
    "method": Field("string", "DOP853", ("DOP853", "RK45")),
    "rtol": Field("number", 1e-11),
    "atol": Field("number", 1e-13),
}
INSTANCE_FIELDS = {
    "n": Field("integer"),
    "m": Field("integer"),
    "unique_solution": Field("boolean", True),
    "points": Field("integer", 33),
    "method": Field("string", "auto", ("auto", "dense", "lanczos")),
    "weight_rule": Field("string", WeightRule.CLAUSE_DEGREE.value, tuple(rule.value for rule in WeightRule)),
}
POLICIES = tuple(policy.value for policy in SectorPolicy)

EXPERIMENTS: dict[str, Experiment] = {
    experiment.name: experiment
    for experiment in (
        Experiment(
            "horizon",
            "Analogue horizon size and shrink rate of a sound-speed profile.",
            {
                "profile": Field("object"),
                "times": Field("number list"),
                "t_end": Field("number", None),
                "method": Field("string", "auto", ("auto", "quad")),
            },
            _horizon,
        ),
        Experiment(
            "bh-sweep",
            "Bose-Hubbard hopping sweep: late number variance of low-k phase modes.",
            {
                "n": Field("number"),
                "U": Field("number"),
                "ell": Field("number", 1.0),
                "J": Field("object"),
                "k_list": Field("number list"),
                "t0": Field("number"),
                "t1": Field("number"),
                "window_fraction": Field("number", 0.9),
                "window_samples": Field("integer", 4001),
                **INTEGRATOR_FIELDS,
            },
            _bh_sweep,
        ),
        Experiment(
            "bh-variance",
            "Frozen number variance after an exponential hopping switch-off.",
            {"n": Field("number"), "nu": Field("number list")},
            _bh_variance,
        ),
        Experiment(
            "dispersion",
            "Instability class of a dispersion template over time; optional mixture coupling analysis.",
            {
                "dispersion": Field("object"),
                "times": Field("number list"),
                "k_max": Field("number"),
                "coupling": Field("object", None),
                "quartic": Field("number", 0.0),
            },
            _dispersion,
        ),
        Experiment(
            "spinor",
            "Vortex winding statistics of quenched spinor fields with the R / R ln R / R^2 fit.",
            {
                "samples": Field("integer"),
                "radii": Field("number list"),
                "L": Field("integer", 64),
                "a": Field("number", 1.0),
                "q_initial": Field("number", 2.0),
                "q_final": Field("number", 0.0),
                "spin_coupling": Field("number", -0.5),
                "density": Field("number", 1.0),
                "stiffness": Field("number", 1.0),
                "t_grow": Field("number", 6.0),
                "cutoff_k": Field("number", None),
                "check_identity": Field("boolean", True),
            },
            _spinor,
        ),
        Experiment(
            "aqc-compare",
            "Transverse-field versus XY-network runtime estimates on random exact cover-3 instances.",
            {
                **INSTANCE_FIELDS,
                "instances": Field("integer"),
                "x_policy": Field("string", SectorPolicy.FULL.value, POLICIES),
                "xy_policy": Field("string", SectorPolicy.SOLUTION.value, POLICIES),
            },
            _aqc_compare,
        ),
        Experiment(
            "aqc-scan",
            "Gap scan of one exact cover-3 instance along the interpolation.",
            {
                **INSTANCE_FIELDS,
                "scheme": Field("string", "xy", ("x", "xy")),
                "policy": Field("string", SectorPolicy.INITIAL.value, POLICIES),
            },
            _aqc_scan,
        ),
        Experiment(
            "scaling",
            "First-order gap model with log-linear regression and the transverse-field Ising gap.",
            {
                "overlap_decay": Field("number"),
                "norm_poly_degree": Field("integer", 0),
                "ns": Field("integer list"),
                "tfim_ns": Field("integer list"),
                "g": Field("number", 1.0),
                "J": Field("number", 1.0),
                "dense_max_n": Field("integer", 10),
            },
            _scaling,
        ),
        Experiment(
            "decoherence",
            "Decoherence error versus size for first- and second-order transitions.",
            {
                "eta": Field("number"),
                "exponent": Field("number", 1.0),
                "cutoff": Field("number", None),
                "overlap_decay": Field("number"),
                "norm_poly_degree": Field("integer", 0),
                "ns": Field("integer list"),
                "second_order": Field("string", "tfim", tuple(SECOND_ORDER_GAPS)),
                "J": Field("number", 1.0),
                "prefactor": Field("number", 1.0),
            },
            _decoherence,
        ),
    )
}


def experiments_frame() -> pd.DataFrame:
    rows = []
    for experiment in EXPERIMENTS.values():
        required = [key for key, spec in experiment.schema.items() if spec.required]
        rows.append({"experiment": experiment.name, "required": ", ".join(required), "description": experiment.description})
    return pd.DataFrame(rows)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> Tables:
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    experiment = EXPERIMENTS[config.experiment]
    logger.info("running %s with seed %d on %d thread(s)", experiment.name, config.seed, threads)
    tables = experiment.runner(config.parameters, config.seed, threads)
    for name, frame in tables.items():
        logger.debug("table %s: %d rows", name, len(frame))
    return tables


# --------------------------------------------------------------------------
# result files


def result_metadata(config: ExperimentConfig, tables: Tables) -> dict[str, str]:
    return {
        "generator": f"quench-lab {__version__}",
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "experiment": config.experiment,
        "seed": str(config.seed),
        "tables": ",".join(tables),
        "parameters": json.dumps(config.parameters, sort_keys=True),
    }


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _write_one(frame: pd.DataFrame, path: Path, fmt: str, metadata: dict[str, str], name: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {**metadata, "table": name}
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as handle:
            for key, value in header.items():
                handle.write(f"# {key}: {value}\n")
            frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return
    split = frame.to_dict(orient="split", index=False)
    payload = {"metadata": header, "columns": split["columns"], "data": split["data"]}
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n", encoding="utf-8")


def write_result(tables: Tables, path: str | Path, fmt: str, metadata: dict[str, str]) -> list[Path]:
    """Write the first table to ``path`` and the rest to sibling files; returns every path written."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown output format {fmt!r}")
    main = Path(path)
    written = []
    for i, (name, frame) in enumerate(tables.items()):
        target = main if i == 0 else sibling_path(main, name)
        _write_one(frame, target, fmt, metadata, name)
        written.append(target)
    return written


@dataclass(eq=False)
class ResultFile:
    metadata: dict[str, str]
    tables: Tables


def _read_one(path: Path) -> tuple[dict[str, str], pd.DataFrame]:
    if not path.exists():
        raise FileNotFoundError(f"Result file not found: {path}")
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        return payload["metadata"], pd.DataFrame(payload["data"], columns=payload["columns"])
    metadata, skip = {}, 0
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(": ")
            metadata[key] = value
            skip += 1
    return metadata, pd.read_csv(path, skiprows=skip, float_precision="round_trip")


def read_result(path: str | Path) -> ResultFile:
    """Read a result file and every sibling table listed in its metadata."""
    main = Path(path)
    metadata, frame = _read_one(main)
    names = [name for name in metadata.get("tables", "").split(",") if name]
    if not names:
        raise ConfigError(f"{main}: no table list in the metadata block")
    tables = {names[0]: frame}
    for name in names[1:]:
        tables[name] = _read_one(sibling_path(main, name))[1]
    return ResultFile(metadata, tables)
