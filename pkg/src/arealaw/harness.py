"""Batch experiment driver: JSON configs in, deterministic check reports out.

A config names one experiment, the model/channel/profile it runs on and the
parameter grids. ``run`` evaluates every grid point and returns a
``CheckReport`` whose records are in grid order; ``emit`` writes it as CSV
and/or JSON. Any randomness is drawn from streams keyed by (root seed, task
index), so the output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import fcs, gibbs_peps, lattice, measures, singlet, thermal
from .qstate import (
    CapExceededError,
    Observable,
    SiteSpace,
    config_cap,
    dim_cap,
    ghz_state,
    product_state,
    random_density_matrix,
    random_hermitian,
    DensityMatrix,
)

SCHEMA_VERSION = 1
EXPERIMENTS = (
    "classical-area",
    "quantum-area",
    "correlator-bound",
    "shell-chain",
    "concavity",
    "fcs-decay",
    "fcs-area",
    "gibbs-peps",
    "singlet-scaling",
    "saturation",
)
DEFAULT_TOLERANCES = {"check": 1e-9, "saturation": 1e-9, "reconstruction": 1e-9}
PRESET_DIR_ENV = "AREALAW_PRESET_DIR"


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# -- schema ------------------------------------------------------------------------

_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_NUM_LIST = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}
_MATRIX = {
    "oneOf": [
        {"type": "array"},
        {
            "type": "object",
            "properties": {"re": {"type": "array"}, "im": {"type": "array"}},
            "required": ["re"],
            "additionalProperties": False,
        },
    ]
}
_MODEL_SPEC = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "geometry": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["chain", "ring", "patch"]},
                "n": {"type": "integer", "minimum": 1},
                "rows": {"type": "integer", "minimum": 1},
                "cols": {"type": "integer", "minimum": 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "local_dim": {"type": "integer", "minimum": 2},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "sites": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                    "coefficients": {"type": "object", "additionalProperties": {"type": "number"}},
                    "matrix": _MATRIX,
                    "table": {"type": "array"},
                    "direction": {"enum": ["horizontal", "vertical"]},
                },
                "required": ["sites"],
                "additionalProperties": False,
            },
        },
        "beta_grid": _NUM_LIST,
    },
    "required": ["geometry", "local_dim", "terms"],
    "additionalProperties": False,
}
_MODEL_REF = {"oneOf": [{"type": "string"}, _MODEL_SPEC]}
_CHANNEL_REF = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {
                "preset": {"type": "string"},
                "seed": {"type": "integer", "minimum": 0},
                "bond_dim": {"type": "integer", "minimum": 1},
                "phys_dim": {"type": "integer", "minimum": 1},
                "n_kraus": {"type": "integer", "minimum": 1},
                "param": {"type": "number"},
            },
            "required": ["preset"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "bond_dim": {"type": "integer", "minimum": 1},
                "phys_dim": {"type": "integer", "minimum": 1},
                "kraus": {"type": "array", "minItems": 1},
                "fixed_point": {"type": "array"},
                "name": {"type": "string"},
            },
            "required": ["bond_dim", "phys_dim", "kraus"],
            "additionalProperties": False,
        },
    ]
}
_STATE_REF = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["ghz", "product", "pure-product"]},
        "n": {"type": "integer", "minimum": 2},
    },
    "required": ["kind", "n"],
    "additionalProperties": False,
}
_PAIR_REF = {
    "oneOf": [
        {"enum": ["ising", "zz", "cluster-block", "zero"]},
        {
            "type": "object",
            "properties": {"matrix": _MATRIX, "local_dim": {"type": "integer", "minimum": 2}},
            "required": ["matrix", "local_dim"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "arealaw experiment config",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "models": {"type": "array", "items": _MODEL_REF, "minItems": 1},
        "states": {"type": "array", "items": _STATE_REF, "minItems": 1},
        "channel": _CHANNEL_REF,
        "profile": {
            "type": "object",
            "properties": {
                "family": {"enum": ["exponential", "lorentzian", "custom"]},
                "parameter": {"type": "number", "exclusiveMinimum": 0},
                "table": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "x_max": {"type": "integer", "minimum": 1},
            },
            "required": ["family"],
            "additionalProperties": False,
        },
        "peps": {
            "type": "object",
            "properties": {
                "horizontal": _PAIR_REF,
                "vertical": _PAIR_REF,
                "geometry": {
                    "type": "object",
                    "properties": {
                        "kind": {"enum": ["ring", "patch"]},
                        "n": {"type": "integer", "minimum": 3},
                        "rows": {"type": "integer", "minimum": 1},
                        "cols": {"type": "integer", "minimum": 1},
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
            },
            "required": ["horizontal", "geometry"],
            "additionalProperties": False,
        },
        "beta_grid": _NUM_LIST,
        "L_grid": _INT_LIST,
        "R_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2},
        "regions": {
            "oneOf": [
                {"const": "contiguous"},
                {"type": "array", "items": {"type": "array", "items": {"type": "integer"}, "minItems": 1}, "minItems": 1},
            ]
        },
        "block": {
            "type": "object",
            "properties": {"n_a": {"type": "integer", "minimum": 1}, "n_b": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "block_lengths": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "end_blocks": {"type": "boolean"},
        "purify": {"type": "boolean"},
        "fit_window": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "draws": {"type": "integer", "minimum": 1},
        "n_sites": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2},
        "expect": {
            "type": "object",
            "properties": {
                "area_law": {"enum": ["holds", "violated", "inconclusive"]},
                "xi_m_finite": {"type": "boolean"},
                "saturation": {"oneOf": [{"const": "none"}, {"type": "integer", "minimum": 1}]},
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string", "minLength": 1}, "format": {"enum": ["csv", "json", "both"]}},
            "required": ["path"],
            "additionalProperties": False,
        },
        "workers": {"type": "integer", "minimum": 1},
    },
    "required": ["schema_version", "experiment"],
    "additionalProperties": False,
}

# keys each experiment needs beyond the common ones
_REQUIRED = {
    "classical-area": ("models", "beta_grid"),
    "quantum-area": ("models", "beta_grid"),
    "correlator-bound": ("seed", "draws"),
    "shell-chain": ("seed", "draws"),
    "concavity": (),
    "fcs-decay": ("channel", "L_grid"),
    "fcs-area": ("channel", "block_lengths"),
    "gibbs-peps": ("peps", "beta_grid"),
    "singlet-scaling": ("profile", "R_grid", "L_grid"),
    "saturation": (),
}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "arealaw check report",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "config_digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "check": {"type": "string"},
                    "inputs": {"type": "object"},
                    "lhs": {"type": ["number", "string", "boolean", "null"]},
                    "rhs": {"type": ["number", "string", "boolean", "null"]},
                    "slack": {"type": ["number", "string", "null"]},
                    "pass": {"type": "boolean"},
                },
                "required": ["check", "inputs", "lhs", "rhs", "slack", "pass"],
            },
        },
        "summary": {
            "type": "object",
            "properties": {
                "pass_count": {"type": "integer", "minimum": 0},
                "fail_count": {"type": "integer", "minimum": 0},
                "fits": {"type": "object"},
            },
            "required": ["pass_count", "fail_count", "fits"],
            "additionalProperties": False,
        },
    },
    "required": ["schema_version", "experiment", "config_digest", "records", "summary"],
    "additionalProperties": False,
}


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


# keys that change how a run is executed or stored, never what it computes
_EXECUTION_KEYS = ("workers", "output")


def config_digest(config: dict) -> str:
    """sha256 of the canonical config, ignoring worker count and output path."""
    body = {k: v for k, v in config.items() if k not in _EXECUTION_KEYS}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def validate_config(config: dict) -> dict:
    """Schema check plus cross-field checks; returns the config with defaults."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}") from None
    exp = config["experiment"]
    missing = [k for k in _REQUIRED[exp] if k not in config]
    if missing:
        raise ConfigError(f"experiment {exp!r} needs {', '.join(missing)}")
    if exp in ("concavity", "saturation") and not ("models" in config or "states" in config):
        raise ConfigError(f"experiment {exp!r} needs models or states")
    if "models" in config and exp in ("concavity", "saturation") and "beta_grid" not in config:
        raise ConfigError(f"experiment {exp!r} on models needs beta_grid")
    if "fit_window" in config and config["fit_window"][0] > config["fit_window"][1]:
        raise ConfigError("fit_window must be [low, high] with low <= high")
    ch = config.get("channel")
    if isinstance(ch, dict) and ch.get("preset") == "random" and "seed" not in ch and "seed" not in config:
        raise ConfigError("a random channel needs a seed, either on the channel or at the top level")
    out = dict(config)
    out["tolerances"] = {**DEFAULT_TOLERANCES, **config.get("tolerances", {})}
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


# -- seeding and dispatch ----------------------------------------------------------------


def task_rng(root_seed: int, index: int) -> np.random.Generator:
    """Independent stream for task ``index`` under ``root_seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), int(index)]))


def task_seed(root_seed: int, index: int) -> int:
    return int(task_rng(root_seed, index).integers(0, 2**63 - 1))


def ordered_map(func, tasks, workers: int = 1) -> list:
    """``map`` that keeps task order; uses a process pool when workers > 1."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


# -- presets ---------------------------------------------------------------------------------

PEPS_PAIRS = {
    "ising": (gibbs_peps.ising_pair, 2, "classical Ising bond -Z Z"),
    "zz": (lambda: -gibbs_peps.ising_pair(), 2, "commuting quantum bond Z Z"),
    "cluster-block": (gibbs_peps.cluster_block_pair, 4, "cluster terms regrouped on two-qubit blocks"),
    "zero": (lambda: np.zeros((4, 4), dtype=complex), 2, "no interaction"),
}

PROFILE_PRESETS = {
    "exponential": "f(x) = exp(-x / xi), range 20 xi",
    "lorentzian": "f(x) = 1 / (x^2 + a^2), range 50 a (widened for scaling runs)",
    "custom": "f(x) given as a table over x = 1..len(table)",
}


def load_custom_presets(directory=None) -> dict:
    """User presets from ``*.json`` files ``{"name", "kind": "model"|"channel", "spec"}``."""
    directory = directory if directory is not None else os.environ.get(PRESET_DIR_ENV)
    if not directory:
        return {}
    out = {}
    for p in sorted(Path(directory).glob("*.json")):
        obj = json.loads(p.read_text())
        if set(obj) != {"name", "kind", "spec"} or obj["kind"] not in ("model", "channel"):
            raise ConfigError(f"custom preset {p.name} must have exactly name, kind (model|channel), spec")
        if obj["name"] in out:
            raise ConfigError(f"duplicate custom preset {obj['name']!r}")
        out[obj["name"]] = obj
    return out


def list_presets(custom_dir=None) -> dict:
    """Catalog of built-in and custom presets, in a stable order."""
    models = []
    for name, p in lattice.MODEL_PRESETS.items():
        h = p.build()
        models.append({
            "name": name, "kind": p.kind, "sites": h.space.site_count, "local_dim": h.space.local_dim,
            "dimension": h.space.dim, "description": p.description,
        })
    channels = []
    for name, (factory, desc) in fcs.CHANNEL_PRESETS.items():
        f = factory()
        channels.append({"name": name, "bond_dim": f.bond_dim, "phys_dim": f.phys_dim, "description": desc})
    channels.append({
        "name": "random", "bond_dim": "any", "phys_dim": "any",
        "description": "Haar-random isometry generator; needs seed, bond_dim, phys_dim, n_kraus",
    })
    custom = []
    for name, obj in load_custom_presets(custom_dir).items():
        custom.append({"name": name, "kind": obj["kind"]})
    return {
        "models": models,
        "channels": channels,
        "profiles": [{"name": k, "description": v} for k, v in PROFILE_PRESETS.items()],
        "peps_pairs": [{"name": k, "local_dim": v[1], "description": v[2]} for k, v in PEPS_PAIRS.items()],
        "custom": custom,
        "caps": {"dimension": dim_cap(), "configurations": config_cap()},
    }


def _from_json(build, spec, what):
    try:
        return build(spec)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid {what} definition: {e}") from None


def resolve_model(ref, custom: dict | None = None) -> lattice.LatticeHamiltonian:
    if isinstance(ref, dict):
        return _from_json(lattice.hamiltonian_from_json, ref, "model")
    custom = custom or {}
    if ref in custom:
        if custom[ref]["kind"] != "model":
            raise ConfigError(f"preset {ref!r} is a channel, not a model")
        h = _from_json(lattice.hamiltonian_from_json, custom[ref]["spec"], "model")
        h.name = ref
        return h
    try:
        return lattice.model_preset(ref)
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from None


def resolve_channel(ref, seed: int | None = None, custom: dict | None = None) -> fcs.FcsDescriptor:
    custom = custom or {}
    if isinstance(ref, str):
        ref = {"preset": ref}
    if "kraus" in ref:
        return _from_json(fcs.channel_from_json, ref, "channel")
    name = ref["preset"]
    if name in custom:
        if custom[name]["kind"] != "channel":
            raise ConfigError(f"preset {name!r} is a model, not a channel")
        return _from_json(fcs.channel_from_json, custom[name]["spec"], "channel")
    if name == "aklt-mixed" and "param" in ref:
        return fcs.aklt_mixed_generator(ref["param"])
    s = ref.get("seed", seed)
    try:
        return fcs.channel_preset(
            name, s, ref.get("bond_dim", 2), ref.get("phys_dim", 2), ref.get("n_kraus", 1)
        )
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from None
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _resolve_pair(ref):
    if isinstance(ref, str):
        factory, d, _ = PEPS_PAIRS[ref]
        return np.asarray(factory(), dtype=complex), d
    return lattice._matrix_from_json(ref["matrix"]), int(ref["local_dim"])


def resolve_state(ref) -> DensityMatrix:
    n = ref["n"]
    if ref["kind"] == "ghz":
        return ghz_state(n)
    if ref["kind"] == "pure-product":
        return product_state(np.diag([1.0, 0.0]), n)
    return product_state(np.diag([0.8, 0.2]), n)


def _model_name(ref) -> str:
    return ref if isinstance(ref, str) else ref.get("name", "custom")


# -- report ----------------------------------------------------------------------------------


@dataclass
class CheckReport:
    experiment: str
    config_digest: str
    records: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    csv_columns: tuple = ()
    csv_rows: list = field(default_factory=list)

    @property
    def pass_count(self) -> int:
        return sum(1 for r in self.records if r["pass"])

    @property
    def fail_count(self) -> int:
        return len(self.records) - self.pass_count

    @property
    def passed(self) -> bool:
        return self.fail_count == 0

    def to_json(self) -> dict:
        return _plain({
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "config_digest": self.config_digest,
            "records": self.records,
            "summary": {"pass_count": self.pass_count, "fail_count": self.fail_count, "fits": self.fits},
        })

    def json_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_columns)
        for row in self.csv_rows:
            w.writerow([_csv_cell(row[c]) for c in self.csv_columns])
        return buf.getvalue()


def _plain(x):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _csv_cell(v) -> str:
    if isinstance(v, (list, tuple)):
        return " ".join(str(_plain(x)) for x in v)
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def validate_report(obj: dict) -> None:
    jsonschema.validate(obj, REPORT_SCHEMA)


def emit(report: CheckReport, path, fmt: str = "both") -> list[Path]:
    """Write ``<path>.csv`` and/or ``<path>.json``; returns the files written."""
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        p = base.with_suffix(".csv")
        p.write_text(report.csv_text())
        written.append(p)
    if fmt in ("json", "both"):
        obj = report.to_json()
        validate_report(obj)
        p = base.with_suffix(".json")
        p.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")
        written.append(p)
    return written


def _record(check, inputs, lhs, rhs, slack, ok, **extra) -> dict:
    r = {"check": check, "inputs": inputs, "lhs": lhs, "rhs": rhs, "slack": slack, "pass": bool(ok)}
    r.update(extra)
    return r


# -- experiments ----------------------------------------------------------------------------


def _regions_for(h, spec):
    if spec is None or spec == "contiguous":
        return h.contiguous_regions()
    return [tuple(r) for r in spec]


def _area_task(task):
    ref, beta, regions_spec, quantum, custom = task
    h = resolve_model(ref, custom)
    if h.classical == quantum:
        kind = "quantum" if quantum else "classical"
        raise ConfigError(f"model {_model_name(ref)!r} is not a {kind} Hamiltonian")
    g = thermal.build_gibbs(h, beta)
    out = []
    for a in _regions_for(h, regions_spec):
        split = thermal.BoundarySplit.from_region(h, a)
        rep = thermal.quantum_thermal_area_check(g, split) if quantum else thermal.classical_area_check(g, split)
        out.append(rep)
    return out


def _run_area(cfg, report, quantum: bool, custom):
    tasks = [(ref, float(b), cfg.get("regions"), quantum, custom) for ref in cfg["models"] for b in cfg["beta_grid"]]
    results = ordered_map(_area_task, tasks, cfg.get("workers", 1))
    cols = ["model", "beta", "boundary_size", "region_a", "I_AB", "bound_rhs"]
    if quantum:
        cols.append("simple_bound")
    report.csv_columns = tuple(cols + ["pass"])
    for (ref, beta, *_), reps in zip(tasks, results):
        for rep in reps:
            v = rep.values
            inputs = {"model": _model_name(ref), "beta": beta, "region_a": list(rep.region_a)}
            rhs = v["rhs"] if quantum else v["bound"]
            extra = {k: val for k, val in v.items() if k not in ("I_AB",)}
            report.records.append(_record(rep.check_name, inputs, v["I_AB"], rhs, rep.slack, rep.passed, values=extra))
            row = {"model": _model_name(ref), "beta": beta, "boundary_size": rep.boundary_size,
                   "region_a": list(rep.region_a), "I_AB": v["I_AB"], "bound_rhs": rhs, "pass": rep.passed}
            if quantum:
                row["simple_bound"] = v["simple_bound"]
            report.csv_rows.append(row)


def _random_split(rng, n):
    perm = rng.permutation(n)
    size_a = int(rng.integers(1, n))
    size_b = int(rng.integers(1, n - size_a + 1))
    a = tuple(sorted(int(x) for x in perm[:size_a]))
    b = tuple(sorted(int(x) for x in perm[size_a:size_a + size_b]))
    return a, b


def _correlator_task(task):
    root, index, lo, hi = task
    rng = task_rng(root, index)
    n = int(rng.integers(lo, hi + 1))
    space = SiteSpace.chain(n, 2)
    rank = int(rng.integers(1, space.dim + 1))
    rho = DensityMatrix(space, random_density_matrix(rng, space.dim, rank))
    a, b = _random_split(rng, n)
    ma = Observable(space.subspace(a), random_hermitian(rng, 2 ** len(a)))
    mb = Observable(space.subspace(b), random_hermitian(rng, 2 ** len(b)))
    rec = measures.check_correlator_bound(rho, ma, mb)
    return n, rank, a, b, rec


def _run_correlator(cfg, report):
    lo, hi = cfg.get("n_sites", [2, 4])
    tol = cfg["tolerances"]["check"]
    tasks = [(cfg["seed"], i, lo, hi) for i in range(cfg["draws"])]
    report.csv_columns = ("draw", "n_sites", "region_a", "region_b", "lhs", "rhs", "slack", "pass")
    for i, (n, rank, a, b, rec) in enumerate(ordered_map(_correlator_task, tasks, cfg.get("workers", 1))):
        ok = rec.slack >= -tol
        inputs = {"draw": i, "n_sites": n, "rank": rank, "region_a": list(a), "region_b": list(b),
                  "digest": rec.inputs_digest}
        report.records.append(_record("correlator-bound", inputs, rec.lhs, rec.rhs, rec.slack, ok,
                                      correlator=rec.extra["correlator"]))
        report.csv_rows.append({"draw": i, "n_sites": n, "region_a": a, "region_b": b, "lhs": rec.lhs,
                                "rhs": rec.rhs, "slack": rec.slack, "pass": ok})
    report.fits["min_slack"] = min(r["slack"] for r in report.records)


def _shell_task(task):
    root, index, lo, hi = task
    rng = task_rng(root, index)
    n = int(rng.integers(lo, hi + 1))
    space = SiteSpace.chain(n, 2)
    rank = int(rng.integers(1, space.dim + 1))
    rho = DensityMatrix(space, random_density_matrix(rng, space.dim, rank))
    geoms = list(dict.fromkeys(list(measures.shell_decompositions(n, ring=True))
                               + list(measures.shell_decompositions(n, ring=False))))
    return n, [(g, measures.check_shell_chain(rho, measures.ShellGeometry(*g))) for g in geoms]


def _run_shell(cfg, report):
    lo, hi = cfg.get("n_sites", [5, 6])
    tol = cfg["tolerances"]["check"]
    tasks = [(cfg["seed"], i, lo, hi) for i in range(cfg["draws"])]
    report.csv_columns = ("draw", "n_sites", "inner", "shell", "outer", "I_ABC", "I_AB", "S_C", "slack", "pass")
    for i, (n, checks) in enumerate(ordered_map(_shell_task, tasks, cfg.get("workers", 1))):
        for (a, c, b), rec in checks:
            ok = rec.slack >= -tol
            inputs = {"draw": i, "n_sites": n, "inner": list(a), "shell": list(c), "outer": list(b)}
            report.records.append(_record("shell-chain", inputs, rec.lhs, rec.rhs, rec.slack, ok,
                                          I_AB=rec.extra["I_AB"], S_C=rec.extra["S_C"]))
            report.csv_rows.append({"draw": i, "n_sites": n, "inner": a, "shell": c, "outer": b,
                                    "I_ABC": rec.lhs, "I_AB": rec.extra["I_AB"], "S_C": rec.extra["S_C"],
                                    "slack": rec.slack, "pass": ok})
    report.fits["min_slack"] = min(r["slack"] for r in report.records)


def _ring_sources(cfg, custom):
    """(name, beta, state, exact profile or None) for every ring state requested."""
    out = []
    for ref in cfg.get("states", []):
        rho = resolve_state(ref)
        n = ref["n"]
        if ref["kind"] == "ghz":
            exact = np.array([0.0] + [math.log(2)] * (n - 1) + [0.0])
        elif ref["kind"] == "pure-product":
            exact = np.zeros(n + 1)
        else:
            s1 = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
            exact = s1 * np.arange(n + 1)
        out.append((f"{ref['kind']}-ring-{n}", None, rho, exact))
    for ref in cfg.get("models", []):
        h = resolve_model(ref, custom)
        if h.geometry != "ring":
            raise ConfigError(f"model {_model_name(ref)!r} is not a ring")
        if h.classical:
            raise ConfigError(f"model {_model_name(ref)!r} is classical; ring profiles need a quantum state")
        for b in cfg["beta_grid"]:
            out.append((_model_name(ref), float(b), thermal.build_gibbs(h, float(b)).rho, None))
    return out


def _run_concavity(cfg, report, custom):
    tol = cfg["tolerances"]["check"]
    report.csv_columns = ("source", "beta", "L", "S", "concavity_residual", "mi_increment", "pass")
    for name, beta, rho, exact in _ring_sources(cfg, custom):
        n = rho.space.site_count
        prof = measures.block_entropy_profile(rho)
        res = measures.concavity_residuals(prof)
        inc = measures.ring_mi_increments(prof, n)
        inputs = {"source": name, "beta": beta}
        for L in range(1, n):
            ok = res[L - 1] >= -tol
            report.records.append(_record("concavity", {**inputs, "L": L}, prof[L],
                                          (prof[L - 1] + prof[L + 1]) / 2, res[L - 1], ok))
        for L in range(1, n // 2 + 1):
            ok = inc[L - 1] >= -tol
            report.records.append(_record("ring-mi-increment", {**inputs, "L": L}, inc[L - 1], 0.0, inc[L - 1], ok))
        if exact is not None:
            dev = float(np.max(np.abs(prof - exact)))
            report.records.append(_record("exact-profile", inputs, dev, tol, tol - dev, dev <= tol))
        for L in range(n + 1):
            r = res[L - 1] if 1 <= L < n else None
            i = inc[L - 1] if 1 <= L else None
            ok = (r is None or r >= -tol) and (i is None or L > n // 2 or i >= -tol)
            report.csv_rows.append({"source": name, "beta": "" if beta is None else beta, "L": L, "S": prof[L],
                                    "concavity_residual": "" if r is None else r,
                                    "mi_increment": "" if i is None else i, "pass": ok})


def _run_saturation(cfg, report, custom):
    tol = cfg["tolerances"]["saturation"]
    expect = cfg.get("expect", {}).get("saturation")
    report.csv_columns = ("source", "beta", "saturation_length", "max_residual", "markov_consistent", "pass")
    for name, beta, rho, _ in _ring_sources(cfg, custom):
        n = rho.space.site_count
        prof = measures.block_entropy_profile(rho)
        sat = fcs.saturation_detect(prof, n, tol)
        max_res = float(np.max(np.abs(sat.residuals))) if sat.residuals.size else None
        if expect is None:
            ok = sat.saturation_length is None or sat.markov_consistent
        elif expect == "none":
            ok = sat.saturation_length is None
        else:
            ok = sat.saturation_length == expect and sat.markov_consistent
        inputs = {"source": name, "beta": beta, "tolerance": tol}
        report.records.append(_record(
            "saturation", inputs, sat.saturation_length, expect, max_res, ok,
            markov_consistent=sat.markov_consistent, residuals=sat.residuals.tolist(),
            increments=sat.increments.tolist(),
        ))
        report.csv_rows.append({"source": name, "beta": "" if beta is None else beta,
                                "saturation_length": "none" if sat.saturation_length is None else sat.saturation_length,
                                "max_residual": "" if max_res is None else max_res,
                                "markov_consistent": sat.markov_consistent, "pass": ok})


def _fcs_draws(cfg, custom):
    """Channels to run: one, or ``draws`` random ones with derived seeds."""
    ch = cfg["channel"]
    name = ch if isinstance(ch, str) else ch.get("preset")
    draws = cfg.get("draws", 1)
    if name == "random" and (isinstance(ch, str) or "seed" not in ch):
        ref = {"preset": "random"} if isinstance(ch, str) else ch
        return [resolve_channel({**ref, "seed": task_seed(cfg["seed"], i)}, custom=custom) for i in range(draws)]
    if draws != 1:
        raise ConfigError("draws > 1 needs a random channel without a fixed seed")
    return [resolve_channel(ch, cfg.get("seed"), custom)]


def _decay_one(task):
    f, n_a, n_b, L_grid, window, tol = task
    spec = fcs.transfer_spectrum(f)
    rows = fcs.factorization_curve(f, n_a, n_b, L_grid)
    L = np.array([r.L for r in rows])
    td = np.array([r.trace_distance for r in rows])
    mi = np.array([r.mutual_information for r in rows])
    lo, hi = window if window is not None else (max(1, int(L.min())), int(L.max()))
    m = (L >= lo) & (L <= hi)
    fits = {"channel": f.name, "eta": spec.eta, "xi": spec.xi, "fit_window": [lo, hi]}
    for key, y in (("trace_distance", td), ("mutual_information", mi)):
        try:
            fits[f"{key}_slope"] = fcs.log_linear_fit(L[m], y[m]).slope
        except ValueError:
            fits[f"{key}_slope"] = None
    c_fit, viol_fit = fcs.fitted_norm_bound(L, td, spec.eta)
    c_mix = max(fcs.mixing_constant(f, int(l), spec.eta) for l in L if l >= 1) if (L >= 1).any() else 0.0
    fits.update({"c_fitted": c_fit, "fitted_bound_violations": viol_fit, "c_mixing": c_mix})
    if L[0] == 0:
        fits["xi_m"] = measures.xi_m_estimate(L, mi).xi_m
    recs = []
    for k, r in enumerate(rows):
        inputs = {"channel": f.name, "L": r.L}
        recs.append(_record("fannes-bound", inputs, r.mutual_information, r.bound,
                            r.bound - r.mutual_information, r.mutual_information <= r.bound + tol))
        if r.L >= 1:
            rhs = 4 * c_mix * spec.eta ** r.L
            recs.append(_record("norm-bound", inputs, r.trace_distance, rhs, rhs - r.trace_distance,
                                r.trace_distance <= rhs * (1 + 1e-9) + 1e-13))
        if k > 0:
            for key, y in (("trace_distance", td), ("mutual_information", mi)):
                recs.append(_record(f"monotone-{key}", inputs, y[k], y[k - 1], y[k - 1] - y[k], y[k] <= y[k - 1] + tol))
    return rows, fits, recs


def _run_fcs_decay(cfg, report, custom):
    block = cfg.get("block", {})
    n_a, n_b = block.get("n_a", 2), block.get("n_b", 2)
    L_grid = sorted(set(cfg["L_grid"]))
    channels = _fcs_draws(cfg, custom)
    tasks = [(f, n_a, n_b, L_grid, cfg.get("fit_window"), cfg["tolerances"]["check"]) for f in channels]
    results = ordered_map(_decay_one, tasks, cfg.get("workers", 1))
    multi = len(channels) > 1
    base = ("L", "trace_distance", "mutual_information", "bound")
    report.csv_columns = (("draw", "channel") + base) if multi else base
    all_fits = []
    for i, (rows, fits, recs) in enumerate(results):
        all_fits.append(fits)
        report.records.extend(recs)
        for r in rows:
            row = {"L": r.L, "trace_distance": r.trace_distance, "mutual_information": r.mutual_information,
                   "bound": r.bound}
            if multi:
                row.update(draw=i, channel=fits["channel"])
            report.csv_rows.append(row)
    report.fits.update(all_fits[0] if not multi else {"draws": all_fits})


def _run_fcs_area(cfg, report, custom):
    tol = cfg["tolerances"]["check"]
    channels = _fcs_draws(cfg, custom)
    report.csv_columns = ("channel", "n", "cuts", "I_AB", "bound", "pass")
    for f in channels:
        if not f.is_pure:
            if not cfg.get("purify", False):
                raise ConfigError(f"channel {f.name!r} has a mixed generator; set purify to true")
            f = fcs.purify_channel(f)
        ends = (True, False) if cfg.get("end_blocks", False) else (True,)
        for n in cfg["block_lengths"]:
            for interior in ends:
                r = fcs.mps_area_check(f, int(n), interior)
                ok = r["I_AB"] <= r["bound"] + tol
                inputs = {"channel": f.name, "n": int(n), "interior": interior, "bond_dim": f.bond_dim}
                report.records.append(_record("mps-area", inputs, r["I_AB"], r["bound"], r["slack"], ok, cuts=r["cuts"]))
                report.csv_rows.append({"channel": f.name, "n": int(n), "cuts": r["cuts"], "I_AB": r["I_AB"],
                                        "bound": r["bound"], "pass": ok})


def _run_gibbs_peps(cfg, report):
    spec = cfg["peps"]
    geo = spec["geometry"]
    tol = cfg["tolerances"]["reconstruction"]
    h_h, d = _resolve_pair(spec["horizontal"])
    report.csv_columns = ("model", "beta", "check", "region_a", "lhs", "rhs", "pass")
    if geo["kind"] == "ring":
        if "n" not in geo:
            raise ConfigError("ring geometry needs n")
        n = geo["n"]
        name = f"{spec['horizontal'] if isinstance(spec['horizontal'], str) else 'custom'}-ring-{n}"
        h = gibbs_peps.ring_hamiltonian(h_h, n, d)
        labels = h.space.labels
        regions = [tuple(sorted(labels[(s + k) % n] for k in range(m))) for m in range(1, n) for s in range(n)]
        regions = list(dict.fromkeys(regions))
    else:
        if "rows" not in geo or "cols" not in geo:
            raise ConfigError("patch geometry needs rows and cols")
        rows, cols = geo["rows"], geo["cols"]
        h_v, d_v = _resolve_pair(spec.get("vertical", spec["horizontal"]))
        if d_v != d:
            raise ConfigError("horizontal and vertical terms have different local dimensions")
        name = f"{spec['horizontal'] if isinstance(spec['horizontal'], str) else 'custom'}-patch-{rows}x{cols}"
        h = gibbs_peps.patch_hamiltonian(h_h, h_v, rows, cols, d)
        regions = h.contiguous_regions()
    for beta in cfg["beta_grid"]:
        beta = float(beta)
        if geo["kind"] == "ring":
            t = gibbs_peps.build_gibbs_tensor_1d(h_h, beta, d)
            rho = gibbs_peps.ring_gibbs(t, n)
            patch = n
        else:
            t = gibbs_peps.build_gibbs_tensor_2d(h_h, h_v, beta, d)
            rho = gibbs_peps.patch_gibbs(t, rows, cols)
            patch = (rows, cols)
        err = gibbs_peps.reconstruction_error(rho, h, beta)
        inputs = {"model": name, "beta": beta}
        report.records.append(_record("reconstruction", inputs, err, tol, tol - err, err <= tol))
        report.csv_rows.append({"model": name, "beta": beta, "check": "reconstruction", "region_a": "",
                                "lhs": err, "rhs": tol, "pass": err <= tol})
        for a in regions:
            r = gibbs_peps.peps_area_check_mixed(t, patch, a)
            report.records.append(_record("peps-area", {**inputs, "region_a": list(a)}, r["I_AB"], r["bound"],
                                          r["slack"], r["pass"], cut_bonds=r["cut_bonds"]))
            report.csv_rows.append({"model": name, "beta": beta, "check": "peps-area", "region_a": a,
                                    "lhs": r["I_AB"], "rhs": r["bound"], "pass": r["pass"]})


def _run_singlet(cfg, report):
    p = cfg["profile"]
    fam = p["family"]
    if fam == "custom" and "table" not in p:
        raise ConfigError("custom profile needs a table")
    if fam != "custom" and "parameter" not in p:
        raise ConfigError(f"{fam} profile needs a parameter")
    m = singlet.SingletModel(fam, p.get("parameter", 1.0), p.get("x_max"), tuple(p["table"]) if "table" in p else None)
    R_grid, L_grid = sorted(set(cfg["R_grid"])), sorted(set(cfg["L_grid"]))
    try:
        rep = singlet.scaling_analysis(m, R_grid, L_grid)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    tol = cfg["tolerances"]["check"]
    table = rep.table
    report.csv_columns = ("R", "L", "crossings", "mi_nats")
    for i, R in enumerate(rep.R_grid):
        for j, L in enumerate(rep.L_grid):
            if L > R:
                continue
            v = table[i, j]
            report.csv_rows.append({"R": R, "L": L, "crossings": v / singlet.SINGLET_MI, "mi_nats": v})
            inputs = {"R": R, "L": L}
            if j > 0 and not np.isnan(table[i, j - 1]):
                report.records.append(_record("monotone-in-L", inputs, v, table[i, j - 1], table[i, j - 1] - v,
                                              v <= table[i, j - 1] + tol))
            if i > 0 and not np.isnan(table[i - 1, j]):
                report.records.append(_record("monotone-in-R", inputs, table[i - 1, j], v, v - table[i - 1, j],
                                              table[i - 1, j] <= v + tol))
    report.fits.update(rep.fits)
    report.fits["verdicts"] = rep.verdicts
    report.fits["truncation_error"] = m.truncation_error()
    for key, want in cfg.get("expect", {}).items():
        if key == "saturation":
            raise ConfigError("expect.saturation applies to the saturation experiment only")
        got = rep.verdicts.get(key)
        report.records.append(_record(f"verdict-{key}", {"profile": fam}, got, want, None, got == want))


def run(config: dict, custom_dir=None) -> CheckReport:
    """Evaluate a validated or raw config and return its report.

    Raises ConfigError for invalid configs and unknown presets and
    CapExceededError when a requested state exceeds the dimension caps.
    """
    cfg = validate_config(config)
    custom = load_custom_presets(custom_dir)
    report = CheckReport(cfg["experiment"], config_digest(config))
    exp = cfg["experiment"]
    try:
        if exp == "classical-area":
            _run_area(cfg, report, False, custom)
        elif exp == "quantum-area":
            _run_area(cfg, report, True, custom)
        elif exp == "correlator-bound":
            _run_correlator(cfg, report)
        elif exp == "shell-chain":
            _run_shell(cfg, report)
        elif exp == "concavity":
            _run_concavity(cfg, report, custom)
        elif exp == "saturation":
            _run_saturation(cfg, report, custom)
        elif exp == "fcs-decay":
            _run_fcs_decay(cfg, report, custom)
        elif exp == "fcs-area":
            _run_fcs_area(cfg, report, custom)
        elif exp == "gibbs-peps":
            _run_gibbs_peps(cfg, report)
        elif exp == "singlet-scaling":
            _run_singlet(cfg, report)
    except (CapExceededError, ConfigError, gibbs_peps.NonCommutingError, fcs.NonGenericSpectrumError):
        raise
    except (KeyError, TypeError) as e:
        raise ConfigError(f"config could not be interpreted: {e}") from e
    return report


# -- fuzz ---------------------------------------------------------------------------------------

FUZZ_EXPERIMENTS = ("correlator-bound", "shell-chain", "quantum-area", "fcs-decay", "fcs-area")


def fuzz_config(experiment: str, seed: int, draws: int, workers: int = 1) -> dict:
    """Config for a randomized battery of ``draws`` instances under ``seed``."""
    base = {"schema_version": SCHEMA_VERSION, "experiment": experiment, "seed": seed, "workers": workers}
    if experiment in ("correlator-bound", "shell-chain"):
        return {**base, "draws": draws}
    if experiment == "quantum-area":
        models = [f"random2local-chain-8:{task_seed(seed, i)}" for i in range(draws)]
        return {**base, "models": models, "beta_grid": [0.25, 1.0, 4.0]}
    if experiment == "fcs-decay":
        return {**base, "draws": draws, "channel": {"preset": "random", "bond_dim": 2, "phys_dim": 2, "n_kraus": 2},
                "L_grid": list(range(0, 13))}
    if experiment == "fcs-area":
        return {**base, "draws": draws, "channel": {"preset": "random", "bond_dim": 3, "phys_dim": 2, "n_kraus": 1},
                "block_lengths": [1, 2, 3, 4, 5, 6]}
    raise ConfigError(f"experiment {experiment!r} has no randomized mode; choose from {', '.join(FUZZ_EXPERIMENTS)}")
