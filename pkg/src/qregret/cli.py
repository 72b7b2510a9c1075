"""Command-line front end.

    qregret <command> --spec run.yaml [--out DIR] [--seed N] [--verbose]

The run-spec is a YAML mapping validated against ``RUNSPEC_SCHEMA`` (unknown
keys are rejected). Exit status: 0 success, 1 invalid input, 2 numerical
contract violation.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile

import jsonschema
import numpy as np
import yaml

from . import __version__
from .dilation import MeasurementChannel, bridge_check, build_dilation, dilation_residuals
from .errors import ModelUnknown, NumericalError, QRegretError, SpecInvalid
from .geometry import geometric_tensor
from .linalg import Povm, projective_povm, random_povm
from .measurement import classical_fim, comparison_bounds_coherent, regret_report
from .models import (
    FrontierConfig,
    GaussianJointMeasurement,
    coherent_model,
    gaussian_frontier,
    gaussian_measurement_fim,
    projective_qubit_povm,
    pure_qubit_family,
    qubit_model,
    random_mixed_model,
    random_pure_model,
    real_pure_family,
    sld_eigenbasis_povm,
    trace_frontier,
)
from .simulate import PovmExperiment, attainment_report, estimate_gaussian, estimate_povm

log = logging.getLogger("qregret")

SCHEMA_VERSION = 1
COMMANDS = ("geometry", "regret", "tradeoff-scan", "coherent-demo", "dilation-check", "simulate")
PURE_MODELS = ("coherent", "pure_qubit", "real_pure", "random_pure")
MODEL_NAMES = ("qubit", "random_mixed") + PURE_MODELS
MEASUREMENT_NAMES = ("projective_qubit", "random", "computational", "uninformative", "sld_eigenbasis", "gaussian")

_number = {"type": "number"}
_posint = {"type": "integer", "minimum": 1}

RUNSPEC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": list(COMMANDS)},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "chi": _number,
                "n_max": _posint,
                "dim": _posint,
                "n_params": _posint,
                "rank": _posint,
                "seed": {"type": "integer"},
            },
        },
        "measurement": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "vartheta": _number,
                "phi": _number,
                "outcomes": _posint,
                "seed": {"type": "integer"},
                "parameter": {"type": "integer", "minimum": 0},
                "r": _number,
                "r_values": {"type": "array", "items": _number, "minItems": 1},
                "extra_noise": {"type": "number", "minimum": 0},
            },
        },
        "theta": {"type": "array", "items": _number, "minItems": 1},
        "coefficient": {"enum": ["plain_c", "tilde_c"]},
        "nu": _posint,
        "trials": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid": _posint,
                "starts": {"type": "integer", "minimum": 0},
                "max_evals": _posint,
                "random_povms": {"type": "integer", "minimum": 0},
            },
        },
        "e11_grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["min", "max", "points"],
            "properties": {"min": {"type": "number", "exclusiveMinimum": 0}, "max": _number, "points": _posint},
        },
        "mle_grid": {
            "type": "array",
            "items": {"type": "array", "items": _number, "minItems": 3, "maxItems": 3},
        },
        "free_parameters": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "name": {"type": "string"}},
        },
    },
}

COHERENT_DEMO_COLUMNS = ("e11", "regret_bound_e22", "rld_geo_e22", "rld_arith_e22", "sld_harm_e22")
TRADEOFF_COLUMNS = ("kind", "param1", "param2", "delta1", "delta2", "margin")


# --------------------------------------------------------------------------
# serialization


def fmt(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericalError(f"non-finite value {x!r} in output")
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON text with floats written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def complex_matrix(m) -> dict:
    m = np.asarray(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, str):
                cells.append(v)
            else:
                cells.append(fmt(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# spec handling


def load_spec(path: str) -> dict:
    try:
        with open(path) as fh:
            spec = yaml.safe_load(fh)
    except OSError as exc:
        raise SpecInvalid(f"cannot read spec: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SpecInvalid(f"spec is not valid YAML: {exc}") from exc
    if spec is None:
        spec = {}
    try:
        jsonschema.validate(spec, RUNSPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecInvalid(f"spec invalid at {where}: {exc.message}") from exc
    return spec


def _require(spec, key, command):
    if key not in spec:
        raise SpecInvalid(f"'{command}' needs '{key}' in the spec")
    return spec[key]


def build_model(desc: dict):
    """Returns ``(parametric_model, pure_model_or_None)``."""
    name = desc["name"]
    if name == "qubit":
        return qubit_model(desc.get("chi", math.pi / 2)), None
    if name == "random_mixed":
        m = random_mixed_model(desc.get("dim", 2), desc.get("n_params", 2), desc.get("seed", 0), desc.get("rank"))
        return m, None
    if name == "coherent":
        pure = coherent_model(desc.get("n_max", 40))
    elif name == "pure_qubit":
        pure = pure_qubit_family()
    elif name == "real_pure":
        pure = real_pure_family()
    elif name == "random_pure":
        pure = random_pure_model(desc.get("dim", 2), desc.get("n_params", 2), desc.get("seed", 0))
    else:
        raise ModelUnknown(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    return pure.as_parametric(), pure


def build_povm(desc: dict, dim: int, model=None, theta=None) -> Povm:
    name = desc["name"]
    if name == "projective_qubit":
        if dim != 2:
            raise SpecInvalid("projective_qubit needs a qubit model")
        return projective_qubit_povm(desc.get("vartheta", 0.0), desc.get("phi", 0.0))
    if name == "random":
        return random_povm(dim, desc.get("outcomes", 2), desc.get("seed", 0))
    if name == "computational":
        return projective_povm(np.eye(dim))
    if name == "uninformative":
        k = desc.get("outcomes", 2)
        return Povm([np.eye(dim) / k] * k)
    if name == "sld_eigenbasis":
        from .geometry import sld_at

        return sld_eigenbasis_povm(sld_at(model, theta)[desc.get("parameter", 0)])
    if name == "gaussian":
        raise SpecInvalid("the gaussian measurement has continuous outcomes; use it with the coherent model")
    raise ModelUnknown(f"unknown measurement {name!r}; choose from {', '.join(MEASUREMENT_NAMES)}")


def _theta(spec, model, command):
    theta = np.asarray(_require(spec, "theta", command), dtype=float)
    if theta.shape != (model.n_params,):
        raise SpecInvalid(f"theta has {theta.size} entries, model has {model.n_params} parameters")
    return theta


# --------------------------------------------------------------------------
# commands


def cmd_geometry(spec, seed):
    model, _ = build_model(_require(spec, "model", "geometry"))
    theta = _theta(spec, model, "geometry")
    g = geometric_tensor(model, theta)
    return {
        "theta": theta,
        "Q": complex_matrix(g.q_tensor),
        "qfim": g.qfim,
        "c": g.c,
        "c_tilde": g.c_tilde,
        "degenerate": g.degenerate,
    }, "json"


def _cfim_for(spec, model, pure, theta, command):
    mdesc = _require(spec, "measurement", command)
    if mdesc["name"] == "gaussian":
        if pure is None or pure.name != "coherent":
            raise SpecInvalid("the gaussian measurement applies to the coherent model only")
        return gaussian_measurement_fim(mdesc.get("r", 0.0)), None
    povm = build_povm(mdesc, model.rho(theta).shape[0], model, theta)
    return classical_fim(povm, model, theta), povm


def cmd_regret(spec, seed):
    model, pure = build_model(_require(spec, "model", "regret"))
    theta = _theta(spec, model, "regret")
    geom = geometric_tensor(model, theta)
    cfim, _ = _cfim_for(spec, model, pure, theta, "regret")
    rep = regret_report(geom, cfim, spec.get("coefficient", "tilde_c"))
    return {
        "theta": theta,
        "coefficient_kind": spec.get("coefficient", "tilde_c"),
        "qfim": geom.qfim,
        "cfim": rep.cfim,
        "regret": rep.regret,
        "delta": rep.delta,
        "degenerate": rep.degenerate,
        "pairwise": [
            {"j": p.j, "k": p.k, "c_used": p.c_used, "lhs": p.lhs, "rhs": p.rhs, "margin": p.margin}
            for p in rep.pairwise
        ],
    }, "json"


def cmd_tradeoff_scan(spec, seed):
    mdesc = spec.get("measurement")
    if mdesc is not None and mdesc["name"] == "gaussian":
        points = gaussian_frontier(mdesc.get("r_values", [mdesc.get("r", 0.0)]))
    else:
        _, pure = build_model(_require(spec, "model", "tradeoff-scan"))
        if pure is None:
            raise SpecInvalid("tradeoff-scan needs a pure-state model")
        theta = np.asarray(_require(spec, "theta", "tradeoff-scan"), dtype=float)
        scan = spec.get("scan", {})
        cfg = FrontierConfig(
            grid=scan.get("grid", 64),
            n_starts=scan.get("starts", 8),
            max_evals=scan.get("max_evals", 500),
            n_random=scan.get("random_povms", 32),
            seed=seed,
            coefficient_kind=spec.get("coefficient", "tilde_c"),
        )
        points = trace_frontier(pure, theta, cfg).points
    rows = []
    for p in points:
        params = list(p.params) + [None] * (2 - len(p.params))
        rows.append([p.kind, params[0], params[1], p.delta1, p.delta2, p.margin])
    return csv_text(TRADEOFF_COLUMNS, rows), "csv"


def cmd_coherent_demo(spec, seed):
    nu = spec.get("nu", 1)
    g = spec.get("e11_grid", {"min": 0.26, "max": 2.0, "points": 200})
    if g["max"] < g["min"]:
        raise SpecInvalid("e11_grid max < min")
    rows = comparison_bounds_coherent(nu, np.linspace(g["min"], g["max"], g["points"]))
    data = [[r.e11, r.regret_bound_e22, r.rld_geo_e22, r.rld_arith_e22, r.sld_harm_e22] for r in rows]
    return csv_text(COHERENT_DEMO_COLUMNS, data), "csv"


def cmd_dilation_check(spec, seed):
    model, _ = build_model(_require(spec, "model", "dilation-check"))
    theta = _theta(spec, model, "dilation-check")
    povm = build_povm(_require(spec, "measurement", "dilation-check"), model.rho(theta).shape[0], model, theta)
    geom = geometric_tensor(model, theta)
    channel = MeasurementChannel(povm)
    first = build_dilation(channel, "standard")
    second = build_dilation(channel, "random", seed)
    a = bridge_check(first, model, theta, geom, povm)
    b = bridge_check(second, model, theta, geom, povm)
    res = dilation_residuals(first, geom.rho)
    return {
        "theta": theta,
        "max_abs_gap": max(a.max_abs_gap, b.max_abs_gap),
        "commutator_norm": max(a.commutator_norm, b.commutator_norm),
        "completion_gap": float(np.max(np.abs(a.regret_via_error - b.regret_via_error))),
        "channel_residual": res["channel"],
        "unitary_residual": res["unitary"],
        "regret_direct": a.regret_direct,
        "regret_via_error": a.regret_via_error,
    }, "json"


def cmd_simulate(spec, seed):
    mdesc = _require(spec, "measurement", "simulate")
    nu = spec.get("nu", 10_000)
    trials = spec.get("trials", 500)
    if mdesc["name"] == "gaussian":
        theta = np.asarray(spec.get("theta", [0.0, 0.0]), dtype=float)
        if theta.shape != (2,):
            raise SpecInvalid("the coherent signal has two parameters")
        gm = GaussianJointMeasurement(mdesc.get("r", 0.0), tuple(theta))
        run = estimate_gaussian(gm, nu, trials, seed, mdesc.get("extra_noise", 0.0))
        geom = coherent_model(spec.get("model", {}).get("n_max", 40)).geometry(theta)
        rep = attainment_report(run, geom, coherent=True)
    else:
        model, _ = build_model(_require(spec, "model", "simulate"))
        theta = _theta(spec, model, "simulate")
        povm = build_povm(mdesc, model.rho(theta).shape[0], model, theta)
        free = spec.get("free_parameters")
        if free is not None:
            model = model.sliced(free, theta)
            theta = theta[free]
        grid = _require(spec, "mle_grid", "simulate")
        run = estimate_povm(PovmExperiment(povm, model, tuple(theta)), nu, trials, seed, grid)
        rep = attainment_report(run, geometric_tensor(model, theta)) if model.n_params > 1 else None
    out = {
        "nu": nu,
        "trials": trials,
        "seed": seed,
        "rng": run.metadata.get("rng"),
        "estimator": run.estimator_kind,
        "true_theta": run.true_theta,
        "empirical_cov": run.empirical_cov,
        "standard_errors": run.cov_standard_errors(),
        "eq8_margins": rep.error_margins if rep else [],
        "eq8_standard_errors": rep.margin_standard_errors if rep else [],
        "eq13_margin": rep.coherent_margin if rep else None,
        "eq13_standard_error": rep.coherent_standard_error if rep else None,
    }
    return out, "json"


HANDLERS = {
    "geometry": cmd_geometry,
    "regret": cmd_regret,
    "tradeoff-scan": cmd_tradeoff_scan,
    "coherent-demo": cmd_coherent_demo,
    "dilation-check": cmd_dilation_check,
    "simulate": cmd_simulate,
}


def run(command: str, spec_path: str, out_dir: str | None = None, seed: int | None = None) -> str:
    """Execute one command; returns the path of the written artifact."""
    spec = load_spec(spec_path)
    if spec.get("command", command) != command:
        raise SpecInvalid(f"spec is for '{spec['command']}', not '{command}'")
    seed = spec.get("seed", 0) if seed is None else seed
    payload, kind = HANDLERS[command](spec, seed)
    if kind == "json":
        text = to_json({"schema_version": SCHEMA_VERSION, "version": __version__, "command": command, **payload}) + "\n"
    else:
        text = payload
    output = spec.get("output", {})
    directory = out_dir or output.get("dir") or "."
    name = output.get("name") or f"{command}.{kind}"
    path = os.path.join(directory, name)
    atomic_write(path, text)
    return path


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qregret", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", required=True, help="YAML run-spec file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="seed (overrides the spec)")
    p.add_argument("--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        path = run(args.command, args.spec, args.out, args.seed)
    except QRegretError as exc:
        print(f"qregret: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
