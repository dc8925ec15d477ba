"""Batch command-line front end.

Usage::

    livsic COMMAND CONFIG.json [--csv PATH]

``CONFIG`` may be ``-`` to read standard input.  The JSON report goes to
standard output; diagnostics go to standard error at the level named by the
``CHARFN_LOG`` environment variable (``error``, ``info`` or ``debug``).
Exit status: 0 when every check passes, 1 when one fails, 2 for usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from typing import Sequence

import jsonschema
import numpy as np

from . import cplx
from .char import build_char, charfn_eval, equivalence_test, factorization_residual, involution_defect
from .dbr import angular_derivative_probe, boundary_modulus, extreme_test, multiplier_residuals
from .errors import LivsicError, PoleProximity, SchemaError
from .halfplane import (DEFAULT_X, DEFAULT_Y, Exclusions, GridSpec, blaschke_b, boundary_grid,
                        make_grid)
from .herglotz import (HerglotzFunction, atom_fit, atom_locate, min_real_part_eigenvalue,
                       omega_antisymmetry, w_multiplier_residual)
from .models import (AtomicMeasureModel, DirectCharModel, FreeHalfLineModel, KernelModel,
                     PaleyWienerModel, SturmLiouvilleModel, ToeplitzSlitModel, validate_model)
from .report import VerificationReport, to_jsonable

log = logging.getLogger("livsic")

COMMANDS = ("eval-kernel", "charfn", "verify", "equiv", "clark", "boundary", "extreme", "angular")

_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_point = {"oneOf": [{"type": "number"}, _complex]}
_entry = {"oneOf": [{"type": "number"}, _complex]}
_matrix = {"type": "array", "minItems": 1, "maxItems": 4,
           "items": {"type": "array", "minItems": 1, "maxItems": 4, "items": _entry}}
_coeff = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}
_positive = {"type": "number", "exclusiveMinimum": 0}


def _model_schema() -> dict:
    def variant(name, props, required=()):
        return {"type": "object", "additionalProperties": False, "required": ["type", *required],
                "properties": {"type": {"const": name}, **props}}

    return {"oneOf": [
        variant("paley_wiener", {"half_length": _positive}),
        variant("free_half_line", {}),
        variant("sturm_liouville", {
            "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "p": _coeff, "q": _coeff, "x0": {"type": "number"},
            "ode_steps": {"type": "integer", "minimum": 1}, "quad_panels": {"type": "integer", "minimum": 1}}),
        variant("toeplitz_slit", {
            "a": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "square_variant": {"type": "boolean"}, "mirrored": {"type": "boolean"},
            "automorphism": {"type": "object", "additionalProperties": False, "required": ["center"],
                             "properties": {"center": _point, "angle": {"type": "number"}}}}),
        variant("atomic", {"atoms": {"type": "array", "minItems": 1,
                                     "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                               "prefixItems": [{"type": "number"},
                                                               {"oneOf": [{"type": "number"}, _matrix]}]}}},
                required=("atoms",)),
        variant("direct", {"form": {"enum": ["blaschke"]}, "coefficient": _point}),
    ]}


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": _model_schema(),
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "region": {"enum": ["upper", "lower", "both", "boundary"]},
                "x_values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "x_range": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "x_step": _positive,
                "count": {"type": "integer", "minimum": 1},
                "y_values": {"type": "array", "items": _positive, "minItems": 1},
                "exclude_points": {"type": "array", "items": _point},
                "exclude_intervals": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                                  "minItems": 2, "maxItems": 2}},
            },
        },
        "tolerance": {"type": "object", "additionalProperties": False,
                      "properties": {"closed_form": _positive, "ode": _positive}},
        "command_args": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "lambda": _point, "z": _point,
                "points": {"type": "array", "items": _point},
                "other": {"$ref": "#/properties/model"},
                "expect": {"type": "string"},
                "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "count": {"type": "integer", "minimum": 3},
                "eps": {"type": "number", "minimum": 1e-6, "maximum": 1e-2},
                "eps0": {"type": "number", "minimum": 1e-4, "maximum": 1e-2},
                "clark_angle": {"type": "number"},
                "R": {"type": "number", "minimum": 3},
                "quad_points": {"type": "integer", "minimum": 3},
                "k": {"type": "array", "items": _point, "minItems": 1, "maxItems": 4},
                "depth": {"type": "integer", "minimum": 8},
            },
        },
    },
}


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def parse_config(source) -> dict:
    """Read and validate a run configuration.

    ``source`` is a path, ``"-"`` for standard input, or an already-parsed dict.

    Raises
    ------
    SchemaError
        carrying the JSON pointer of the offending field.
    """
    if isinstance(source, dict):
        cfg = source
    else:
        try:
            text = sys.stdin.read() if source == "-" else open(source, encoding="utf-8").read()
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
        except OSError as exc:
            raise SchemaError(f"cannot read config: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if err is not None:
        raise SchemaError(err.message, _pointer(err.absolute_path))
    cfg = json.loads(json.dumps(cfg))
    cfg.setdefault("grid", {})
    tol = cfg.setdefault("tolerance", {})
    tol.setdefault("closed_form", 1e-8)
    tol.setdefault("ode", 1e-5)
    cfg.setdefault("command_args", {})
    return cfg


def _cx(v) -> complex:
    return complex(v) if isinstance(v, (int, float)) else complex(v[0], v[1])


def _coefficient(c):
    if isinstance(c, list):
        coeffs = list(c)
        return lambda x: np.polyval(coeffs[::-1], x)
    return float(c)


def build_model(spec: dict) -> KernelModel:
    kind = spec["type"]
    if kind == "paley_wiener":
        return PaleyWienerModel(spec.get("half_length", math.pi))
    if kind == "free_half_line":
        return FreeHalfLineModel()
    if kind == "sturm_liouville":
        a, b = spec.get("interval", [0.0, math.pi])
        return SturmLiouvilleModel(a, b, _coefficient(spec.get("p", 1.0)), _coefficient(spec.get("q", 0.0)),
                                   spec.get("x0"), spec.get("ode_steps", 4096), spec.get("quad_panels", 512))
    if kind == "toeplitz_slit":
        auto = spec.get("automorphism")
        auto = (_cx(auto["center"]), auto.get("angle", 0.0)) if auto else None
        return ToeplitzSlitModel(spec.get("a", 0.5), spec.get("square_variant", False),
                                 spec.get("mirrored", False), auto)
    if kind == "atomic":
        atoms = []
        for x, w in spec["atoms"]:
            w = np.array([[_cx(e) for e in row] for row in w]) if isinstance(w, list) else w
            atoms.append((x, w))
        return AtomicMeasureModel(atoms)
    if kind == "direct":
        coef = _cx(spec.get("coefficient", 1.0))
        return DirectCharModel(lambda z: coef * blaschke_b(z), 1, f"{coef}*b")
    raise SchemaError(f"unknown model type {kind!r}", "/model/type")


def build_grid(cfg: dict, model: KernelModel):
    g = cfg.get("grid", {})
    exc = Exclusions(tuple(_cx(p) for p in g.get("exclude_points", ())),
                     tuple(tuple(iv) for iv in g.get("exclude_intervals", ())))
    exc = exc.merged(model.exclusions())
    x_values = g.get("x_values")
    if x_values is None and "x_range" not in g:
        x_values = DEFAULT_X
    spec = GridSpec(region=g.get("region", "both"), x_values=tuple(x_values) if x_values else None,
                    x_range=tuple(g["x_range"]) if "x_range" in g else None, x_step=g.get("x_step"),
                    count=g.get("count"), y_values=tuple(g.get("y_values", DEFAULT_Y)), exclusions=exc,
                    label="config")
    return make_grid(spec)


def _tolerance(cfg: dict, model: KernelModel) -> float:
    return cfg["tolerance"]["ode" if isinstance(model, SturmLiouvilleModel) else "closed_form"]


def _printed_forms(model: KernelModel, z: complex):
    """Closed forms displayed in the source for the built-in examples, where one exists."""
    if isinstance(model, PaleyWienerModel):
        L = model.L
        return {"b_times_sine_ratio": blaschke_b(z) * np.sin(L * (z - 1j)) / np.sin(L * (z + 1j))}
    if isinstance(model, FreeHalfLineModel):
        s = np.sqrt(z)
        r = math.sqrt(2)
        return {"closed_form": blaschke_b(z) * (s - (1 - 1j) / r) / (s + (1 + 1j) / r)}
    if isinstance(model, ToeplitzSlitModel) and model.a == 0.5 and not model.square_variant and z.imag > 0:
        s = np.sqrt(z * z - 3)
        cands = [-(t - 2 * z) / (math.sqrt(3) * (z + 1j)) for t in (s, -s)]
        return {"closed_form": min(cands, key=abs)}
    return {}


# ---------------------------------------------------------------------------
# commands


def _cmd_eval_kernel(cfg, model, report):
    args = cfg["command_args"]
    pairs = [(args.get("lambda", [0, 1]), args.get("z", [0, 1]))]
    out = []
    for lam, z in pairs:
        k = model.eval(_cx(lam), _cx(z))
        out.append({"lambda": _cx(lam), "z": _cx(z), "K": k})
        report.add("finite", 0.0 if np.all(np.isfinite(k)) else math.inf, 0.0)
    report.data["kernel"] = out


def _cmd_charfn(cfg, model, report):
    c = build_char(model)
    report.certificates["C_i"] = c.C_i
    report.certificates["C_mi"] = c.C_mi
    pts = [_cx(p) for p in cfg["command_args"].get("points", [[0, 2]])]
    rows = []
    for z in pts:
        row = {"z": z}
        try:
            v = charfn_eval(c, z)
            row.update(V=v, Phi=c.phi(z), Psi=c.psi(z), norm=cplx.operator_norm(v))
            printed = _printed_forms(model, z)
            if printed:
                row["printed"] = printed
        except PoleProximity as exc:
            row["error"] = str(exc)
        rows.append(row)
    report.data["values"] = rows
    report.add("V(i)=0", cplx.frob(charfn_eval(c, 1j)), 1e-8)


def _cmd_verify(cfg, model, report):
    tol = _tolerance(cfg, model)
    grid = build_grid(cfg, model)
    report.data["grid_points"] = len(grid)
    val = validate_model(model, grid, cfg["tolerance"]["closed_form"])
    for chk in val.checks:
        report.checks.append(chk)
    c = build_char(model)
    fr = factorization_residual(c, grid)
    report.add("factorization_residual", fr.value, tol, worst_pair=fr.worst, skipped=fr.skipped)
    same = factorization_residual(c, grid, same_half_only=True)
    report.add("factorization_residual_same_half", same.value, tol, worst_pair=same.worst)
    inv = involution_defect(c, grid)
    report.add("involution_defect", inv.value, tol, worst=inv.worst, skipped=inv.skipped)
    upper = [p for p in grid if p.imag > 0]
    norms_up = [cplx.operator_norm(charfn_eval(c, z)) for z in upper]
    report.add("contractive_upper", max(norms_up), 1 - 1e-10)
    norms_low = []
    for z in grid:
        if z.imag < 0:
            try:
                norms_low.append(cplx.operator_norm(charfn_eval(c, z)))
            except PoleProximity:
                pass
    low = min(norms_low) if norms_low else math.inf
    report.add("expansive_lower", low, 1.0, passed=low > 1.0, evaluated=len(norms_low))
    h = HerglotzFunction(c)
    report.add("re_omega_psd", max(0.0, -min_real_part_eigenvalue(h, upper)), tol)
    report.add("omega_antisymmetry", omega_antisymmetry(h, grid).value, tol)
    report.add("w_multiplier_residual", w_multiplier_residual(h, c, grid).value, tol)
    u_res, q_res = multiplier_residuals(c, grid)
    report.add("u_multiplier_residual", u_res, tol)
    report.add("q_multiplier_residual", q_res, tol)
    report.notes.extend(model.notes())


def _cmd_equiv(cfg, model, report):
    args = cfg["command_args"]
    if "other" not in args:
        raise SchemaError("equiv needs a second model", "/command_args/other")
    other = build_model(args["other"])
    tol = max(_tolerance(cfg, model), _tolerance(cfg, other))
    grid = build_grid(cfg, model)
    res = equivalence_test(build_char(model), build_char(other), grid, tol)
    report.certificates["equivalence"] = res.to_dict()
    expect = args.get("expect")
    ok = res.status == expect if expect else res.status != "no_certificate_found"
    report.add("equivalence", res.residual, tol, passed=ok, status=res.status)


def _cmd_clark(cfg, model, report):
    args = cfg["command_args"]
    c = build_char(model)
    h = HerglotzFunction(c, np.exp(1j * args.get("clark_angle", 0.0)))
    grid = build_grid(cfg, model)
    upper = [p for p in grid if p.imag > 0]
    report.add("re_omega_psd", max(0.0, -min_real_part_eigenvalue(h, upper)), cfg["tolerance"]["closed_form"])
    lo, hi = args.get("interval", [-3.0, 3.0])
    eps0 = args.get("eps0", 1e-3)
    count = args.get("count", int(math.ceil((hi - lo) / eps0)) + 1)
    locs = atom_locate(h, boundary_grid(lo, hi, count), eps0)
    report.data["locations"] = locs
    if not locs:
        report.notes.append("no atoms located")
        return
    try:
        fit = atom_fit(h, locs)
    except LivsicError as exc:
        report.fail("atom_fit", exc)
        return
    report.certificates["atoms"] = [[x, w] for x, w in fit.atoms()]
    report.add("atom_fit_residual", fit.residual, 1e-4)
    refit = build_char(AtomicMeasureModel(fit.atoms()))
    res = equivalence_test(c, refit, upper, 1e-6)
    report.add("refit_equivalent", res.residual, 1e-6, passed=res.equivalent, status=res.status)


def _cmd_boundary(cfg, model, report):
    args = cfg["command_args"]
    lo, hi = args.get("interval", [-3.0, 3.0])
    count = args.get("count", 100)
    eps = args.get("eps", 1e-4)
    xs = np.linspace(lo, hi, count + 2)[1:-1] if _open_interval(model, lo, hi) else np.linspace(lo, hi, count)
    c = build_char(model)
    values = boundary_modulus(c, xs, eps)
    report.data["table"] = {"header": ["x", "sigma_max"], "rows": [[float(x), v] for x, v in zip(xs, values)]}
    if args.get("expect") == "unimodular":
        report.add("unimodular", max(abs(1 - v) for v in values), 1e-3)


def _open_interval(model, lo, hi) -> bool:
    """Drop the interval end points when they sit on a slit edge."""
    return any(lo2 <= x <= hi2 for lo2, hi2 in getattr(model, "slits", ()) for x in (lo, hi))


def _cmd_extreme(cfg, model, report):
    args = cfg["command_args"]
    res = extreme_test(build_char(model), args.get("R", 3.0), points=args.get("quad_points", 6001))
    report.data["extreme"] = {"verdict": res.verdict, "integrals": [[e, v] for e, v in res.integrals.items()],
                              "ratios": res.ratios, "changes": res.changes,
                              "near_unitary_mass": res.near_unitary_mass}
    expect = args.get("expect")
    ok = res.verdict == expect if expect else res.verdict != "indeterminate"
    report.add("extreme_verdict", 0.0 if ok else 1.0, 0.0, passed=ok, verdict=res.verdict)


def _cmd_angular(cfg, model, report):
    args = cfg["command_args"]
    k = [_cx(v) for v in args["k"]] if "k" in args else None
    res = angular_derivative_probe(build_char(model), k, args.get("depth", 12))
    report.data["table"] = {"header": ["r", "quotient"], "rows": [[r, q] for r, q in zip(res.radii, res.quotients)]}
    report.data["angular"] = {"verdict": res.verdict, "limit": res.limit, "truncated_at": res.truncated_at}
    expect = args.get("expect")
    ok = res.verdict == expect if expect else res.verdict != "indeterminate"
    report.add("angular_verdict", 0.0 if ok else 1.0, 0.0, passed=ok, verdict=res.verdict)


_DISPATCH = {
    "eval-kernel": _cmd_eval_kernel, "charfn": _cmd_charfn, "verify": _cmd_verify, "equiv": _cmd_equiv,
    "clark": _cmd_clark, "boundary": _cmd_boundary, "extreme": _cmd_extreme, "angular": _cmd_angular,
}


def execute(command: str, cfg: dict) -> VerificationReport:
    """Run ``command`` on a validated config.  Module errors become failed checks."""
    if command not in _DISPATCH:
        raise SchemaError(f"unknown command {command!r}")
    report = VerificationReport(command, cfg)
    start = time.perf_counter()
    try:
        model = build_model(cfg["model"])
        _DISPATCH[command](cfg, model, report)
    except SchemaError:
        raise
    except (LivsicError, ValueError, ZeroDivisionError) as exc:
        log.error("%s failed: %s", command, exc)
        report.fail(command, exc)
    report.wall_time = time.perf_counter() - start
    return report


def emit_csv(table: dict | None, path: str, header: Sequence[str] | None = None) -> None:
    """Write a header plus numeric rows with 17 significant digits and LF endings."""
    header = list(header or (table or {}).get("header", []))
    rows = (table or {}).get("rows", [])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{float(v):.17g}" for v in row) + "\n")


def render(report: VerificationReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def _configure_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("CHARFN_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = argparse.ArgumentParser(prog="livsic", description="Characteristic functions from kernel models")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="JSON config file, or - for standard input")
    parser.add_argument("--csv", help="write the tabular section (boundary, angular) to this file")
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = parse_config(ns.config)
        report = execute(ns.command, cfg)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(render(report))
    if ns.csv:
        default = {"boundary": ["x", "sigma_max"], "angular": ["r", "quotient"]}.get(ns.command, [])
        try:
            emit_csv(report.data.get("table"), ns.csv, report.data.get("table", {}).get("header", default))
        except OSError as exc:
            print(f"cannot write {ns.csv}: {exc}", file=sys.stderr)
            return 1
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
