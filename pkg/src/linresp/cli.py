"""Batch experiment runner.

Subcommands: srb, tce, response, pressure, sweep, norms.  Configs are JSON
(or TOML when the tomli package is available); the builtin names "tent",
"tent-bump", "skew-1.9" and "tangent-pair" can be passed directly to
--config.  Artifacts are deterministic: floats are always formatted with 17
significant digits, JSON keys are sorted, CSV is RFC-4180 with LF endings.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import catalog
from .bvspaces import GridFunction, bvp_norm, var_p
from .conjugacy import (holder_norm, horizontality_defect, solve_tce_pullback,
                        solve_tce_series, TceDivergenceError,
                        HorizontalityTruncationError)
from .density import srb_density, decomposition_rows, JumpFitError
from .maps import (MapFamily, PiecewiseExpandingMap, skew_tent, tent_map,
                   family_map, InvariantViolation, DomainError)
from .response import (birkhoff_average, integral_psi_dmu_t,
                       pressure_derivative, response_finite_difference,
                       response_formula, HorizontalityError,
                       MeanZeroViolation, _integral_psi)
from .transfer import (MeanZeroError, NoConvergenceError, SingularSystemError)


class ConfigError(ValueError):
    pass


NUMERICAL_ERRORS = (TceDivergenceError, HorizontalityTruncationError,
                    JumpFitError, HorizontalityError, MeanZeroViolation,
                    MeanZeroError, NoConvergenceError, SingularSystemError,
                    FloatingPointError)

BUILTIN_CONFIGS = {
    "tent": {
        "base": "tent",
        "observable": "x2",
        "grid_size": 4096,
    },
    "tent-bump": {
        "base": "tent",
        "family": {"kind": "additive", "X": "bump"},
        "observable": "x",
        "grid_size": 4096,
    },
    "skew-1.9": {
        "base": ["skew_tent", 1.9],
        "observable": "x2",
        "grid_size": 4096,
    },
    "tangent-pair": {
        "base": "tent",
        "family": {"kind": "conjugation", "g": "xbump", "r": "x2bump"},
        "observable": "x",
        "grid_size": 2048,
    },
}


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def _json_dump(obj, fh, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            fh.write("{}")
            return
        fh.write("{\n")
        items = sorted(obj.items())
        for i, (k, v) in enumerate(items):
            fh.write("  " * (indent + 1) + json.dumps(str(k)) + ": ")
            _json_dump(v, fh, indent + 1)
            fh.write(",\n" if i < len(items) - 1 else "\n")
        fh.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            fh.write("[]")
            return
        fh.write("[\n")
        for i, v in enumerate(obj):
            fh.write("  " * (indent + 1))
            _json_dump(v, fh, indent + 1)
            fh.write(",\n" if i < len(obj) - 1 else "\n")
        fh.write(pad + "]")
    elif isinstance(obj, bool) or obj is None:
        fh.write(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        fh.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        fh.write(fmt_float(obj))
    else:
        fh.write(json.dumps(str(obj)))


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        _json_dump(obj, fh)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(c) if isinstance(c, (float, np.floating))
                        else c for c in row])


def load_config(spec: str) -> dict:
    if spec in BUILTIN_CONFIGS:
        cfg = dict(BUILTIN_CONFIGS[spec])
        cfg.setdefault("name", spec)
        return cfg
    if not os.path.exists(spec):
        raise ConfigError(f"config {spec!r} is neither a builtin nor a file")
    if spec.endswith(".toml"):
        try:
            import tomli
        except ImportError:
            raise ConfigError("TOML configs need the tomli package; use JSON")
        with open(spec, "rb") as fh:
            cfg = tomli.load(fh)
    else:
        with open(spec, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    cfg.setdefault("name", os.path.splitext(os.path.basename(spec))[0])
    return cfg


def base_map_from_config(cfg) -> PiecewiseExpandingMap:
    spec = cfg.get("base", "tent")
    if spec == "tent":
        return tent_map()
    if isinstance(spec, (list, tuple)) and len(spec) == 2 and spec[0] == "skew_tent":
        return skew_tent(float(spec[1]))
    if isinstance(spec, str) and spec.startswith("skew_tent "):
        return skew_tent(float(spec.split()[1]))
    raise ConfigError(f"unknown base map spec {spec!r}")


def family_from_config(cfg) -> MapFamily:
    base = base_map_from_config(cfg)
    fam = cfg.get("family")
    if fam is None:
        raise ConfigError("config has no 'family' section")
    kind = fam.get("kind")
    try:
        if kind == "additive":
            return MapFamily.additive(base, catalog.resolve(fam["X"]),
                                      t_max=float(fam.get("t_max", 0.1)),
                                      name=cfg.get("name", ""))
        if kind == "conjugation":
            return MapFamily.conjugation(base, catalog.resolve(fam["g"]),
                                         catalog.resolve(fam.get("r", "zero")),
                                         t_max=float(fam.get("t_max", 0.1)),
                                         name=cfg.get("name", ""))
    except KeyError as exc:
        raise ConfigError(f"family section missing field: {exc}")
    raise ConfigError(f"unknown family kind {kind!r}")


def _grid(cfg, args) -> int:
    g = args.grid if args.grid is not None else int(cfg.get("grid_size", 2048))
    if g % 2 != 0 or g < 8:
        raise ConfigError(f"grid_size must be even and >= 8, got {g}")
    return g


def _observable(cfg):
    return catalog.resolve(cfg.get("observable", "x"))


def cmd_srb(cfg, args, out):
    m = base_map_from_config(cfg)
    grid = _grid(cfg, args)
    dec = srb_density(m, grid, float(cfg.get("tol", 1e-12)))
    write_csv(os.path.join(out, "decomposition.csv"), ["kind", "x", "value"],
              decomposition_rows(dec))
    summary = {
        "grid_size": grid,
        "leading_eigenvalue": dec.spectral.leading_eigenvalue,
        "gap_estimate": dec.spectral.gap_estimate,
        "s": [s for _, s in dec.jumps],
        "jump_locations": [c for c, _ in dec.jumps],
        "merged_jumps": [[c, s] for c, s in dec.merged_jumps],
        "truncation_K": dec.truncation_K,
        "tail_bound": dec.tail_bound,
        "reconstruction_integral": (
            GridFunction(dec.regular.values).quadrature()
            - sum(s * (c + 1.0) for c, s in dec.merged_jumps)),
    }
    write_json(os.path.join(out, "srb.json"), summary)
    return 0


def cmd_tce(cfg, args, out):
    fam = family_from_config(cfg)
    grid = _grid(cfg, args)
    m = fam.base
    defect = horizontality_defect(m, fam.v, "tce")
    series = solve_tce_series(m, fam.v, grid, float(cfg.get("tol", 1e-12)))
    pullback = solve_tce_pullback(m, fam.v, grid_size=grid)
    report = {
        "grid_size": grid,
        "horizontality_defect": defect.value,
        "series": {
            "terms": series.iterations_or_terms,
            "truncation_error_bound": series.truncation_error_bound,
            "residual": series.residual,
            "sup": float(np.max(np.abs(series.alpha.values))),
        },
        "pullback": {
            "iterations": pullback.iterations_or_terms,
            "error_bound": pullback.truncation_error_bound,
            "residual": pullback.residual,
            "sup": float(np.max(np.abs(pullback.alpha.values))),
        },
        "cross_method_sup_difference": float(np.max(np.abs(
            series.alpha.values - np.interp(series.alpha.nodes,
                                            pullback.alpha.nodes,
                                            pullback.alpha.values)))),
        "holder": [
            {"beta": b, "constant": holder_norm(series.alpha, b, seed=args.seed).constant}
            for b in (0.5, 0.9)
        ],
    }
    write_json(os.path.join(out, "tce.json"), report)
    rows = list(zip(series.alpha.nodes, series.alpha.values, pullback.alpha.values))
    write_csv(os.path.join(out, "alpha.csv"), ["x", "alpha_series", "alpha_pullback"], rows)
    return 0


def cmd_response(cfg, args, out):
    fam = family_from_config(cfg)
    if fam.kind != "additive":
        raise ConfigError("response needs an additive family")
    grid = _grid(cfg, args)
    psi = _observable(cfg)
    rep = response_formula(fam, psi, grid, float(cfg.get("tol", 1e-12)))
    fd, fd_err = response_finite_difference(
        fam, psi, grid, tuple(cfg.get("deltas", (0.02, 0.01, 0.005))))
    bk, bk_se = birkhoff_average(fam.base, psi, seed=args.seed)
    data = rep.as_dict()
    data["fd_value"] = fd
    data["error_bars"]["fd"] = fd_err
    data["birkhoff_mu0"] = bk
    data["birkhoff_se"] = bk_se
    write_json(os.path.join(out, "response.json"), data)
    return 0


def cmd_pressure(cfg, args, out):
    fam = family_from_config(cfg)
    if fam.kind != "conjugation":
        raise ConfigError("pressure needs a conjugation family")
    grid = _grid(cfg, args)
    psi = _observable(cfg)
    rows = []
    for t in cfg.get("t_values", (0.0, 0.05)):
        t = float(t)
        dp = pressure_derivative(fam, psi, t, grid_size=grid)
        ic = integral_psi_dmu_t(fam, psi, t, grid, "conjugation")
        iw = integral_psi_dmu_t(fam, psi, t, grid, "weighted")
        rows.append((t, dp, ic, iw, dp - ic))
    if args.format == "json":
        write_json(os.path.join(out, "pressure.json"),
                   {"grid_size": grid,
                    "rows": [{"t": r[0], "ds_log_lambda": r[1],
                              "integral_conjugation": r[2],
                              "integral_weighted": r[3],
                              "identity_defect": r[4]} for r in rows]})
    else:
        write_csv(os.path.join(out, "pressure.csv"),
                  ["t", "ds_log_lambda", "integral_conjugation",
                   "integral_weighted", "identity_defect"], rows)
    return 0


def cmd_sweep(cfg, args, out):
    fam = family_from_config(cfg)
    grid = _grid(cfg, args)
    psi = _observable(cfg)
    ts = [float(t) for t in cfg.get(
        "t_values", (-0.04, -0.02, -0.01, 0.0, 0.01, 0.02, 0.04))]
    rows = []
    for t in ts:
        dec = srb_density(family_map(fam, t), grid)
        rows.append((t, _integral_psi(dec, psi.f)))
    r0 = [r for t, r in rows if t == 0.0]
    fit = None
    if r0:
        pts = [(abs(t), abs(r - r0[0])) for t, r in rows if t != 0.0 and r != r0[0]]
        if len(pts) >= 2:
            lt = np.log([p[0] for p in pts])
            ld = np.log([max(p[1], 1e-300) for p in pts])
            fit = float(np.polyfit(lt, ld, 1)[0])
    write_csv(os.path.join(out, "sweep.csv"), ["t", "R"], rows)
    write_json(os.path.join(out, "sweep.json"),
               {"grid_size": grid, "modulus_fit_exponent": fit,
                "t_values": ts, "R": [r for _, r in rows]})
    return 0


def cmd_norms(cfg, args, out):
    src = cfg.get("samples")
    if src is None:
        raise ConfigError("norms needs a 'samples' field (path to JSON array "
                          "or single-column CSV)")
    if not os.path.exists(src):
        raise ConfigError(f"sample file {src!r} not found")
    if src.endswith(".json"):
        with open(src) as fh:
            vals = np.asarray(json.load(fh), dtype=float)
    else:
        with open(src) as fh:
            vals = np.asarray([float(r[0]) for r in csv.reader(fh) if r], dtype=float)
    ps = [float(p) for p in cfg.get("p", (1.0, 1.5, 2.0))]
    rows = [(p, var_p(vals, p)) for p in ps]
    if (vals.size - 1) % 2 == 0 and vals.size >= 3:
        gf = GridFunction(vals)
        rows = [(p, var_p(vals, p), bvp_norm(gf, p)) for p in ps]
        write_csv(os.path.join(out, "norms.csv"), ["p", "var_p", "bvp_norm"], rows)
    else:
        write_csv(os.path.join(out, "norms.csv"), ["p", "var_p"], rows)
    return 0


COMMANDS = {
    "srb": cmd_srb,
    "tce": cmd_tce,
    "response": cmd_response,
    "pressure": cmd_pressure,
    "sweep": cmd_sweep,
    "norms": cmd_norms,
}


def _error(kind, exc):
    json.dump({"error": {"kind": kind, "message": str(exc)}}, sys.stderr)
    sys.stderr.write("\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="linresp",
                                 description="piecewise expanding unimodal "
                                 "map SRB / linear-response experiments")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True,
                    help="path to a JSON/TOML config, or a builtin name")
    ap.add_argument("--grid", type=int, default=None)
    ap.add_argument("--out", default=".")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args, args.out)
    except (ConfigError, InvariantViolation, DomainError, KeyError,
            json.JSONDecodeError) as exc:
        _error("validation", exc)
        return 2
    except NUMERICAL_ERRORS as exc:
        _error("numerical", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
