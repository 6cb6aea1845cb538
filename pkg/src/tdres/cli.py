"""Command-line experiment runner.

    tdres run <config.json | recipe-name> [--jobs N] [--out DIR]
    tdres validate <config.json>
    tdres recipes

Configs are strict JSON (unknown fields rejected, format_version 1).  Exit
codes: 0 success, 2 config error (message names the offending field),
3 numerical failure (message names module and operation).  TDRES_OUT sets
the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from .errors import ConfigError, NumericalError
from .experiments import RUNNERS
from .output import config_hash, write_json
from .recipes import RECIPES

_TOP_FIELDS = {"format_version", "experiment", "seed", "output_dir", "params"}

_PARAM_FIELDS = {
    "simulate": {"n", "delta_tilde", "tau0", "tauf", "control", "alphas",
                 "amplitude", "omega_tilde", "samples"},
    "stokes": {"models"},
    "resonance-sweep": {"n", "delta_tilde", "tau0", "tauf",
                        "alpha_lo", "alpha_hi", "alpha_count"},
    "harmonic-compare": {"delta_lo", "delta_hi", "delta_count", "omega_tilde"},
    "optimize": {"delta_tilde", "n", "tauf", "cells", "max_iters", "grad_tol"},
    "fit": {"delta_tilde", "n", "tauf", "cells", "max_iters", "grad_tol"},
    "anneal": {"kind", "pairs", "ns", "n", "dbar_x", "dbar_z", "cells"},
    "multilevel": {"dbar"},
}

_REQUIRED = {
    "simulate": {"n", "delta_tilde", "tau0", "tauf", "control"},
    "stokes": {"models"},
    "resonance-sweep": {"n", "delta_tilde", "tau0", "tauf",
                        "alpha_lo", "alpha_hi", "alpha_count"},
    "harmonic-compare": {"delta_lo", "delta_hi", "delta_count"},
    "optimize": {"delta_tilde", "n", "tauf"},
    "fit": {"delta_tilde", "n", "tauf"},
    "anneal": {"kind"},
    "multilevel": set(),
}


def _check_positive(params, key):
    v = params.get(key)
    if v is None:
        return
    vals = v if isinstance(v, list) else [v]
    for x in vals:
        if not isinstance(x, (int, float)) or not x > 0:
            raise ConfigError(f"{key} must be positive, got {x!r}")


def _check_odd_n(n):
    if not isinstance(n, int) or n < 1 or n % 2 == 0:
        raise ConfigError(f"n must be an odd positive integer, got {n!r}")


def validate_config(config: dict) -> dict:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(config) - _TOP_FIELDS
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}'")
    if config.get("format_version") != 1:
        raise ConfigError(f"format_version must be 1, got {config.get('format_version')!r}")
    exp = config.get("experiment")
    if exp not in RUNNERS:
        raise ConfigError(f"experiment must be one of {sorted(RUNNERS)}, got {exp!r}")
    seed = config.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    params = config.get("params")
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    unknown = set(params) - _PARAM_FIELDS[exp]
    if unknown:
        raise ConfigError(f"unknown field 'params.{sorted(unknown)[0]}' for experiment {exp}")
    missing = _REQUIRED[exp] - set(params)
    if missing:
        raise ConfigError(f"missing required field 'params.{sorted(missing)[0]}'")
    _check_positive(params, "delta_tilde")
    _check_positive(params, "dbar_x")
    _check_positive(params, "dbar_z")
    _check_positive(params, "dbar")
    if "n" in params:
        _check_odd_n(params["n"])
    if exp == "stokes":
        if not isinstance(params["models"], list) or not params["models"]:
            raise ConfigError("params.models must be a non-empty list")
        for m in params["models"]:
            unknown = set(m) - {"n", "delta_tilde", "tau0", "tauf"}
            if unknown:
                raise ConfigError(f"unknown field 'params.models.{sorted(unknown)[0]}'")
            _check_odd_n(m.get("n"))
            if not (isinstance(m.get("delta_tilde"), (int, float)) and m["delta_tilde"] > 0):
                raise ConfigError(f"delta_tilde must be positive, got {m.get('delta_tilde')!r}")
    if exp in ("simulate", "resonance-sweep"):
        if not params["tau0"] < params["tauf"]:
            raise ConfigError(f"need tau0 < tauf, got [{params['tau0']}, {params['tauf']}]")
    if exp == "anneal" and params["kind"] not in ("energy", "stokes", "fit"):
        raise ConfigError(f"params.kind must be energy|stokes|fit, got {params['kind']!r}")
    return config


def load_config(path_or_name: str) -> dict:
    if path_or_name in RECIPES:
        return json.loads(json.dumps(RECIPES[path_or_name]["config"]))
    try:
        with open(path_or_name, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file or recipe: {path_or_name!r}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def run(config: dict, output_dir: str | None = None, jobs: int = 1) -> dict:
    """Execute a validated config; returns the run manifest."""
    config = validate_config(config)
    out = output_dir or config.get("output_dir") or os.environ.get("TDRES_OUT", "out")
    os.makedirs(out, exist_ok=True)
    t0 = time.time()
    files = RUNNERS[config["experiment"]](config["params"], out, jobs)
    manifest = {
        "config_hash": config_hash(config),
        "tool_version": __version__,
        "experiment": config["experiment"],
        "wall_time_s": time.time() - t0,
        "outputs": [os.path.relpath(f, out) for f in files],
    }
    write_json(os.path.join(out, "manifest.json"), manifest)
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tdres",
                                     description="time-dependent resonance control experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a config file or a built-in recipe")
    p_run.add_argument("config", help="path to a config JSON or a recipe name")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    p_run.add_argument("--out", default=None, help="output directory (default: TDRES_OUT or ./out)")
    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    sub.add_parser("recipes", help="list built-in figure recipes")
    args = parser.parse_args(argv)

    if args.command == "recipes":
        width = max(len(n) for n in RECIPES)
        for name in RECIPES:
            r = RECIPES[name]
            exp = r["config"]["experiment"]
            print(f"{name:<{width}}  {exp:<16} ~{r['runtime_s']:>3}s  {r['description']}")
        return 0

    try:
        config = load_config(args.config)
        validate_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print("OK")
        return 0

    try:
        manifest = run(config, output_dir=args.out, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for f in manifest["outputs"]:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
