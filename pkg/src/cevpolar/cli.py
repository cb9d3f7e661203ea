"""Command-line front end: build models from JSON configs, emit CSV/JSON.

Every artifact starts with metadata (library version, config hash, seed) so
that re-running a config reproduces the data rows exactly.  Exit codes:
0 success, 1 configuration error, 2 numeric failure (with a diagnostic
payload on stderr).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .diagnostics import convergence_sweep, independence_condition_check, joint_exceedance_decay
from .errors import (
    CevError,
    ConfigError,
    ConstructionError,
    DomainError,
    NumericError,
    UnsupportedModelError,
)
from .limits import LimitLaw, second_order_conditional, survival_x_asymptotic
from .model import (
    MixtureModel,
    conditional_cdf_oracle,
    decompose_density,
    model_from_dict,
    quartic_ridge_weight,
    sample_conditional,
    sample_joint,
    standard_normal_profile,
    survival_x_oracle,
)
from .limits import ConditionalFrame
from .geometry import curve_from_dict

#: flags whose values may start with '-' (grids, lists); glued before parsing
_VALUE_FLAGS = ("--grid", "--x-grid", "--z-grid", "--t-grid", "--levels", "--y-grid")


class _Parser(argparse.ArgumentParser):
    """argparse that reports problems as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def parse_grid(spec):
    """Float grid from 'lo:hi:step', generated by integer index."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid '{spec}' must have the form lo:hi:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"grid '{spec}' has non-numeric parts")
    if step <= 0.0:
        raise ConfigError("grid step must be positive")
    if hi < lo:
        raise ConfigError("grid upper end below lower end")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + k * step for k in range(count)]


def _config_hash(payload):
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _metadata(payload, seed):
    return {
        "cevpolar_version": __version__,
        "config_sha256": _config_hash(payload),
        "seed": "none" if seed is None else seed,
    }


def _fmt_cell(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, metadata, header, rows):
    with open(path, "w") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key}={value}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")


def _write_json(path, metadata, body):
    with open(path, "w") as fh:
        json.dump({"meta": metadata, **body}, fh, indent=2)
        fh.write("\n")


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _split_config(data):
    """Returns (polar_model_or_None, mixture_or_None, seed_or_None)."""
    seed = data.pop("seed", None)
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("config seed must be an integer")
    if "mixture" in data:
        extra = set(data) - {"mixture"}
        if extra:
            raise ConfigError(f"unknown config keys next to 'mixture': {sorted(extra)}")
        mix = data["mixture"]
        allowed = {"p", "rho", "tau_mix", "cone"}
        bad = set(mix) - allowed
        if bad:
            raise ConfigError(f"unknown mixture keys: {sorted(bad)}")
        cone = tuple(mix["cone"]) if "cone" in mix else None
        return None, MixtureModel(p=mix["p"], rho=mix["rho"], tau_mix=mix["tau_mix"], cone=cone), seed
    return model_from_dict(data), None, seed


def _require_seed(args, config_seed):
    seed = args.seed if args.seed is not None else config_seed
    if seed is None:
        raise ConfigError("--seed is required for sampling commands")
    return int(seed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_limit(args):
    law = LimitLaw(args.eta, args.zeta,
                   weight_minus=args.weight_minus, weight_plus=1.0 - args.weight_minus)
    grid = parse_grid(args.grid)
    payload = {"command": "limit", "eta": args.eta, "zeta": args.zeta,
               "weight_minus": args.weight_minus, "grid": args.grid}
    meta = _metadata(payload, None)
    rows = [(y, float(law.cdf(y)), float(law.pdf(y))) for y in grid]
    if args.format == "json":
        _write_json(args.output, meta, {
            "y": [r[0] for r in rows],
            "cdf": [r[1] for r in rows],
            "pdf": [r[2] for r in rows],
        })
    else:
        _write_csv(args.output, meta, ("y", "cdf", "pdf"), rows)
    return 0


def _sample_mixture(mix, n, rng):
    picks = rng.random(n) < mix.p
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    slope = np.where(picks, mix.rho, mix.tau_mix)
    noise = np.sqrt(1.0 - slope ** 2)
    return np.column_stack([x, slope * x + noise * z])


def _cmd_simulate(args):
    config = _load_config(args.config)
    model, mixture, config_seed = _split_config(dict(config))
    seed = _require_seed(args, config_seed)
    if args.n < 0:
        raise ConfigError("--n must be nonnegative")
    payload = {"command": "simulate", "config": config, "n": args.n,
               "threshold": args.threshold}
    meta = _metadata(payload, seed)
    rng = np.random.default_rng(seed)
    if mixture is not None:
        if args.threshold is not None:
            raise ConfigError("conditional simulation is not defined for mixture configs")
        xy = _sample_mixture(mixture, args.n, rng)
        _write_csv(args.output, meta, ("x", "y"), [tuple(map(float, r)) for r in xy])
        return 0
    if args.threshold is None:
        xy = sample_joint(model, args.n, rng)
        _write_csv(args.output, meta, ("x", "y"), [tuple(map(float, r)) for r in xy])
    else:
        ws = sample_conditional(model, args.threshold, args.n, rng)
        meta["effective_size"] = repr(ws.effective_size)
        rows = list(zip(map(float, ws.x), map(float, ws.y), map(float, ws.weights)))
        _write_csv(args.output, meta, ("x", "y", "weight"), rows)
    return 0


def _cmd_verify(args):
    config = _load_config(args.config)
    model, mixture, config_seed = _split_config(dict(config))
    if mixture is not None:
        raise ConfigError("verify requires a polar model config")
    seed = _require_seed(args, config_seed)
    try:
        levels = [float(v) for v in args.levels.split(",")]
    except ValueError:
        raise ConfigError("--levels must be a comma-separated list of numbers")
    report = convergence_sweep(model, levels, args.n, np.random.default_rng(seed))
    payload = {"command": "verify", "config": config, "levels": levels, "n": args.n}
    meta = _metadata(payload, seed)
    decreasing = all(b < a for a, b in
                     zip(report.oracle_distances, report.oracle_distances[1:]))
    passed = decreasing and report.oracle_distances[-1] <= 0.1
    if args.format == "json":
        body = report.to_json_dict()
        body["pass"] = passed
        _write_json(args.output, meta, body)
    else:
        meta["pass"] = passed
        rows = list(zip(report.thresholds, report.ks_distances,
                        report.effective_sizes, report.oracle_distances))
        _write_csv(args.output, meta, ("threshold", "ks", "eff_size", "oracle_dist"), rows)
    return 0


def _cmd_tail(args):
    config = _load_config(args.config)
    model, mixture, _ = _split_config(dict(config))
    if mixture is not None:
        raise ConfigError("tail requires a polar model config")
    grid = parse_grid(args.x_grid)
    payload = {"command": "tail", "config": config, "x_grid": args.x_grid}
    meta = _metadata(payload, None)
    rows = []
    for x in grid:
        asym = survival_x_asymptotic(model, x)
        exact = survival_x_oracle(model, x)
        rows.append((x, asym, exact, asym / exact))
    if args.format == "json":
        _write_json(args.output, meta, {
            "x": [r[0] for r in rows],
            "asymptotic": [r[1] for r in rows],
            "oracle": [r[2] for r in rows],
            "ratio": [r[3] for r in rows],
        })
    else:
        _write_csv(args.output, meta, ("x", "asymptotic", "oracle", "ratio"), rows)
    return 0


def _cmd_independence(args):
    config = _load_config(args.config)
    model, mixture, _ = _split_config(dict(config))
    if mixture is not None:
        raise ConfigError("independence requires a polar model config")
    exponents = parse_grid(args.t_grid)
    t_grid = [10.0 ** e for e in exponents]
    payload = {"command": "independence", "config": config, "t_grid": args.t_grid,
               "y": args.y, "x_std": args.x_std, "y_std": args.y_std}
    meta = _metadata(payload, None)
    cond = independence_condition_check(model, args.y, t_grid)
    decay = joint_exceedance_decay(model, args.x_std, args.y_std, t_grid)
    if args.format == "json":
        _write_json(args.output, meta, {
            "thresholds": t_grid,
            "ratios": cond.ratios,
            "ratio_pass": cond.passed,
            "products": decay.products,
            "decay_pass": decay.passed,
        })
    else:
        meta["ratio_pass"] = cond.passed
        meta["decay_pass"] = decay.passed
        rows = list(zip(t_grid, cond.ratios, decay.products))
        _write_csv(args.output, meta, ("t", "ratio", "t_times_joint"), rows)
    return 0


def _cmd_second_order(args):
    config = _load_config(args.config)
    model, mixture, _ = _split_config(dict(config))
    if mixture is not None:
        raise ConfigError("second-order requires a polar model config")
    xs = parse_grid(args.x_grid)
    zs = parse_grid(args.z_grid)
    payload = {"command": "second-order", "config": config,
               "x_grid": args.x_grid, "z_grid": args.z_grid}
    meta = _metadata(payload, None)
    rows = []
    for x in xs:
        psi_x = float(model.radial.aux_psi(x))
        frame = ConditionalFrame(t=x, m_t=0.0, psi_t=psi_x, a_t=1.0)
        for z in zs:
            so = second_order_conditional(model, x, z)
            oracle = conditional_cdf_oracle(model, frame, math.inf, so.y_threshold)
            rows.append((x, z, so.first_order, so.corrected, oracle))
    if args.format == "json":
        _write_json(args.output, meta, {
            "x": [r[0] for r in rows], "z": [r[1] for r in rows],
            "first_order": [r[2] for r in rows],
            "corrected": [r[3] for r in rows],
            "oracle": [r[4] for r in rows],
        })
    else:
        _write_csv(args.output, meta, ("x", "z", "first_order", "corrected", "oracle"), rows)
    return 0


def _cmd_decompose(args):
    config = _load_config(args.config)
    allowed = {"curve", "profile", "ridge_weight"}
    bad = set(config) - allowed
    if bad:
        raise ConfigError(f"unknown decompose config keys: {sorted(bad)}")
    if "curve" not in config:
        raise ConfigError("decompose config requires a 'curve' entry")
    curve = curve_from_dict(config["curve"])
    profile_name = config.get("profile", "gaussian")
    if profile_name != "gaussian":
        raise ConfigError(f"unknown radial profile '{profile_name}'")
    weight = None
    if config.get("ridge_weight", False):
        weight = lambda t: quartic_ridge_weight(2.0 * math.pi * (t - curve.t0))
    model = decompose_density(standard_normal_profile, curve, angular_weight=weight)
    payload = {"command": "decompose", "config": config}
    meta = _metadata(payload, None)
    ts = np.linspace(0.0, 1.0, args.points)
    xs = np.linspace(0.0, float(model.radial.quantile_b(1e6)), args.points)
    ang = model.angular.density(ts)
    surv = model.radial.survival(xs)
    rows = [("angular", float(t), float(a)) for t, a in zip(ts, ang)]
    rows += [("radial_survival", float(x), float(s)) for x, s in zip(xs, surv)]
    if args.format == "json":
        _write_json(args.output, meta, {
            "angular_grid": ts.tolist(), "angular_density": ang.tolist(),
            "radial_grid": xs.tolist(), "radial_survival": surv.tolist(),
        })
    else:
        _write_csv(args.output, meta, ("component", "grid", "value"), rows)
    return 0


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def _build_parser():
    parser = _Parser(prog="cevpolar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("-c", "--config", required=True, help="model config JSON")
        p.add_argument("-o", "--output", required=True, help="output artifact path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("limit", help="tabulate a limit law cdf/pdf")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--weight-minus", type=float, default=0.5)
    p.add_argument("--grid", required=True, help="lo:hi:step")
    common(p, needs_config=False)
    p.set_defaults(fn=_cmd_limit)

    p = sub.add_parser("simulate", help="draw joint or conditional samples")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    common(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("verify", help="convergence sweep toward the limit law")
    p.add_argument("--levels", required=True, help="comma list of quantile levels")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    common(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("tail", help="asymptotic vs oracle first-coordinate tail")
    p.add_argument("--x-grid", required=True, help="lo:hi:step")
    common(p)
    p.set_defaults(fn=_cmd_tail)

    p = sub.add_parser("independence", help="asymptotic-independence diagnostics")
    p.add_argument("--t-grid", required=True, help="lo:hi:step in log10 units")
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--x-std", type=float, default=1.0)
    p.add_argument("--y-std", type=float, default=1.0)
    common(p)
    p.set_defaults(fn=_cmd_independence)

    p = sub.add_parser("second-order", help="first-order vs corrected conditional values")
    p.add_argument("--x-grid", required=True, help="lo:hi:step")
    p.add_argument("--z-grid", required=True, help="lo:hi:step")
    common(p)
    p.set_defaults(fn=_cmd_second_order)

    p = sub.add_parser("decompose", help="split a profile density into radius and angle")
    p.add_argument("--points", type=int, default=201)
    common(p)
    p.set_defaults(fn=_cmd_decompose)

    return parser


def _glue_value_flags(argv):
    """Join value flags with their argument so negative grids parse."""
    out = []
    skip = False
    for i, arg in enumerate(argv):
        if skip:
            skip = False
            continue
        if arg in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{arg}={argv[i + 1]}")
            skip = True
        else:
            out.append(arg)
    return out


def run(argv=None):
    """Entry point returning an exit code; never raises on bad input."""
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(_glue_value_flags(list(argv)))
        return args.fn(args)
    except NumericError as exc:
        payload = exc.payload() if hasattr(exc, "payload") else {"error": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 2
    except (ConfigError, ConstructionError, DomainError, UnsupportedModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CevError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
