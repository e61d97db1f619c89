"""Command-line frontend: ``sgdlimits <command> ...``.

Exit codes: 0 success, 1 domain/numerical error, 2 configuration error. Progress goes to
stderr; tables go to stdout; data files go to the output directory (``--out``, else the
``SGDLIMITS_OUT`` environment variable, else the current directory).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .core import FLOAT_FMT, SummaryVec, make_rng, read_trajectory_csv, stack_mean, trajectory_to_csv
from .errors import ConfigError, SgdLimitsError
from .fixedpoints import (bgmm_fixed_points, tensor_pca_fixed_points, xor_components, xor_fixed_points,
                          xor_success_by_enumeration, xor_success_probability)
from .harness import (ExperimentConfig, ballistic_spec, compare_to_limit, estimate_one_step, export,
                      fit_ar1, run_ensemble, warm_target)
from .limits.integrators import euler_maruyama_paths, rk4_integrate
from .limits.systems import SYSTEM_NAMES, build_system

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUT_ENV = "SGDLIMITS_OUT"
log = logging.getLogger("sgdlimits")

COMMANDS = ("simulate", "limit-ode", "limit-sde", "fixed-points", "basin", "drift-check",
            "success-prob", "compare", "ar1")
LIMIT_KEYS = ("name", "system", "params", "init", "T", "h", "record_stride", "paths", "master_seed")
DRIFT_KEYS = ("name", "model", "init", "samples", "master_seed", "mc_samples")


# --- config loading -----------------------------------------------------------------------

def load_config(path: str | None, preset: str | None) -> dict[str, Any]:
    if preset is not None:
        res = resources.files("sgdlimits") / "presets" / f"{preset}.toml"
        if not res.is_file():
            raise ConfigError(f"unknown preset {preset!r}")
        return tomllib.loads(res.read_text())
    if path is None:
        raise ConfigError("this command needs --config or --preset")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from exc
    try:
        if p.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc


def parse_value(text: str) -> Any:
    """TOML literal if it parses as one (numbers, booleans, arrays, quoted strings), else a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    doc = copy.deepcopy(doc)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = doc
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table")
        node[parts[-1]] = parse_value(value.strip())
    return doc


def expand_sweep(doc: dict[str, Any]) -> list[dict[str, Any]]:
    """A ``sweep`` table maps one dotted key to a list of values; one experiment per value."""
    sweep = doc.get("sweep")
    if not sweep:
        return [{k: v for k, v in doc.items() if k != "sweep"}]
    if len(sweep) != 1:
        raise ConfigError("sweep supports exactly one key")
    (key, values), = sweep.items()
    if not isinstance(values, list) or not values:
        raise ConfigError(f"sweep values for {key!r} must be a non-empty list")
    out = []
    for v in values:
        d = apply_overrides({k: x for k, x in doc.items() if k != "sweep"}, [f"{key}={json.dumps(v)}"])
        d["name"] = f"{doc.get('name', 'experiment')}-{key.split('.')[-1]}{v:g}" if isinstance(v, (int, float)) \
            else f"{doc.get('name', 'experiment')}-{v}"
        out.append(d)
    return out


def experiment_configs(args) -> list[ExperimentConfig]:
    doc = apply_overrides(load_config(args.config, args.preset), args.set)
    if args.seed is not None:
        doc["master_seed"] = args.seed
    return [ExperimentConfig.from_dict(d) for d in expand_sweep(doc)]


def out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or ".")


def check_keys(doc: dict[str, Any], allowed: tuple[str, ...], where: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown {where} key {key!r}")


def parse_pairs(items: list[str] | None) -> dict[str, Any]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v.strip())
    return out


# --- commands -----------------------------------------------------------------------------

def _ensemble(cfg: ExperimentConfig, args, keep: bool):
    log.info("running %s: %d runs x %d steps (%s, seed %d)", cfg.name, cfg.runs, cfg.steps,
             cfg.model.family, cfg.master_seed)
    return run_ensemble(cfg, threads=args.threads, keep_trajectories=keep)


def _compare(cfg: ExperimentConfig, result, target: Path) -> float:
    spec = dict(cfg.compare or {})
    check_keys(spec, ("system", "params", "match_mode", "window", "h", "grid"), "compare")
    name, params = ballistic_spec(cfg.model)
    if "system" in spec:
        name, params = spec["system"], dict(spec.get("params", {}))
    sys_ = build_system(name, params)
    trajs = [t for t in result.trajectories if t is not None]
    window = tuple(spec["window"]) if "window" in spec else None
    rep = compare_to_limit(trajs, sys_, spec.get("match_mode", "mean"), window, spec.get("h", 1e-3),
                           spec.get("grid", 1000))
    export(rep, target)
    return rep.mean_distance


def _print_fractions(result, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["label", "count", "fraction", "se"])
    for lab, f in result.fractions().items():
        w.writerow([lab, f["count"], FLOAT_FMT % f["fraction"], FLOAT_FMT % f["se"]])
    for key, f in result.indicators().items():
        w.writerow([f"[{key}]", f["count"], FLOAT_FMT % f["fraction"], FLOAT_FMT % f["se"]])


def cmd_simulate(args) -> int:
    out = out_dir(args)
    for cfg in experiment_configs(args):
        result = _ensemble(cfg, args, keep=True)
        export(result, out / f"{cfg.name}.runs.csv")
        export(result, out / f"{cfg.name}.fractions.json")
        trajs = [t for t in result.trajectories if t is not None]
        if trajs:
            (out / f"{cfg.name}.mean.csv").write_text(trajectory_to_csv(stack_mean(trajs)))
        if cfg.compare is not None:
            d = _compare(cfg, result, out / f"{cfg.name}.compare.csv")
            log.info("%s: mean-trajectory sup distance %.4g", cfg.name, d)
        log.info("%s: wrote outputs to %s", cfg.name, out)
    return 0


def cmd_basin(args) -> int:
    out = out_dir(args)
    for cfg in experiment_configs(args):
        result = _ensemble(cfg, args, keep=False)
        export(result, out / f"{cfg.name}.fractions.json")
        print(f"# {cfg.name}")
        _print_fractions(result, sys.stdout)
    return 0


def cmd_compare(args) -> int:
    out = out_dir(args)
    for cfg in experiment_configs(args):
        result = _ensemble(cfg, args, keep=True)
        d = _compare(cfg, result, out / f"{cfg.name}.compare.csv")
        print(f"{cfg.name} {FLOAT_FMT % d}")
    return 0


def _limit_doc(args) -> dict[str, Any]:
    if args.config or args.preset:
        doc = apply_overrides(load_config(args.config, args.preset), args.set)
    else:
        doc = {}
    check_keys(doc, LIMIT_KEYS, "limit")
    if args.system:
        doc["system"] = args.system
    if args.param:
        doc.setdefault("params", {}).update(parse_pairs(args.param))
    if args.init:
        doc.setdefault("init", {}).update(parse_pairs(args.init))
    for key in ("T", "h"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    if args.stride is not None:
        doc["record_stride"] = args.stride
    if "system" not in doc:
        raise ConfigError(f"limit command needs a system ({', '.join(SYSTEM_NAMES)})")
    if "init" not in doc or "T" not in doc:
        raise ConfigError("limit command needs an initial state (init) and a horizon (T)")
    return doc


def cmd_limit_ode(args) -> int:
    doc = _limit_doc(args)
    sys_ = build_system(doc["system"], doc.get("params", {}))
    if not hasattr(sys_, "rhs"):
        raise ConfigError(f"{doc['system']} is a stochastic system; use limit-sde")
    u0 = _initial_summary(sys_.schema, doc["init"])
    traj = rk4_integrate(sys_, u0, float(doc["T"]), float(doc.get("h", 1e-3)), int(doc.get("record_stride", 1)))
    target = out_dir(args) / f"{doc.get('name', doc['system'])}.ode.csv"
    export(traj, target)
    log.info("wrote %s", target)
    return 0


def cmd_limit_sde(args) -> int:
    doc = _limit_doc(args)
    sys_ = build_system(doc["system"], doc.get("params", {}))
    if not hasattr(sys_, "drift"):
        raise ConfigError(f"{doc['system']} is deterministic; use limit-ode")
    u0 = _initial_summary(sys_.schema, doc["init"])
    seed = args.seed if args.seed is not None else int(doc.get("master_seed", 0))
    paths = int(args.paths if args.paths is not None else doc.get("paths", 1))
    streams = [make_rng(seed, i) for i in range(paths)]
    times, vals = euler_maruyama_paths(sys_, u0, float(doc["T"]), float(doc.get("h", 1e-3)), streams,
                                       int(doc.get("record_stride", 1)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path", "t", *sys_.schema])
    for p in range(paths):
        for j, t in enumerate(times):
            w.writerow([p, FLOAT_FMT % t, *(FLOAT_FMT % x for x in vals[p, j])])
    target = out_dir(args) / f"{doc.get('name', doc['system'])}.sde.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(buf.getvalue())
    log.info("wrote %d paths to %s", paths, target)
    return 0


def _initial_summary(schema, init: dict[str, Any]) -> SummaryVec:
    extra = [k for k in init if k not in schema]
    if extra:
        raise ConfigError(f"unknown initial coordinate {extra[0]!r}; schema is {', '.join(schema)}")
    missing = [k for k in schema if k not in init]
    if missing:
        raise ConfigError(f"initial state is missing {', '.join(missing)}")
    return SummaryVec(tuple(schema), np.array([float(init[k]) for k in schema]))


def cmd_fixed_points(args) -> int:
    if args.model == "tensor":
        if args.k is None or args.lam is None:
            raise ConfigError("tensor fixed points need --k and --lambda")
        fps = tensor_pca_fixed_points(args.k, args.lam, args.c_delta)
    elif args.model == "bgmm":
        fps = bgmm_fixed_points(args.alpha)
    else:
        fps = xor_fixed_points(args.alpha, args.K)
        if args.alpha < 0.125:
            conn = xor_components(args.K)
            log.info("K=%d: %d block assignments, %d connected sets, %d stable", args.K,
                     conn.n_sets, conn.n_components, conn.n_stable_components)
    w = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    w.writerow(["label", "coords", "radius2", "stability", "residual"])
    for fp in fps:
        coords = " ".join(f"{n}={x:.6g}" for n, x in zip(fp.coords.schema, fp.coords.values) if x != 0.0) \
            or "0"
        if args.model == "tensor":
            coords = " ".join(f"{n}={x:.6g}" for n, x in zip(fp.coords.schema, fp.coords.values))
        radius = f"{fp.blocks[0].radius2:.6g}" if fp.blocks else ""
        w.writerow([fp.label, coords, radius, fp.stability, f"{fp.residual:.3e}"])
    return 0


def cmd_success_prob(args) -> int:
    frac, val = xor_success_probability(args.K)
    if args.check:
        enum = xor_success_by_enumeration(args.K)
        if enum != frac:
            log.error("enumeration gives %s, closed form %s", enum, frac)
            return 1
        log.info("enumeration agrees: %s", enum)
    print(f"{frac} {val!r}")
    return 0


def cmd_drift_check(args) -> int:
    doc = apply_overrides(load_config(args.config, args.preset), args.set)
    check_keys(doc, DRIFT_KEYS, "drift-check")
    if "model" not in doc or "init" not in doc:
        raise ConfigError("drift-check needs 'model' and 'init' (a warm-start target)")
    seed = args.seed if args.seed is not None else int(doc.get("master_seed", 0))
    cfg = ExperimentConfig.from_dict({"model": doc["model"], "steps": 1, "init": doc["init"],
                                      "name": doc.get("name", "drift"), "master_seed": seed})
    model = cfg.model.build()
    target = warm_target(cfg, model.schema)
    rng = make_rng(seed, 0)
    x = model.warm_start(target, rng.child(0))
    M = int(args.samples or doc.get("samples", 100_000))
    est = estimate_one_step(model, x, cfg.delta, M, rng.child(1))
    name, params = ballistic_spec(cfg.model, int(doc.get("mc_samples", 100_000)))
    limit = build_system(name, params)(est.point)
    w = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    w.writerow(["coord", "point", "drift", "se", "limit", "z"])
    for i, c in enumerate(est.names):
        se = est.se_mean[i]
        z = (est.mean[i] - limit.values[i]) / se if se > 0 else float("nan")
        w.writerow([c, f"{est.point.values[i]:.6g}", f"{est.mean[i]:.6g}", f"{se:.3g}",
                    f"{limit.values[i] + 0.0:.6g}", f"{z:.2f}"])
    return 0


def cmd_ar1(args) -> int:
    rows = []
    if args.input:
        traj = read_trajectory_csv(args.input)
        if args.delta is None:
            raise ConfigError("ar1 on a CSV file needs --delta (time between samples)")
        series = traj.column(args.column) * args.scale
        rows.append((Path(args.input).stem, fit_ar1(series, args.delta)))
    else:
        for cfg in experiment_configs(args):
            if cfg.record_stride != 1:
                raise ConfigError("ar1 needs record_stride = 1")
            result = _ensemble(cfg, args, keep=True)
            scale = args.scale * (np.sqrt(cfg.model.dim) if args.rescale else 1.0)
            for i, tr in enumerate(result.trajectories):
                if tr is not None:
                    rows.append((f"{cfg.name}:{i}", fit_ar1(tr.column(args.column) * scale, cfg.delta)))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["series", "rho", "drift", "se_drift", "volatility", "n"])
    for name, f in rows:
        w.writerow([name, FLOAT_FMT % f.rho, FLOAT_FMT % f.drift, FLOAT_FMT % f.se_drift,
                    FLOAT_FMT % f.volatility, f.n])
    if len(rows) > 1:
        w.writerow(["pooled", "", FLOAT_FMT % float(np.mean([f.drift for _, f in rows])), "", "", ""])
    return 0


# --- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgdlimits", description="Effective dynamics of online SGD.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="TOML (or .json) experiment file")
            sp.add_argument("--preset", help="packaged preset name, e.g. fig4")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                            help="override a config entry (dotted keys, e.g. model.lambda=5)")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--threads", type=int, default=1)

    for name in ("simulate", "basin", "compare"):
        common(sub.add_parser(name))

    for name in ("limit-ode", "limit-sde"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--system", choices=SYSTEM_NAMES)
        sp.add_argument("--param", action="append", metavar="KEY=VALUE")
        sp.add_argument("--init", action="append", metavar="COORD=VALUE")
        sp.add_argument("--T", type=float)
        sp.add_argument("--h", type=float)
        sp.add_argument("--stride", type=int)
        if name == "limit-sde":
            sp.add_argument("--paths", type=int)

    sp = sub.add_parser("fixed-points")
    sp.add_argument("--model", choices=("tensor", "bgmm", "xor"), required=True)
    sp.add_argument("--k", type=int)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--c-delta", dest="c_delta", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=0.1)
    sp.add_argument("--K", type=int, default=4)

    sp = sub.add_parser("success-prob")
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--check", action="store_true", help="also verify by enumeration")

    sp = sub.add_parser("drift-check")
    common(sp)
    sp.add_argument("--samples", type=int, help="fresh data per estimate (default 1e5)")

    sp = sub.add_parser("ar1")
    common(sp)
    sp.add_argument("--input", help="trajectory CSV to fit instead of simulating")
    sp.add_argument("--column", default="m")
    sp.add_argument("--delta", type=float, help="sample spacing for --input")
    sp.add_argument("--scale", type=float, default=1.0, help="multiply the series by this")
    sp.add_argument("--rescale", action="store_true", help="multiply simulated series by sqrt(dim)")
    return p


HANDLERS = {
    "simulate": cmd_simulate, "basin": cmd_basin, "compare": cmd_compare,
    "limit-ode": cmd_limit_ode, "limit-sde": cmd_limit_sde, "fixed-points": cmd_fixed_points,
    "success-prob": cmd_success_prob, "drift-check": cmd_drift_check, "ar1": cmd_ar1,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s")
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SgdLimitsError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
