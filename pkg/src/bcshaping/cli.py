"""Command-line entry point: ``bcshaping region|gain|mi``.

Configuration is a YAML file (``--config``) or a named preset (``--preset``);
flags given on the command line override both. Every key and its default is
listed in ``DEFAULTS``. Output files are CSV with numbers written at 17
significant digits, so reading them back gives the same doubles.

Exit codes: 0 success, 2 bad configuration or input, 3 solver failure
(multiplier bracket exhausted, or fewer than 90% of sweep points converged).
Worker processes for independent strategies: ``BCSHAPING_WORKERS``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .channel_model import Constellation, DomainError, JointDistribution, channel_from_snr
from .metrics import FrontierCache, SearchOptions, default_r2_grid, max_rate_gain, max_shaping_gain
from .mutual_info import QuadratureSpec, mi_u_y, mi_x_y, mi_x_y_given_u
from .optimizer import BracketError, OptimizerOptions
from .oracle import MI_KINDS, mc_mutual_info
from .region import (
    FrontierPoint,
    RegionFrontier,
    frontier_builder,
    parse_strategy,
    strategy_frontier,
    upper_envelope,
)

log = logging.getLogger("bcshaping")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
MIN_CONVERGED_FRACTION = 0.9
WORKERS_ENV = "BCSHAPING_WORKERS"

DEFAULTS = {
    "m": 4,
    "snr1_db": 10.0,
    "snr2_db": 8.0,
    "power": 1.0,
    "strategies": ["sm-opt", "sm-uniform"],
    "gain": {"a": "sm-opt", "b": "sm-uniform", "r2_points": 101, "bracket": [0.0, 6.0],
             "tolerance_db": 0.01, "snr_gain": True},
    "theta_points": 51,
    "ts_points": 51,
    "quad_order": 96,
    "seed": 0,
    "out": "results",
    "optimizer": {},
    "mi": {"joint": None, "constellation": None, "sigma_sq": None, "snr_db": None,
           "which": ["U;Y", "X;Y|U", "X;Y"], "samples": 1000000},
}

OPTIMIZER_KEYS = {
    "max_outer_iters": int, "max_alt_iters": int, "prob_step_rule": str, "pos_step_rule": str,
    "multiplier_bracket": list, "power_tolerance": float, "objective_tolerance": float,
    "restarts": int, "init_prob_step": float, "init_pos_step": float, "position_jitter": float,
}


def _table_rows(table, m, snr1, rows, **extra):
    return {
        f"{table}-m{m}-row{k}": dict(m=m, snr1_db=snr1, snr2_db=snr2, **extra)
        for k, snr2 in enumerate(rows, start=1)
    }


PRESETS = {}
PRESETS.update(_table_rows("table2", 4, 10.0, [8.0, 6.0, 4.0, 2.0]))
# from M = 8 on, SM symbols are sums of the two users' sub-constellation symbols
_T2_SUM = dict(strategies=["sm-opt-sum", "sm-uniform-sum"], gain={"a": "sm-opt-sum", "b": "sm-uniform-sum"})
PRESETS.update(_table_rows("table2", 8, 16.0, [14.0, 12.0, 10.0, 8.0], **_T2_SUM))
PRESETS.update(_table_rows("table2", 16, 18.0, [16.0, 14.0, 12.0, 10.0], **_T2_SUM))
_T3 = dict(strategies=["ts", "sm-opt", "sc"], gain={"a": "sm-opt", "b": "ts"})
PRESETS.update(_table_rows("table3", 4, 10.0, [8.0, 6.0, 4.0, 2.0, 0.0], **_T3))
PRESETS.update(_table_rows("table3", 8, 16.0, [14.0, 12.0, 10.0, 8.0], **_T3))
PRESETS.update(_table_rows("table3", 16, 18.0, [16.0, 14.0, 12.0, 10.0], **_T3))


class ConfigError(DomainError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    snr1_db: float
    snr2_db: float
    power: float
    strategies: tuple
    theta_points: int
    ts_points: int
    quad_order: int
    seed: int
    out: Path
    optimizer: OptimizerOptions
    gain: dict = field(default_factory=dict)
    mi: dict = field(default_factory=dict)

    @property
    def channel(self):
        return channel_from_snr(self.snr1_db, self.snr2_db, self.power)

    @property
    def theta_grid(self):
        return tuple(np.linspace(0.0, 0.5, self.theta_points))


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for key, value in over.items():
        name = f"{path}{key}"
        if key not in base and path != "optimizer.":
            raise ConfigError(f"unknown config field {name!r}")
        if isinstance(base.get(key), dict) and value is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"config field {name!r} must be a mapping")
            out[key] = _merge(base[key], value, name + ".")
        else:
            out[key] = value
    return out


def _typed(raw, name, kind):
    try:
        if kind is int:
            if isinstance(raw, bool) or float(raw) != int(raw):
                raise ValueError
            return int(raw)
        if kind is float:
            if isinstance(raw, bool):
                raise ValueError
            return float(raw)
        if kind is str:
            if not isinstance(raw, str):
                raise ValueError
            return raw
        if kind is list:
            if not isinstance(raw, (list, tuple)):
                raise ValueError
            return list(raw)
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"config field {name!r} must be of type {kind.__name__}, got {raw!r}")


def check_tag(tag, m, name="strategy"):
    if not isinstance(tag, str):
        raise ConfigError(f"config field {name!r} must hold strategy tags, got {tag!r}")
    for part in tag.split("+"):
        try:
            parse_strategy(part, m)
        except DomainError as err:
            raise ConfigError(f"config field {name!r}: {err}") from None


def build_config(raw):
    """Validate a merged mapping and turn it into an ``ExperimentConfig``."""
    m = _typed(raw["m"], "m", int)
    if m < 2 or m & (m - 1):
        raise ConfigError(f"config field 'm' must be a power of two >= 2, got {m}")
    snr1 = _typed(raw["snr1_db"], "snr1_db", float)
    snr2 = _typed(raw["snr2_db"], "snr2_db", float)
    power = _typed(raw["power"], "power", float)
    if not snr1 > snr2:
        raise ConfigError("config fields 'snr1_db' and 'snr2_db' need snr1_db > snr2_db")
    if not power > 0:
        raise ConfigError("config field 'power' must be positive")
    strategies = _typed(raw["strategies"], "strategies", list)
    if not strategies or not all(isinstance(s, str) for s in strategies):
        raise ConfigError("config field 'strategies' must be a nonempty list of tags")
    gain = dict(raw["gain"])
    for name, tags in (("strategies", strategies), ("gain.a", [gain["a"]]), ("gain.b", [gain["b"]])):
        for tag in tags:
            check_tag(tag, m, name)
    theta_points = _typed(raw["theta_points"], "theta_points", int)
    ts_points = _typed(raw["ts_points"], "ts_points", int)
    if theta_points < 2 or ts_points < 2:
        raise ConfigError("config fields 'theta_points' and 'ts_points' must be >= 2")
    quad_order = _typed(raw["quad_order"], "quad_order", int)
    seed = _typed(raw["seed"], "seed", int)
    opt = {}
    for key, value in (raw["optimizer"] or {}).items():
        if key not in OPTIMIZER_KEYS:
            raise ConfigError(f"unknown config field 'optimizer.{key}'")
        opt[key] = _typed(value, f"optimizer.{key}", OPTIMIZER_KEYS[key])
    if "multiplier_bracket" in opt:
        opt["multiplier_bracket"] = tuple(float(v) for v in opt["multiplier_bracket"])
    try:
        quad = QuadratureSpec(order=quad_order)
        options = OptimizerOptions(seed=seed, quad=quad, **opt)
    except DomainError as err:
        raise ConfigError(str(err)) from None
    gain["r2_points"] = _typed(gain["r2_points"], "gain.r2_points", int)
    gain["bracket"] = tuple(float(v) for v in _typed(gain["bracket"], "gain.bracket", list))
    gain["tolerance_db"] = _typed(gain["tolerance_db"], "gain.tolerance_db", float)
    for key in ("a", "b"):
        _typed(gain[key], f"gain.{key}", str)
    return ExperimentConfig(
        m=m, snr1_db=snr1, snr2_db=snr2, power=power, strategies=tuple(strategies),
        theta_points=theta_points, ts_points=ts_points, quad_order=quad_order, seed=seed,
        out=Path(_typed(raw["out"], "out", str)), optimizer=options, gain=gain, mi=dict(raw["mi"]),
    )


def load_config(path=None, preset=None, overrides=None):
    raw = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {', '.join(sorted(PRESETS))}")
        raw = _merge(raw, PRESETS[preset])
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise ConfigError(f"config {path} is not valid YAML: {err}") from None
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a mapping at top level")
        raw = _merge(raw, data)
    raw = _merge(raw, overrides or {})
    return build_config(raw)


# -- serialization ------------------------------------------------------------

FRONTIER_HEADER = ["strategy", "theta", "r2", "r1_plus_r2", "converged"]
GAIN_HEADER = ["r2", "delta_snr_db", "g_r1_percent"]


def fmt(value):
    """17 significant digits; empty for a missing value."""
    if value is None:
        return ""
    return format(float(value), ".17g")


def write_frontier_csv(path, frontier):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRONTIER_HEADER)
        for pt in frontier.points:
            theta = pt.theta if pt.theta is not None else pt.alpha
            w.writerow([pt.strategy, fmt(theta), fmt(pt.r2), fmt(pt.r_total), str(bool(pt.converged)).lower()])


def read_frontier_csv(path, channel=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != FRONTIER_HEADER:
        raise DomainError(f"{path} is not a frontier file")
    points = []
    for row in rows[1:]:
        tag, theta, r2, total, conv = row
        points.append(FrontierPoint(
            r_total=float(total), r2=float(r2), theta=float(theta) if theta else None,
            strategy=tag, converged=conv == "true",
        ))
    tag = points[0].strategy if points else ""
    return RegionFrontier(tuple(points), channel, tag)


def write_gain_csv(path, report, rate_report=None):
    rate = rate_report if rate_report is not None else report
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAIN_HEADER)
        for r2, d, g in zip(report.r2, report.delta_snr_db, rate.g_r1_percent):
            w.writerow([fmt(r2), fmt(d), fmt(g)])
        fh.write(summary_line(report, rate) + "\n")


def summary_line(snr_report, rate_report):
    unrestricted = next((f.split("=", 1)[1] for f in rate_report.flags if f.startswith("unrestricted_max=")), "nan")
    return (
        f"# A={rate_report.strategy_a} B={rate_report.strategy_b}"
        f" mg_snr_db={fmt(snr_report.mg_snr_db)} argmax_r2_snr={fmt(snr_report.argmax_r2_snr)}"
        f" mg_r1_percent={fmt(rate_report.mg_r1_percent)} argmax_r2_rate={fmt(rate_report.argmax_r2_rate)}"
        f" mg_r1_unrestricted_percent={fmt(float(unrestricted))}"
    )


def _slug(tag):
    return tag.replace(":", "_").replace("+", "_or_")


# -- commands -----------------------------------------------------------------


def _workers():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def _frontier_job(args):
    channel, tag, m, theta_grid, opts, ts_points = args
    return strategy_frontier(channel, tag, m, theta_grid, opts, ts_points)


def compute_frontiers(cfg, tags):
    jobs = [(cfg.channel, t, cfg.m, cfg.theta_grid, cfg.optimizer, cfg.ts_points) for t in tags]
    n = min(_workers(), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(n) as pool:
            return list(pool.map(_frontier_job, jobs))
    return [_frontier_job(j) for j in jobs]


def _check_converged(frontier):
    pts = frontier.points
    ok = sum(pt.converged for pt in pts)
    if pts and ok < MIN_CONVERGED_FRACTION * len(pts):
        raise BracketError(f"only {ok} of {len(pts)} points of {frontier.strategy} converged")


def cmd_region(cfg):
    cfg.out.mkdir(parents=True, exist_ok=True)
    frontiers = compute_frontiers(cfg, cfg.strategies)
    plot_rows = []
    written = []
    for tag, raw in zip(cfg.strategies, frontiers):
        env = upper_envelope(raw)
        for kind, fr in (("raw", raw), ("envelope", env)):
            path = cfg.out / f"frontier_{_slug(tag)}_{kind}.csv"
            write_frontier_csv(path, fr)
            written.append(path)
            plot_rows += [(tag, kind, pt.r2, pt.r_total) for pt in fr.points]
    plot = cfg.out / "plot_data.csv"
    with open(plot, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "kind", "r2", "r1_plus_r2"])
        for tag, kind, r2, total in plot_rows:
            w.writerow([tag, kind, fmt(r2), fmt(total)])
    written.append(plot)
    for fr in frontiers:
        _check_converged(fr)
    return written


def cmd_gain(cfg, a_tag=None, b_tag=None):
    a_tag = a_tag or cfg.gain["a"]
    b_tag = b_tag or cfg.gain["b"]
    cfg.out.mkdir(parents=True, exist_ok=True)
    a_raw, b_raw = compute_frontiers(cfg, [a_tag, b_tag])
    for fr in (a_raw, b_raw):
        _check_converged(fr)
    grid = default_r2_grid(upper_envelope(a_raw), cfg.gain["r2_points"])
    rate = max_rate_gain(a_raw, b_raw, grid)
    if cfg.gain.get("snr_gain", True):
        builder = frontier_builder(b_tag, cfg.m, cfg.theta_grid, cfg.optimizer)
        cache = FrontierCache(builder, cfg.channel)
        cache.store[0.0] = upper_envelope(b_raw)
        search = SearchOptions(bracket=cfg.gain["bracket"], tolerance_db=cfg.gain["tolerance_db"])
        snr = max_shaping_gain(a_raw, cache, cfg.channel, grid, search)
    else:
        snr = replace(rate, delta_snr_db=np.full(grid.shape, np.nan), mg_snr_db=float("nan"))
    path = cfg.out / f"gain_{_slug(a_tag)}_vs_{_slug(b_tag)}.csv"
    write_gain_csv(path, snr, rate)
    print(summary_line(snr, rate))
    return path


def _mi_inputs(cfg):
    mi_cfg = cfg.mi
    if mi_cfg.get("constellation") is None:
        raise ConfigError("config field 'mi.constellation' is required for mi")
    try:
        constellation = Constellation(np.asarray(mi_cfg["constellation"], dtype=float))
        if mi_cfg.get("joint") is None:
            joint = JointDistribution(np.eye(len(constellation)) / len(constellation))
        else:
            joint = JointDistribution(np.asarray(mi_cfg["joint"], dtype=float))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"config field 'mi': {err}") from None
    if joint.x_size != len(constellation):
        raise ConfigError("config field 'mi.joint' does not match the constellation size")
    if mi_cfg.get("sigma_sq") is not None:
        sigma_sq = _typed(mi_cfg["sigma_sq"], "mi.sigma_sq", float)
    elif mi_cfg.get("snr_db") is not None:
        sigma_sq = cfg.power * 10.0 ** (-_typed(mi_cfg["snr_db"], "mi.snr_db", float) / 10.0)
    else:
        raise ConfigError("config needs 'mi.sigma_sq' or 'mi.snr_db'")
    if not sigma_sq > 0:
        raise ConfigError("config field 'mi.sigma_sq' must be positive")
    which = mi_cfg.get("which") or list(MI_KINDS)
    which = [which] if isinstance(which, str) else list(which)
    for kind in which:
        if kind not in MI_KINDS:
            raise ConfigError(f"config field 'mi.which' has unknown kind {kind!r}")
    return joint, constellation, sigma_sq, which


def cmd_mi(cfg, mc=False):
    joint, constellation, sigma_sq, which = _mi_inputs(cfg)
    quad = cfg.optimizer.quad
    funcs = {
        "U;Y": lambda: mi_u_y(joint, constellation, sigma_sq, quad),
        "X;Y|U": lambda: mi_x_y_given_u(joint, constellation, sigma_sq, quad),
        "X;Y": lambda: mi_x_y(constellation, joint.probs.sum(axis=0), sigma_sq, quad),
    }
    lines = []
    for kind in which:
        value = funcs[kind]()
        line = f"I({kind}) quad={fmt(value)}"
        if mc:
            est = mc_mutual_info(joint, constellation, sigma_sq, kind,
                                 int(cfg.mi.get("samples") or 10**6), cfg.seed)
            line += f" mc={fmt(est.value)} std_error={fmt(est.std_error)} samples={est.samples}"
        lines.append(line)
        print(line)
    return lines


# -- entry point --------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="bcshaping", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["region", "gain", "mi"])
    ap.add_argument("--config", help="YAML configuration file")
    ap.add_argument("--preset", help="named configuration, e.g. table2-m4-row1")
    ap.add_argument("--strategy", action="append",
                    help="strategy tag (repeatable); for gain, first is A and second is B")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--mc", action="store_true", help="add a Monte Carlo estimate (mi)")
    ap.add_argument("--quad-order", type=int)
    ap.add_argument("--theta-points", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    for key, value in (("out", args.out), ("seed", args.seed), ("quad_order", args.quad_order),
                       ("theta_points", args.theta_points)):
        if value is not None:
            overrides[key] = value
    if args.strategy and args.command == "region":
        overrides["strategies"] = args.strategy
    try:
        cfg = load_config(args.config, args.preset, overrides)
        if args.command == "region":
            for path in cmd_region(cfg):
                print(path)
        elif args.command == "gain":
            tags = args.strategy or []
            if len(tags) not in (0, 2):
                raise ConfigError("gain takes exactly two --strategy tags (A then B)")
            print(cmd_gain(cfg, *tags) if tags else cmd_gain(cfg))
        else:
            cmd_mi(cfg, mc=args.mc)
    except BracketError as err:
        print(f"error: solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
