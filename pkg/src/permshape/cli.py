"""Command-line experiment runner.

Exit codes: 0 success, 1 a verification verdict failed, 2 configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, specfun
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DomainError, PermShapeError
from .saddle import AdmissibleFunction, check_admissibility
from .sampler import GRAND_CANONICAL, canonical_draws, grand_canonical_batch, grand_canonical_draws, tuned_t, \
    write_dump
from .series import exact_moments
from .stats import FAIL, to_jsonable, shape_distance
from .verify import resolve_suite, run_suite
from .weights import scaling_constants

SCHEMA_VERSION = 1
DEFAULT_SHAPE_GRID = tuple(np.round(np.arange(0.0, 5.0 + 1e-9, 0.25), 10))


def _provenance(module: str, operation: str, cfg: ExperimentConfig, **inputs) -> dict:
    base = {"model": cfg.model.to_dict(), "ensemble": cfg.ensemble, "n": cfg.n, "t": cfg.t, "seed": cfg.seed}
    base.update(inputs)
    return {"module": module, "operation": operation, "inputs": base, "package_version": __version__}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _need_n(cfg: ExperimentConfig) -> int:
    if cfg.n is None:
        raise ConfigError("this subcommand needs ensemble.n")
    return cfg.n


def cmd_sample(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.ensemble == GRAND_CANONICAL:
        t = cfg.t if cfg.t is not None else tuned_t(cfg.model, _need_n(cfg))
        draws = grand_canonical_draws(cfg.model, t, cfg.samples, cfg.seed, cfg.workers)
        param = t
    else:
        param = _need_n(cfg)
        draws = canonical_draws(cfg.model, param, cfg.samples, cfg.seed, cfg.workers)
    write_dump(out / "samples.txt", draws, cfg.model, cfg.ensemble, param, cfg.seed)
    return 0


def cmd_shape(cfg: ExperimentConfig, out: Path) -> int:
    n = _need_n(cfg)
    grid = np.array(cfg.x or DEFAULT_SHAPE_GRID, dtype=float)
    sc = scaling_constants(cfg.model, n)
    cuts = np.ceil(grid * sc.n_star).astype(np.int64)
    if cfg.ensemble == GRAND_CANONICAL:
        t = cfg.t if cfg.t is not None else tuned_t(cfg.model, n)
        samples = grand_canonical_batch(cfg.model, t, cfg.samples, cfg.seed, cuts, workers=cfg.workers)
    else:
        samples = canonical_draws(cfg.model, n, cfg.samples, cfg.seed, cfg.workers)
    res = shape_distance(samples, cfg.model, n, grid)
    _write_csv(out / "shape.csv", ["schema_version", "x", "empirical", "theory", "stderr"],
               [(SCHEMA_VERSION, x, e, th, se) for x, e, th, se in zip(grid, res.mean_profile, res.theory, res.stderr)])
    _write_json(out / "shape.json", {
        "schema_version": SCHEMA_VERSION, "n_star": sc.n_star, "n_bar": sc.n_bar,
        "sup_distance_of_mean": res.sup_distance, "sample_sup_q90": res.quantile(0.9),
        "exceed_probability_eps_0.1": res.exceed_prob,
        "provenance": _provenance("stats", "shape_distance", cfg, samples=cfg.samples, grid=grid)})
    return 0


def cmd_moments(cfg: ExperimentConfig, out: Path) -> int:
    n = _need_n(cfg)
    if cfg.cuts:
        cuts = list(cfg.cuts)
    elif cfg.x:
        n_star = scaling_constants(cfg.model, n).n_star
        cuts = [max(1, int(np.floor(x * n_star))) for x in cfg.x]
    else:
        raise ConfigError("moments needs grid.cuts or grid.x")
    M = exact_moments(cfg.model, n, cuts)
    L = len(cuts)
    _write_csv(out / "moments.csv", ["schema_version", "cut", "mean"] + [f"cov_{j + 1}" for j in range(L)],
               [(SCHEMA_VERSION, c, M.mean[i], *M.cov[i]) for i, c in enumerate(cuts)])
    _write_json(out / "moments.json", {
        "schema_version": SCHEMA_VERSION, "cuts": cuts, "mean": M.mean, "cov": M.cov,
        "increment_mean": M.increment_mean, "increment_cov": M.increment_cov,
        "provenance": _provenance("series", "exact_moments", cfg, cuts=cuts)})
    return 0


def cmd_saddle(cfg: ExperimentConfig, out: Path) -> int:
    n = _need_n(cfg)
    rep = check_admissibility(AdmissibleFunction.from_weights(cfg.model), n)
    _write_json(out / "saddle.json", {"schema_version": SCHEMA_VERSION, "report": rep.to_dict(),
                                      "provenance": _provenance("saddle", "check_admissibility", cfg)})
    return 0


def cmd_verify(cfg: ExperimentConfig, out: Path, seed_given: bool) -> int:
    try:
        resolve_suite(cfg.suite)
    except KeyError as e:
        raise ConfigError(str(e)) from None
    verdicts = run_suite(cfg.suite, cfg.workers, cfg.seed if seed_given else None)
    counts = {s: sum(v.status == s for v in verdicts) for s in ("pass", "fail", "adjudicate")}
    _write_json(out / "verdict.json", {"schema_version": SCHEMA_VERSION, "suite": cfg.suite,
                                       "criteria": [v.to_dict() for v in verdicts], "summary": counts})
    for v in verdicts:
        print(f"{v.name}: {v.status}")
    return 1 if counts[FAIL] else 0


def specfun_rows():
    for a in (0.5, 1.0, 1.5, 2.0, 3.0, 5.0):
        for x in (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
            yield "upper_gamma", a, x, specfun.upper_gamma(a, x)
    for a in (0.1, 0.5, 1.0, 2.5, 10.0, 100.0):
        yield "log_gamma", a, "", specfun.log_gamma(a)
    for s in (-3.5, -2.0, -1.0, -0.5, 0.0, 0.5, 2.0, 3.0, 4.5):
        yield "zeta", s, "", specfun.zeta_real(s)
    for k in range(9):
        for y in (0.0, 0.25, 0.5, 1.0):
            yield "bernoulli_poly", k, y, specfun.bernoulli_poly(k, y)


def cmd_specfun_table(cfg: ExperimentConfig, out: Path) -> int:
    _write_csv(out / "specfun.csv", ["schema_version", "function", "arg1", "arg2", "value"],
               [(SCHEMA_VERSION, *row) for row in specfun_rows()])
    return 0


COMMANDS = {"sample": cmd_sample, "shape": cmd_shape, "moments": cmd_moments, "saddle": cmd_saddle,
            "verify": cmd_verify, "specfun-table": cmd_specfun_table}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment configuration file")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--workers", type=int, help="worker processes for sampling")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--suite", help="verification suite: quick, full, or criterion numbers like 4,5")
    parser = argparse.ArgumentParser(prog="permshape", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        try:
            cfg = cfg.with_overrides(seed=args.seed, workers=args.workers,
                                     out=str(args.out) if args.out else None, suite=args.suite)
        except DomainError as e:
            raise ConfigError(f"bad command-line override: {e}") from None
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.seed is not None)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except PermShapeError as e:
        print(f"{e.module}: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"config error: line 0, column 0: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
