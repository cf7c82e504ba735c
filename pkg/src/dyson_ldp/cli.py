"""Command-line front end.

Subcommands: simulate, rate, optimal-path, minimize, estimate, tightness,
validate.  Every subcommand accepts --config FILE (JSON whose keys are the
snake_case form of the kebab-case flags); precedence is flags > config
file > built-in defaults, and the effective configuration is echoed into
the output manifest so runs are auditable.  DYSON_LDP_WORKERS supplies a
default worker count.  Exit codes: 0 success, 1 runtime or validation
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dbm import SimConfig, simulate
from .errors import DysonLDPError, InvalidParameterError
from .fixedtime import FixedTimeQuery, K_theta, optimal_path
from .paths import ScalarPath, uniform_grid
from .rate import RateParams, rate_I
from .sampler import estimate_tail_prob, estimate_tube_prob, tightness_check
from .validate import CRITERIA, run_suite
from .variational import VarProblem, minimize_path

FLOAT_FMT = "%.17g"


def _resolve_workers(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("DYSON_LDP_WORKERS")
    return int(env) if env else 1


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults, all as a snake_case dict."""
    cfg = dict(defaults)
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config", "_run")}
    path = getattr(args, "config", None)
    if path:
        with open(path) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update(given)
    return cfg


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: dict, files) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "files": [{"name": f.name, "sha256": _sha256(f)} for f in files],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _sidecar_manifest(command: str, cfg: dict, files) -> None:
    """Reproducibility record next to loose output files: the effective
    config plus a content hash per file."""
    files = [Path(f) for f in files]
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "files": [{"name": f.name, "sha256": _sha256(f)} for f in files],
    }
    target = files[0].with_name(files[0].name + ".manifest.json")
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _ensemble_csv(path: Path, grid, values) -> None:
    n = values.shape[1]
    header = "t," + ",".join(f"lambda_{i + 1}" for i in range(n))
    np.savetxt(
        path,
        np.column_stack([grid, values]),
        delimiter=",",
        header=header,
        comments="",
        fmt=FLOAT_FMT,
    )


SIM_DEFAULTS = {
    "n": 8,
    "theta": 0.0,
    "beta": 2,
    "steps": 1000,
    "t_max": 1.0,
    "seed": 0,
    "mode": "particle",
    "replicas": 1,
    "out": "out",
    "workers": None,
    "single_file": False,
}


def _simulate_one(cfg_and_replica):
    cfg, replica = cfg_and_replica
    return simulate(cfg, replica)


def cmd_simulate(args) -> int:
    cfg = _merge_config(args, SIM_DEFAULTS)
    workers = _resolve_workers(cfg["workers"])
    grid = uniform_grid(int(cfg["steps"]), float(cfg["t_max"]))
    sim = SimConfig(
        n=int(cfg["n"]),
        theta=float(cfg["theta"]),
        grid=grid,
        beta=int(cfg["beta"]),
        seed=int(cfg["seed"]),
        mode=str(cfg["mode"]),
    )
    replicas = int(cfg["replicas"])
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(sim, r) for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            ensembles = list(pool.map(_simulate_one, jobs))
    else:
        ensembles = [_simulate_one(j) for j in jobs]
    files = []
    if cfg["single_file"]:
        path = out_dir / "paths.csv"
        header = "replica,t," + ",".join(f"lambda_{i + 1}" for i in range(sim.n))
        rows = np.vstack(
            [
                np.column_stack([np.full(grid.size, e.replica_id), grid, e.values])
                for e in ensembles
            ]
        )
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt=FLOAT_FMT)
        files.append(path)
    else:
        for e in ensembles:
            path = out_dir / f"replica_{e.replica_id:04d}.csv"
            _ensemble_csv(path, grid, e.values)
            files.append(path)
    _write_manifest(out_dir, "simulate", {k: cfg[k] for k in SIM_DEFAULTS}, files)
    print(f"wrote {len(files)} path file(s) and manifest.json to {out_dir}")
    return 0


RATE_DEFAULTS = {
    "path": None,
    "theta": None,
    "beta": 2,
    "fixed": False,
    "x": None,
    "emit_optimal_path": None,
    "out": None,
}


def cmd_rate(args) -> int:
    cfg = _merge_config(args, RATE_DEFAULTS)
    if cfg["theta"] is None:
        raise InvalidParameterError("--theta is required")
    theta = float(cfg["theta"])
    if cfg["fixed"]:
        if cfg["x"] is None:
            raise InvalidParameterError("--fixed needs --x")
        q = FixedTimeQuery(theta=theta, x=float(cfg["x"]))
        value = K_theta(q)
        if cfg["beta"] == 1:
            value *= 0.5
        print("+inf" if np.isinf(value) else f"{value:.5f}")
        if cfg["emit_optimal_path"]:
            grid = uniform_grid(int(cfg["emit_optimal_path"]))
            out = Path(cfg["out"] or "optimal_path.csv")
            optimal_path(q, grid).write_csv(out)
            _sidecar_manifest("rate", {k: cfg[k] for k in RATE_DEFAULTS}, [out])
            print(f"wrote minimizer to {out}")
        return 0
    if not cfg["path"]:
        raise InvalidParameterError("need --path FILE or --fixed --x X")
    phi = ScalarPath.read_csv(cfg["path"])
    value = rate_I(phi, RateParams(theta=theta, beta=int(cfg["beta"])))
    print("+inf" if np.isinf(value) else f"{value:.10g}")
    return 0


OPT_DEFAULTS = {"theta": None, "x": None, "eta": 0.0, "steps": 1000, "out": "optimal_path.csv"}


def cmd_optimal_path(args) -> int:
    cfg = _merge_config(args, OPT_DEFAULTS)
    if cfg["theta"] is None or cfg["x"] is None:
        raise InvalidParameterError("--theta and --x are required")
    q = FixedTimeQuery(theta=float(cfg["theta"]), x=float(cfg["x"]), eta=float(cfg["eta"]))
    grid = uniform_grid(int(cfg["steps"]), t_min=q.eta)
    path = optimal_path(q, grid)
    out = Path(cfg["out"])
    path.write_csv(out)
    _sidecar_manifest("optimal-path", {k: cfg[k] for k in OPT_DEFAULTS}, [out])
    if q.eta == 0.0:
        print(f"K = {K_theta(q):.10g}; wrote {out}")
    else:
        print(f"wrote {out}")
    return 0


MIN_DEFAULTS = {
    "theta": None,
    "x": None,
    "eta": 0.0,
    "steps": 800,
    "max_iter": 400,
    "tol": 1e-11,
    "restarts": 3,
    "seed": 0,
    "out": "minimized_path.csv",
    "trace": None,
}


def cmd_minimize(args) -> int:
    cfg = _merge_config(args, MIN_DEFAULTS)
    if cfg["theta"] is None or cfg["x"] is None:
        raise InvalidParameterError("--theta and --x are required")
    grid = uniform_grid(int(cfg["steps"]), t_min=float(cfg["eta"]))
    problem = VarProblem(
        theta=float(cfg["theta"]),
        x=float(cfg["x"]),
        grid=grid,
        eta=float(cfg["eta"]),
        max_iter=int(cfg["max_iter"]),
        tol=float(cfg["tol"]),
    )
    res = minimize_path(
        problem, restarts=int(cfg["restarts"]), seed=int(cfg["seed"]), record_trace=bool(cfg["trace"])
    )
    res.path.write_csv(cfg["out"])
    status = "converged" if res.converged else "max-iterations (best iterate returned)"
    print(f"objective = {res.objective:.10g} after {res.iterations} iterations ({status})")
    files = [cfg["out"]]
    if cfg["trace"]:
        rows = np.array(res.trace)
        np.savetxt(cfg["trace"], rows, delimiter=",", header="iter,objective,step", comments="", fmt="%.17g")
        print(f"wrote trace to {cfg['trace']}")
        files.append(cfg["trace"])
    _sidecar_manifest("minimize", {k: cfg[k] for k in MIN_DEFAULTS}, files)
    return 0


EST_DEFAULTS = {
    "kind": "tail",
    "n": 16,
    "theta": 0.0,
    "x": None,
    "path": None,
    "delta": 0.3,
    "replicas": 1000,
    "steps": 1000,
    "seed": 0,
    "tilt": "optimal",
    "workers": None,
    "out": None,
}


def cmd_estimate(args) -> int:
    cfg = _merge_config(args, EST_DEFAULTS)
    workers = _resolve_workers(cfg["workers"])
    theta, n = float(cfg["theta"]), int(cfg["n"])
    if cfg["kind"] == "tail":
        if cfg["x"] is None:
            raise InvalidParameterError("tail estimation needs --x")
        method = "tilted" if cfg["tilt"] == "optimal" else "naive"
        report = estimate_tail_prob(
            theta,
            n,
            float(cfg["x"]),
            int(cfg["replicas"]),
            seed=int(cfg["seed"]),
            steps=int(cfg["steps"]),
            method=method,
            workers=workers,
        )
    elif cfg["kind"] == "tube":
        if cfg["path"]:
            phi = ScalarPath.read_csv(cfg["path"])
        elif cfg["x"] is not None:
            phi = optimal_path(
                FixedTimeQuery(theta=theta, x=float(cfg["x"])), uniform_grid(int(cfg["steps"]))
            )
        else:
            raise InvalidParameterError("tube estimation needs --path FILE or --x")
        report = estimate_tube_prob(
            theta,
            n,
            phi,
            float(cfg["delta"]),
            int(cfg["replicas"]),
            seed=int(cfg["seed"]),
            tilt="optimal" if cfg["tilt"] == "optimal" else "none",
            workers=workers,
        )
    else:
        raise InvalidParameterError(f"--kind must be tube or tail, got {cfg['kind']!r}")
    mlr = "nan" if report.minus_log_rate is None else f"{report.minus_log_rate:.5f}"
    print(f"p_hat = {report.p_hat:.6g}, -(1/N) log p_hat = {mlr}, target = {report.target_rate:.5f}")
    if cfg["out"]:
        payload = report.to_dict()
        payload["config"] = {k: cfg[k] for k in EST_DEFAULTS}
        Path(cfg["out"]).write_text(json.dumps(payload, indent=2))
        print(f"wrote report to {cfg['out']}")
    return 0


TIGHT_DEFAULTS = {
    "n": 32,
    "theta": 0.0,
    "replicas": 500,
    "steps": 1000,
    "eta": 0.8,
    "delta": 0.05,
    "p_index": 1,
    "seed": 0,
    "out": None,
}


def cmd_tightness(args) -> int:
    cfg = _merge_config(args, TIGHT_DEFAULTS)
    grid = uniform_grid(int(cfg["steps"]))
    sim = SimConfig(n=int(cfg["n"]), theta=float(cfg["theta"]), grid=grid, seed=int(cfg["seed"]))
    ensembles = [simulate(sim, r) for r in range(int(cfg["replicas"]))]
    rep = tightness_check(ensembles, eta=float(cfg["eta"]), delta=float(cfg["delta"]), p=int(cfg["p_index"]))
    verdict = "PASS" if rep.passed else "FAIL"
    print(
        f"{verdict}: frequency {rep.frequency:.3e} vs bound {rep.bound:.3e} "
        f"(eta={rep.eta}, delta={rep.delta}, {rep.n_windows} windows)"
    )
    if cfg["out"]:
        payload = dict(rep.__dict__)
        payload["config"] = {k: cfg[k] for k in TIGHT_DEFAULTS}
        Path(cfg["out"]).write_text(json.dumps(payload, indent=2))
    return 0 if rep.passed else 1


VALIDATE_DEFAULTS = {"only": None, "json": False, "workers": None}


def cmd_validate(args) -> int:
    cfg = _merge_config(args, VALIDATE_DEFAULTS)
    workers = _resolve_workers(cfg["workers"])
    only = None
    if cfg["only"]:
        only = [s.strip().upper() for s in str(cfg["only"]).split(",") if s.strip()]
        for name in only:
            if name not in CRITERIA:
                raise InvalidParameterError(f"unknown criterion {name!r}")
    echo = (lambda *_: None) if cfg["json"] else print
    results = run_suite(only=only, workers=workers, echo=echo)
    if cfg["json"]:
        print(json.dumps([r.to_dict() for r in results], indent=2))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyson-ldp",
        description="Spiked Dyson Brownian motion: simulation, deviation rates, rare-event estimation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON config file (snake_case keys)")
        p.set_defaults(_run=fn)
        return p

    p = add("simulate", cmd_simulate, "sample eigenvalue paths and write CSVs")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--beta", type=int, choices=(1, 2))
    p.add_argument("--steps", type=int)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("particle", "matrix"))
    p.add_argument("--replicas", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--single-file", dest="single_file", action="store_true")

    p = add("rate", cmd_rate, "evaluate the path rate or the fixed-time rate")
    p.add_argument("--path")
    p.add_argument("--theta", type=float)
    p.add_argument("--beta", type=int, choices=(1, 2))
    p.add_argument("--fixed", action="store_true")
    p.add_argument("--x", type=float)
    p.add_argument("--emit-optimal-path", dest="emit_optimal_path", type=int, metavar="STEPS")
    p.add_argument("--out")

    p = add("optimal-path", cmd_optimal_path, "write the fixed-time minimizing path")
    p.add_argument("--theta", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--out")

    p = add("minimize", cmd_minimize, "run the variational oracle")
    p.add_argument("--theta", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--trace")

    p = add("estimate", cmd_estimate, "rare-event probability estimation")
    p.add_argument("--kind", choices=("tube", "tail"))
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--path")
    p.add_argument("--delta", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tilt", choices=("optimal", "none"))
    p.add_argument("--workers", type=int)
    p.add_argument("--out")

    p = add("tightness", cmd_tightness, "empirical window-oscillation tail check")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--p-index", dest="p_index", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("validate", cmd_validate, "run the acceptance criteria")
    p.add_argument("--only")
    p.add_argument("--json", action="store_true")
    p.add_argument("--workers", type=int)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args._run(args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DysonLDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
