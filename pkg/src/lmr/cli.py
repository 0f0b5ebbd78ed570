"""Experiment harness: seeded batch runs, sweeps, ODE traces and figures.

Verbs:

* ``run``      -- one or many seeded solver runs; writes one trajectory CSV
  per run plus a summary file.
* ``sweep``    -- batches over one parameter; writes an aggregate CSV with
  per-value statistics (and a log-fit for dimension sweeps).
* ``ode``      -- integrate a scalar system; writes a (t, h, rho) CSV.
* ``plot``     -- render a CSV (or a directory of run CSVs) to SVG.
* ``spurious`` -- enumerate the spurious critical points of a seeded target.
* ``check``    -- run the built-in invariant suite.

Exit codes: 0 success, 1 config error, 2 numerical failure,
3 invariant/check failure.  ``LMR_THREADS`` caps the worker pool for
batches; per-run RNG streams make results independent of scheduling.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    assumption_constants,
    enumerate_spurious,
    projected_residual_norm,
    stage_classify,
    stepsize_threshold_estimate,
)
from .losses import LossSpec, make_ensemble
from .manifold import GroundTruth
from .ode import OdeFailure, OdeSystem, ScalarState, integrate
from .optimizer import PgdConfig, TrajectoryRecord, run_pgd
from .sampling import RandomSpec, sample_grd, spawn_rngs
from .validation import ConfigError

PROBLEM_KINDS = ("f1", "f2", "sensing", "completion", "pr")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CHECK = 3


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "f1"
    n: int = 200
    n2: int = 0          # 0 means square (n x n)
    r: int = 10
    m: int = 0           # 0 picks a kind-dependent default
    theta: float = 1.0
    spsd: bool = False
    alpha: float = 0.3
    max_iter: int = 2000
    tol_rel: float = 1e-6
    record_every: int = 1
    delta: float = 0.0   # 0 means 0.2 * d_min
    seed: int = 0
    repeats: int = 1
    output: str = "lmr_out"

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ConfigError(f"problem kind must be one of {PROBLEM_KINDS}, "
                              f"got {self.kind!r}")
        if self.n < 1 or self.r < 1 or self.repeats < 1:
            raise ConfigError("n, r and repeats must be positive")
        if self.r > self.n:
            raise ConfigError(f"rank {self.r} exceeds dimension {self.n}")
        if self.kind == "pr" and self.r != 1:
            raise ConfigError("phase retrieval is a rank-1 problem")
        if self.n2 and self.n2 != self.n:
            if self.kind in ("f2", "pr"):
                raise ConfigError(f"{self.kind} problems are symmetric; "
                                  "n2 must equal n")
            if self.spsd:
                raise ConfigError("spsd requires a square problem")
            if self.r > min(self.n, self.n2):
                raise ConfigError("rank exceeds the smaller dimension")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not self.tol_rel > 0:
            raise ConfigError("tol_rel must be positive")

    @property
    def ncols(self) -> int:
        return self.n2 if self.n2 else self.n

    @property
    def m_effective(self) -> int:
        if self.m:
            return self.m
        if self.kind == "sensing":
            return 5 * self.n * self.r
        if self.kind == "completion":
            return max(1, (self.n * self.ncols) // 2)
        if self.kind == "pr":
            return 10 * self.n
        return 0

    def canonical(self) -> str:
        parts = [f"{f.name}={getattr(self, f.name)!r}"
                 for f in fields(self) if f.name != "output"]
        return ";".join(parts)

    def digest(self) -> str:
        return hashlib.sha1(self.canonical().encode()).hexdigest()[:12]


_CONFIG_SECTIONS = {
    "problem": ("kind", "n", "n2", "r", "m", "theta", "spsd"),
    "pgd": ("alpha", "max_iter", "tol_rel", "record_every"),
    "experiment": ("delta", "seed", "repeats", "output"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    typ = _FIELD_TYPES[key]
    if typ == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    return raw


def load_config_file(path: str) -> dict:
    """Parse the sectioned key-value config; report file/section/key on error."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"{path}: cannot read config file")
    values: dict = {}
    for section in parser.sections():
        if section not in _CONFIG_SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _CONFIG_SECTIONS[section]:
                raise ConfigError(
                    f"{path}: unknown key {key!r} in section [{section}]")
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: [{section}] {key} = {raw!r}: {exc}") from exc
    return values


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for f in fields(ExperimentConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# Problem construction and single runs
# ---------------------------------------------------------------------------

def build_problem(cfg: ExperimentConfig, rng: np.random.Generator):
    """Fresh (loss, initial point, truth) triple for one run."""
    from .manifold import FactoredPoint
    from .sampling import sample_stiefel

    spsd = cfg.spsd or cfg.kind in ("f2", "pr")
    if cfg.r == 1:
        d = np.array([1.0])
    else:
        d = np.sort(rng.uniform(0.5, 1.5, cfg.r))[::-1]
    if cfg.ncols == cfg.n:
        truth = GroundTruth.from_singular_values(d, rng=rng, n=cfg.n,
                                                 spsd=spsd)
        z0 = sample_grd(RandomSpec(n=cfg.n, r=cfg.r, spsd=spsd), rng)
    else:
        # rectangular target: independent frames per side; the initial
        # point follows the same frames-plus-uniform-spectrum recipe
        truth = GroundTruth.from_singular_values(
            d, left=sample_stiefel(cfg.n, cfg.r, rng),
            right=sample_stiefel(cfg.ncols, cfg.r, rng))
        sig = np.sort(rng.uniform(0.5, 1.5, cfg.r))[::-1]
        z0 = FactoredPoint(sample_stiefel(cfg.n, cfg.r, rng), np.diag(sig),
                           sample_stiefel(cfg.ncols, cfg.r, rng))
    if cfg.kind == "f1":
        spec = LossSpec("f1", ground_truth=truth)
    elif cfg.kind == "f2":
        spec = LossSpec("f2", ground_truth=truth, theta=cfg.theta)
    else:
        ens_kind = {"sensing": "gaussian_sensing", "completion": "completion",
                    "pr": "phase_retrieval"}[cfg.kind]
        ensemble = make_ensemble(ens_kind, cfg.n, cfg.ncols, cfg.m_effective, rng)
        spec = LossSpec("empirical", ground_truth=truth, ensemble=ensemble)
    return spec, z0, truth


def run_single(cfg: ExperimentConfig, rng: np.random.Generator):
    spec, z0, truth = build_problem(cfg, rng)
    pgd = PgdConfig(alpha=cfg.alpha, max_iter=cfg.max_iter,
                    tol_rel=cfg.tol_rel, record_every=cfg.record_every)
    record, final = run_pgd(spec, z0, pgd, rank=cfg.r)
    return record, final, truth


def _pool_size() -> int:
    env = os.environ.get("LMR_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def run_batch(cfg: ExperimentConfig):
    """``repeats`` seeded runs; deterministic order regardless of scheduling."""
    rngs = spawn_rngs(cfg.seed, cfg.repeats)
    with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
        futures = [pool.submit(run_single, cfg, rng) for rng in rngs]
        return [f.result() for f in futures]  # index order == seed order


# ---------------------------------------------------------------------------
# CSV schemas
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.17g}"


def trajectory_header(r: int) -> list[str]:
    cols = ["iter", "err_fro", "grad_norm", "loss", "h", "rho"]
    cols += [f"sigma_{j + 1}" for j in range(r)]
    cols += [f"r_{j + 1}" for j in range(r)]
    cols += ["stage", "gap_stat", "L_stat", "Cu_stat"]
    return cols


def write_trajectory_csv(path: Path, rec: TrajectoryRecord, cfg: ExperimentConfig,
                         seed_label: str, stages=None) -> None:
    r = rec.rank
    with open(path, "w", newline="") as fh:
        fh.write(f"# lmr={__version__} config={cfg.digest()} seed={seed_label}\n")
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(r))
        for i in range(len(rec)):
            row = [int(rec.k[i]), _fmt(rec.err_fro[i]), _fmt(rec.grad_norm[i]),
                   _fmt(rec.loss[i]), _fmt(rec.h[i]), _fmt(rec.rho[i])]
            row += [_fmt(v) for v in rec.sigma[i]]
            row += [_fmt(v) for v in rec.r_spectrum[i]]
            row.append(stages[i].token() if stages is not None else "")
            row += [_fmt(rec.gap_stat[i]), _fmt(rec.L_stat[i]), _fmt(rec.Cu_stat[i])]
            writer.writerow(row)


def read_csv(path: Path) -> tuple[list[str], list[list[str]], str]:
    with open(path) as fh:
        comment = ""
        first = fh.readline()
        if first.startswith("#"):
            comment = first.strip()
            header_line = fh.readline()
        else:
            header_line = first
        if not header_line:
            raise ConfigError(f"{path}: empty CSV, nothing to read")
        reader = csv.reader([header_line] + fh.readlines())
        rows = list(reader)
    header, data = rows[0], rows[1:]
    if not data:
        raise ConfigError(f"{path}: CSV has a header but no data rows")
    return header, data, comment


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def cmd_run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    results = run_batch(cfg)

    reached = 0
    lines = []
    for idx, (rec, final, truth) in enumerate(results):
        delta = cfg.delta if cfg.delta > 0 else 0.2 * truth.d_min
        stages = None
        if rec.points:
            sset = enumerate_spurious(truth)
            summary = stage_classify(rec, truth, delta, spurious=sset)
            stages = summary.labels
            dwell = summary.total_spurious_iters
        else:
            dwell = -1
        write_trajectory_csv(out / f"traj_{idx:03d}.csv", rec, cfg,
                             f"{cfg.seed}.{idx}", stages)
        ok = rec.stop_reason == "tol_rel"
        reached += ok
        # step-size bound implied by the estimated trajectory constants
        # (informational; nan when the constants are not all estimable)
        alpha_thr = stepsize_threshold_estimate(
            assumption_constants(rec), truth, cfg.r)
        lines.append(
            f"run={idx} iters={int(rec.k[-1])} reached={int(ok)} "
            f"final_rel_err={_fmt(rec.err_fro[-1] / truth.norm())} "
            f"spurious_dwell={dwell} alpha_threshold={_fmt(alpha_thr)}")

    lines.append(f"success_fraction={reached}/{cfg.repeats}")
    med = float(np.median([int(r.k[-1]) for r, _, _ in results]))
    lines.append(f"median_iters={med}")
    summary_path = out / "summary.txt"
    summary_path.write_text(
        f"# lmr={__version__} config={cfg.digest()} seed={cfg.seed}\n"
        + "\n".join(lines) + "\n")
    print(f"wrote {cfg.repeats} trajectory file(s) and {summary_path}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, param: str, values: list[float]) -> int:
    if param not in ("n", "alpha", "m", "theta"):
        raise ConfigError(f"sweep parameter must be n, alpha, m or theta, "
                          f"got {param!r}")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        cast = int(value) if param in ("n", "m") else float(value)
        sub = replace(cfg, **{param: cast})
        results = run_batch(sub)
        iters = np.array([int(rec.k[-1]) for rec, _, _ in results])
        success = np.mean([rec.stop_reason == "tol_rel" for rec, _, _ in results])
        dwell = []
        for rec, _, truth in results:
            if not rec.points:
                continue
            delta = sub.delta if sub.delta > 0 else 0.2 * truth.d_min
            summary = stage_classify(rec, truth, delta)
            dwell.append(summary.total_spurious_iters)
        rows.append((cast, float(np.median(iters)), float(success),
                     float(np.median(dwell)) if dwell else math.nan))

    agg = out / f"sweep_{param}.csv"
    with open(agg, "w", newline="") as fh:
        fh.write(f"# lmr={__version__} config={cfg.digest()} seed={cfg.seed} "
                 f"sweep={param}\n")
        writer = csv.writer(fh)
        writer.writerow([param, "median_iters", "success_rate",
                         "median_spurious_dwell"])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    msg = [f"wrote {agg}"]
    if param == "n" and len(rows) >= 3:
        xs = np.log([row[0] for row in rows])
        ys = np.array([row[1] for row in rows])
        coeffs = np.polyfit(xs, ys, 1)
        pred = np.polyval(coeffs, xs)
        ss_res = float(np.sum((ys - pred) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        msg.append(f"log-fit: median_iters ~ {coeffs[1]:.3f} + "
                   f"{coeffs[0]:.3f} * log(n), R^2 = {r2:.4f}")
    print("\n".join(msg))
    return EXIT_OK


def cmd_ode(system_kind: str, theta: float, h0: float, rho0: float,
            dt: float, t_max: float, output: str) -> int:
    kind = {"rank1": "rank1", "pr": "phase_retrieval",
            "phase_retrieval": "phase_retrieval"}.get(system_kind)
    if kind is None:
        raise ConfigError(f"unknown ode system {system_kind!r}")
    system = OdeSystem(kind, theta=theta)
    traj = integrate(system, ScalarState(h0, rho0), dt, t_max)
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# lmr={__version__} system={kind} theta={_fmt(theta)} "
                 f"dt={_fmt(dt)}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "h", "rho"])
        for t, h, rho in zip(traj.t, traj.h, traj.rho):
            writer.writerow([_fmt(t), _fmt(h), _fmt(rho)])
    hit = traj.time_to_rho(0.99)
    print(f"wrote {path} (rho reached 0.99 at t="
          f"{'never' if hit is None else _fmt(hit)}, "
          f"clips={traj.clip_events})")
    return EXIT_OK


def _load_runs(input_path: Path) -> list[dict]:
    paths = (sorted(input_path.glob("traj_*.csv"))
             if input_path.is_dir() else [input_path])
    if not paths:
        raise ConfigError(f"{input_path}: no trajectory CSVs found")
    runs = []
    for p in paths:
        header, data, _ = read_csv(p)
        cols = {name: i for i, name in enumerate(header)}
        def col(name, cast=float, c=cols, d=data):
            if name not in c:
                raise ConfigError(f"{p}: column {name!r} missing; "
                                  "not a trajectory CSV")
            return np.array([cast(row[c[name]]) for row in d])
        run = {"path": p, "header": header}
        if "iter" in cols:
            run["x"] = col("iter", int)
            for name in ("err_fro", "h", "rho"):
                if name in cols:
                    run[name] = col(name)
        elif "t" in cols:
            run["x"] = col("t")
            run["h"] = col("h")
            run["rho"] = col("rho")
        else:
            raise ConfigError(f"{p}: unrecognized CSV schema")
        runs.append(run)
    return runs


def cmd_plot(input_path: str, kind: str, output: str) -> int:
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "lmr"
    import matplotlib.pyplot as plt

    runs = _load_runs(Path(input_path))
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if kind == "logerr":
        for run in runs:
            if "err_fro" not in run:
                raise ConfigError(f"{run['path']}: no err_fro column")
            ax.semilogy(run["x"], np.maximum(run["err_fro"], 1e-300), lw=0.8)
        ax.set_ylabel("error (Frobenius)")
    elif kind in ("h", "rho"):
        for run in runs:
            if kind not in run:
                raise ConfigError(f"{run['path']}: no {kind} column")
            ax.plot(run["x"], run[kind], lw=0.9)
        ax.set_ylabel(kind)
    elif kind == "band":
        series = [r for r in runs if "err_fro" in r]
        if not series:
            raise ConfigError("band plot needs trajectory CSVs with err_fro")
        max_len = max(len(r["err_fro"]) for r in series)
        data = np.full((len(series), max_len), np.nan)
        for i, r in enumerate(series):
            e = np.maximum(r["err_fro"], 1e-300)
            data[i, :len(e)] = e
            data[i, len(e):] = e[-1]  # hold final value
        xs = np.arange(max_len) * 1.0
        lo, med, hi = (np.nanmin(data, axis=0), np.nanmedian(data, axis=0),
                       np.nanmax(data, axis=0))
        ax.fill_between(xs, lo, hi, alpha=0.3, linewidth=0)
        ax.semilogy(xs, med, lw=1.5)
        ax.set_ylabel("error (Frobenius), min/median/max")
    else:
        raise ConfigError(f"unknown plot kind {kind!r}")
    ax.set_xlabel("iteration" if runs[0]["header"][0] == "iter" else "time")
    fig.tight_layout()
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_spurious(n: int, r: int, seed: int, output: str | None) -> int:
    rng = spawn_rngs(seed, 1)[0]
    d = np.sort(rng.uniform(0.5, 1.5, r))[::-1] if r > 1 else np.array([1.0])
    truth = GroundTruth.from_singular_values(d, rng=rng, n=n)
    sset = enumerate_spurious(truth)
    lines = [f"# lmr={__version__} n={n} r={r} seed={seed} "
             f"members={len(sset)} degenerate={int(sset.degenerate)}",
             "mask,rank,dist_to_truth,projected_grad_norm"]
    for member in sset.members:
        bits = "".join(str(b) for b in member.mask)
        lines.append(",".join([
            bits, str(member.rank),
            _fmt(member.point.dist(truth.point)),
            _fmt(projected_residual_norm(member.point, truth)),
        ]))
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text)
        print(f"wrote {output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(seed: int) -> int:
    from .checks import run_all

    results = run_all(seed)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += not ok
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="sectioned key-value config file")
    p.add_argument("--kind", choices=PROBLEM_KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--spsd", action="store_const", const=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol-rel", dest="tol_rel", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--output")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmr",
        description="Low-rank matrix recovery experiments on the fixed-rank "
                    "manifold")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="seeded solver run(s)")
    _add_config_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="batch runs over one parameter")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--param", required=True,
                         choices=("n", "alpha", "m", "theta"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated list, e.g. 64,128,256")

    p_ode = sub.add_parser("ode", help="integrate a scalar system")
    p_ode.add_argument("--system", default="rank1",
                       choices=("rank1", "pr", "phase_retrieval"))
    p_ode.add_argument("--theta", type=float, default=1.0)
    p_ode.add_argument("--h0", type=float, default=1.0)
    p_ode.add_argument("--rho0", type=float, default=1e-3)
    p_ode.add_argument("--dt", type=float, default=1e-3)
    p_ode.add_argument("--t-max", dest="t_max", type=float, default=20.0)
    p_ode.add_argument("--output", default="ode.csv")

    p_plot = sub.add_parser("plot", help="render a CSV to SVG")
    p_plot.add_argument("--input", required=True)
    p_plot.add_argument("--kind", default="logerr",
                        choices=("logerr", "h", "rho", "band"))
    p_plot.add_argument("--output", required=True)

    p_sp = sub.add_parser("spurious", help="dump the spurious critical points")
    p_sp.add_argument("--n", type=int, default=16)
    p_sp.add_argument("--r", type=int, default=3)
    p_sp.add_argument("--seed", type=int, default=0)
    p_sp.add_argument("--output")

    p_check = sub.add_parser("check", help="run the invariant suite")
    p_check.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            return cmd_run(build_config(args))
        if args.verb == "sweep":
            values = [float(v) for v in args.values.split(",") if v]
            if not values:
                raise ConfigError("--values must list at least one value")
            return cmd_sweep(build_config(args), args.param, values)
        if args.verb == "ode":
            return cmd_ode(args.system, args.theta, args.h0, args.rho0,
                           args.dt, args.t_max, args.output)
        if args.verb == "plot":
            return cmd_plot(args.input, args.kind, args.output)
        if args.verb == "spurious":
            return cmd_spurious(args.n, args.r, args.seed, args.output)
        if args.verb == "check":
            return cmd_check(args.seed)
        raise ConfigError(f"unknown verb {args.verb!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OdeFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
