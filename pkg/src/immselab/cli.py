"""Batch command-line front end.

Every command writes a table (CSV or JSON) to ``--out`` or standard output.
Diagnostics go to standard error. Exit codes: 0 success, 1 verification
failures, 2 usage or configuration error, 3 numeric-domain error.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import analytics as an
from . import estimators as est
from . import kl
from . import regions as rg
from .core import ChannelParams, incremental_decomposition
from .errors import ConvergenceError, DomainError, LabError, ResourceError

__all__ = ["RunConfig", "SweepRecord", "main", "render", "read_block_matrix"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    snr1: float = 1.0
    snr2: float = 1.0
    a: float = 0.5
    snr_z: float = 2.0
    snr3: float = 4.0
    a2: float = 0.5
    a3: float = 0.5
    snr: float = 0.1
    delta: float = 0.05
    gamma_min: float = 0.0
    gamma_max: float = 4.0
    steps: int = 5
    n_list: tuple = (8, 16, 24)
    rate_fraction: float = 0.95
    samples: int = 200_000
    seed: int = 0
    seeds: int = 20
    order: int = 61
    tol: float = 1e-3
    beta_steps: int = 101
    family: str = "mac"
    input: str = "bpsk"
    cb_n: int = 4
    cb_m: int = 8
    matrix: str = None
    units: str = "nats"
    format: str = "csv"
    out: str = None
    workers: int = 1

    def validate(self):
        if self.steps < 2:
            raise UsageError(f"--steps must be >= 2, got {self.steps}")
        if not self.gamma_min < self.gamma_max:
            raise UsageError("--gamma-min must be smaller than --gamma-max")
        if self.samples < 100:
            raise UsageError(f"--samples must be >= 100, got {self.samples}")
        if not 0 < self.rate_fraction <= 1:
            raise UsageError(f"--rate-fraction must be in (0, 1], got {self.rate_fraction}")
        if self.beta_steps < 2:
            raise UsageError(f"--beta-steps must be >= 2, got {self.beta_steps}")
        if self.seeds < 1:
            raise UsageError("--seeds must be >= 1")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if not self.n_list or min(self.n_list) < 1:
            raise UsageError("--n-list needs positive blocklengths")
        if self.seed < 0:
            raise UsageError("--seed must be non-negative")
        return self

    def channel(self) -> ChannelParams:
        return ChannelParams(self.snr1, self.snr2, self.a)


@dataclass(frozen=True)
class SweepRecord:
    gamma: float
    mi: float
    d_mi: float
    mmse: float
    regime: str


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(format(float(v), ".12g"))
        return v if math.isfinite(v) else str(v)
    return v


def render(columns, rows, fmt) -> str:
    """Render rows (sequences aligned with ``columns``) as CSV or JSON."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()
    records = [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]
    return json.dumps(records, indent=1) + "\n"


def _to_units(cfg, value):
    return value / math.log(2.0) if cfg.units == "bits" else value


# ---------------------------------------------------------------------------
# Commands; each returns (columns, rows, all_passed)
# ---------------------------------------------------------------------------

def _grid(cfg):
    return np.linspace(cfg.gamma_min, cfg.gamma_max, cfg.steps)


def sweep_records(cfg):
    p = cfg.channel()
    out = []
    for g in _grid(cfg):
        g = float(g)
        r = an.regime(p, g)
        if r == 1:
            mmse = an.mmse_gaussian(1.0, an.gamma_prime(p, g))
        else:
            mmse = an.joint_mmse_gaussian_interference(p, g)
        out.append(
            SweepRecord(g, an.mi_gaussian_interference(p, g), an.d_mi_gaussian_interference(p, g), mmse, f"R{r}")
        )
    return out


def cmd_sweep_mi(cfg):
    cols = ["gamma", "mi", "d_mi", "mmse", "regime"]
    rows = [
        (r.gamma, _to_units(cfg, r.mi), _to_units(cfg, r.d_mi), r.mmse, r.regime) for r in sweep_records(cfg)
    ]
    return cols, rows, True


_INPUTS = {"bpsk": est.Constellation.bpsk, "pam4": est.Constellation.pam4, "asym3": est.Constellation.asym3}


def cmd_verify_immse(cfg):
    if cfg.input in _INPUTS:
        source = _INPUTS[cfg.input]()
    elif cfg.input == "codebook":
        source = est.generate_codebook(cfg.cb_n, math.log(cfg.cb_m) / cfg.cb_n, cfg.seed)
    else:
        raise UsageError(f"unknown --input {cfg.input!r}")
    rows_in = est.verify_immse(
        source, _grid(cfg), tol=cfg.tol, order=cfg.order, samples=cfg.samples, seed=cfg.seed, workers=cfg.workers
    )
    cols = ["gamma", "d_mi", "half_mmse", "error", "std_error", "passed"]
    rows = [
        (r.gamma, _to_units(cfg, r.d_mi), _to_units(cfg, r.half_mmse), _to_units(cfg, r.error),
         _to_units(cfg, r.std_error), r.passed)
        for r in rows_in
    ]
    return cols, rows, all(r.passed for r in rows_in)


def cmd_incremental_check(cfg):
    p = cfg.channel()
    span = p.admissible_snr - cfg.delta
    if not span > 0:
        raise DomainError(f"delta={cfg.delta} leaves no admissible snr below {p.admissible_snr:.12g}")
    cols = ["snr", "delta", "difference", "conditional", "abs_error", "var_nhat", "one_minus_delta_alpha", "passed"]
    rows, ok = [], True
    for k in range(1, cfg.steps + 1):
        snr = span * k / cfg.steps
        diff, cond = an.incremental_mi_gaussian(p, snr, cfg.delta)
        dec = incremental_decomposition(p, snr, cfg.delta)
        target = 1.0 - cfg.delta * dec.alpha
        passed = abs(diff - cond) <= 1e-10 and abs(dec.var_nhat - target) <= 1e-12
        ok &= passed
        rows.append((snr, cfg.delta, _to_units(cfg, diff), _to_units(cfg, cond),
                     _to_units(cfg, abs(diff - cond)), dec.var_nhat, target, passed))
    return cols, rows, ok


def _seed_list(cfg):
    return range(cfg.seed, cfg.seed + cfg.seeds)


def cmd_codebook_eigs(cfg):
    res = est.eigen_convergence_experiment(cfg.snr1, cfg.rate_fraction, cfg.n_list, _seed_list(cfg))
    cols = ["n", "M", "mean_deviation", "rank_deficient"]
    return cols, [(r.n, r.M, r.mean_deviation, r.rank_deficient) for r in res], True


def cmd_independence_bound(cfg):
    res = est.surrogate_trend(cfg.channel(), cfg.snr, cfg.delta, cfg.rate_fraction, cfg.n_list, _seed_list(cfg))
    cols = ["n", "surrogate_mi"]
    return cols, [(n, _to_units(cfg, v)) for n, v in res], True


def cmd_rate_region(cfg):
    betas = np.linspace(0.0, 1.0, cfg.beta_steps)
    u = lambda v: _to_units(cfg, v)  # noqa: E731
    if cfg.family == "mac":
        p = rg.MacInterferenceParams(cfg.snr1, cfg.snr2, cfg.snr_z, cfg.a)
        thr = rg.mac_mmse_threshold(p)
        cols = ["beta", "R1", "R2", "Rz", "R1_plus_R2", "mmse_threshold"]
        rows = []
        for b in betas:
            pt = rg.mac_weak_boundary(p, float(b))
            rows.append((float(b), u(pt["R1"]), u(pt["R2"]), u(pt["Rz"]), u(pt["R1"] + pt["R2"]), thr))
        return cols, rows, True
    if cfg.family == "cascade":
        p = rg.CascadeParams(cfg.snr1, cfg.snr2, cfg.snr3, a=cfg.a)
        s, b2, b3 = rg.cascade_sum_and_individual_bounds(p)
        cols = ["beta", "R1", "R2", "R3", "R2_plus_R3", "sum_bound", "r2_bound", "r3_bound"]
        rows = []
        for b in betas:
            pt = rg.cascade_boundary(p, float(b))
            rows.append((float(b), u(pt["R1"]), u(pt["R2"]), u(pt["R3"]), u(pt["R2"] + pt["R3"]),
                         u(s), u(b2), u(b3)))
        return cols, rows, True
    if cfg.family == "intermediate":
        p = rg.CascadeParams(cfg.snr1, cfg.snr2, cfg.snr3, a2=cfg.a2, a3=cfg.a3)
        return ["a2", "a3", "R2_limit"], [(cfg.a2, cfg.a3, u(rg.intermediate_node_limit(p)))], True
    raise UsageError(f"unknown --family {cfg.family!r}")


def read_block_matrix(path):
    """Parse "n" followed by n rows each of A, B and C."""
    try:
        with open(path) as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise UsageError(f"cannot read matrix file: {exc}") from exc
    try:
        n = int(tokens[0])
        vals = np.array([float(t) for t in tokens[1:]])
    except (IndexError, ValueError) as exc:
        raise UsageError(f"malformed matrix file {path}: {exc}") from exc
    if n < 1 or vals.size != 3 * n * n:
        raise UsageError(f"matrix file {path}: expected {3 * n * n} numbers after n={n}, got {vals.size}")
    A, B, C = vals.reshape(3, n, n)
    return kl.BlockGaussianPair(A, B, C)


def cmd_kl_block(cfg):
    if not cfg.matrix:
        raise UsageError("kl-block needs --matrix FILE")
    pair = read_block_matrix(cfg.matrix)
    block = kl.kl_block_independent(pair)
    direct = kl.kl_gaussian_direct(pair.assembled(), pair.product_of_marginals())
    rel = abs(block - direct) / max(abs(direct), np.finfo(float).tiny)
    if block == direct:
        rel = 0.0
    cols = ["n", "kl_block", "kl_direct", "rel_error"]
    return cols, [(pair.n, _to_units(cfg, block), _to_units(cfg, direct), rel)], rel <= 1e-8


COMMANDS = {
    "sweep-mi": cmd_sweep_mi,
    "verify-immse": cmd_verify_immse,
    "incremental-check": cmd_incremental_check,
    "codebook-eigs": cmd_codebook_eigs,
    "independence-bound": cmd_independence_bound,
    "rate-region": cmd_rate_region,
    "kl-block": cmd_kl_block,
}


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _n_list(text):
    try:
        return tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --n-list {text!r}") from exc


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    d = RunConfig("")
    add = common.add_argument
    add("--config", help="key=value file; flags given on the command line win")
    for name in ("snr1", "snr2", "a", "snr_z", "snr3", "a2", "a3", "snr", "delta",
                 "gamma_min", "gamma_max", "rate_fraction", "tol"):
        add("--" + name.replace("_", "-"), type=float, default=getattr(d, name))
    for name in ("steps", "samples", "seed", "seeds", "order", "beta_steps", "cb_n", "cb_m", "workers"):
        add("--" + name.replace("_", "-"), type=int, default=getattr(d, name))
    add("--n-list", type=_n_list, default=d.n_list)
    add("--family", choices=["mac", "cascade", "intermediate"], default=d.family)
    add("--input", choices=["bpsk", "pam4", "asym3", "codebook"], default=d.input)
    add("--matrix", default=None)
    add("--units", choices=["nats", "bits"], default=d.units)
    add("--format", choices=["csv", "json"], default=d.format)
    add("--out", default=None)

    parser = argparse.ArgumentParser(prog="immselab", description="Interference I-MMSE numerics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _config_tokens(path):
    tokens = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        tokens += ["--" + key.replace("_", "-"), value]
    return tokens


def parse_config(argv) -> RunConfig:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        # config entries go right after the command so later flags override them
        cut = next((i for i, t in enumerate(rest) if not t.startswith("-")), len(rest))
        rest = rest[: cut + 1] + _config_tokens(known.config) + rest[cut + 1:]
    ns = vars(_build_parser().parse_args(rest))
    ns.pop("config", None)
    names = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in ns.items() if k in names}).validate()


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse reports its own usage errors
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cols, rows, ok = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ConvergenceError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(cols, rows, cfg.format)
    if cfg.out:
        try:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {cfg.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    if not ok:
        print("verification failures present", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK
