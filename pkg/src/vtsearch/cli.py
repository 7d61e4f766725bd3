"""Command-line experiment driver.

Every subcommand writes CSV (stdout or ``--out``); with ``--out`` a JSON
sidecar holding the configuration is written next to it.  Trial ``k`` of a
run with ``--seed S`` uses ``numpy.random.default_rng(S + k)`` and reports
``S + k`` in its seed column, so any row can be rerun on its own.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments
from .calculus import exact_grover_prob
from .estimation import EstimateParams, estimate
from .experiments import InstanceSpec, fit_constant, generate_instance  # noqa: F401  (re-exported)
from .known_search import known_search
from .lowerbound import _budget, t_prime
from .model import RESULT_FIELDS, CostMeter, load_instance
from .readonce import classical_eval, depth, eval_readonce, parse_assignment, parse_formula, random_formula, size
from .unknown_search import UnknownParams, unknown_search


@dataclass
class ExperimentConfig:
    subcommand: str
    seed: int = 0
    trials: int = 1
    strict: bool = False
    out: str | None = None
    instance: str | None = None
    generate: str | None = None
    extra: dict | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("--trials must be >= 1")
        if self.seed < 0:
            raise ValueError("--seed must be >= 0")


class InputError(ValueError):
    pass


def _fraction(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _instance(cfg: ExperimentConfig, rng):
    if cfg.instance is not None:
        try:
            return load_instance(cfg.instance)
        except OSError as e:
            raise InputError(f"--instance: cannot read {cfg.instance}: {e.strerror}") from None
        except ValueError as e:
            raise InputError(f"--instance: {e}") from None
    try:
        spec = InstanceSpec.parse(cfg.generate)
    except (ValueError, TypeError) as e:
        raise InputError(f"--generate: {e}") from None
    return generate_instance(spec, rng)


# trial runners take (config, trial) and return a list of CSV rows

def _known_trial(cfg: ExperimentConfig, trial: int):
    seed = cfg.seed + trial
    rng = np.random.default_rng(seed)
    inst = _instance(cfg, rng)
    res = known_search(inst, rng, CostMeter(strict=cfg.strict))
    success = res.index is not None if inst.marked.size else res.index is None
    return [[seed, inst.n, inst.sum_t2, "known", res.cost, int(success), "" if res.index is None else res.index]]


def _unknown_trial(cfg: ExperimentConfig, trial: int):
    seed = cfg.seed + trial
    rng = np.random.default_rng(seed)
    inst = _instance(cfg, rng)
    params = UnknownParams(epsilon=cfg.extra["epsilon"], strict=cfg.strict)
    res = unknown_search(inst, params, rng)
    return [[seed, res.cost, int(res.success), res.levels, res.max_r]]


def _estimate_trial(cfg: ExperimentConfig, trial: int):
    x = cfg.extra
    rng = np.random.default_rng(cfg.seed + trial)
    params = EstimateParams(x["c"], x["p"], x["k"])
    res = estimate(x["epsilon"], params, CostMeter(strict=cfg.strict), rng)
    eps, v = x["epsilon"], res.value
    ok = (v == 0.0) if eps == 0.0 else abs(eps - v) < x["c"] * v
    return [[trial, repr(v), res.evaluations, int(ok)]]


def _readonce_trial(cfg: ExperimentConfig, trial: int):
    x = cfg.extra
    seed = cfg.seed + trial
    rng = np.random.default_rng(seed)
    if x.get("random"):
        N, d = x["random"]
        f = random_formula(N, d, rng)
        a = rng.integers(0, 2, N)
    else:
        f, a = x["formula"], x["assignment"]
    rep = eval_readonce(f, a, CostMeter(strict=cfg.strict), rng)
    return [[seed, rep.N, rep.d, rep.value, rep.classical, rep.queries]]


def _run_trials(runner, cfg: ExperimentConfig, jobs: int):
    if jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(runner, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        chunks = [runner(cfg, k) for k in range(cfg.trials)]
    return [row for chunk in chunks for row in chunk]


def _lowerbound_rows(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"--times: cannot read {path}: {e.strerror}") from None
    rows = []
    for tok in text.split():
        try:
            t = int(tok)
        except ValueError:
            raise InputError(f"--times: field t is not an integer: {tok!r}") from None
        if t < 1:
            raise InputError(f"--times: field t must be >= 1, got {t}")
        tp = int(t_prime(t))
        q = _budget(tp)
        cert = tp == 1 or all(abs(exact_grover_prob(tp, k)[1] - 1.0) <= 1e-9 for k in (0, 1))
        rows.append([t, tp, q, int(cert and q <= t)])
    if not rows:
        raise InputError("--times: file holds no values")
    return rows


def _emit(header, rows, cfg: ExperimentConfig, stdout) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if cfg.out:
        Path(cfg.out).write_text(buf.getvalue())
        Path(cfg.out + ".json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True, default=str) + "\n")
    else:
        stdout.write(buf.getvalue())


def _bench(args, stdout) -> int:
    measured = experiments.compute_baseline(quick=args.quick)
    if args.update_baseline:
        path = experiments.save_baseline(measured, args.baseline)
        stdout.write(f"baseline written to {path}\n")
        return 0
    recorded = experiments.load_baseline(args.baseline)
    tol = recorded.get("tolerance", 1.5)
    pairs = [("known_search.C", measured["known_search"]["C"], recorded["known_search"]["C"]),
             ("unknown_search.C", measured["unknown_search"]["C"], recorded["unknown_search"]["C"]),
             ("unknown_search.lemma8_C", measured["unknown_search"]["lemma8_C"], recorded["unknown_search"]["lemma8_C"])]
    pairs += [(f"estimate.{c}", v, recorded["estimate"][c]) for c, v in measured["estimate"].items()]
    pairs += [(f"readonce.{d}.C", v["C"], recorded["readonce"][d]["C"]) for d, v in measured["readonce"].items()]
    bad = 0
    stdout.write("constant,measured,recorded,within_tolerance\n")
    for name, m, r in pairs:
        ok = r / tol <= m <= r * tol
        bad += not ok
        stdout.write(f"{name},{m:.6g},{r:.6g},{int(ok)}\n")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1)
    common.add_argument("--out", default=None, help="CSV path; a .json config sidecar is written next to it")
    common.add_argument("--strict-charging", action="store_true", help="charge full requested steps")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for the trials")

    p = argparse.ArgumentParser(prog="vtsearch", description="Variable-time search experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--instance", help="instance file: n, then n lines 't x'")
        g.add_argument("--generate", help="generator spec, e.g. n=64,dist=uniform(1,100),marked=1")

    source(sub.add_parser("known-search", parents=[common], help="search with known times"))
    sp = sub.add_parser("unknown-search", parents=[common], help="search with unknown times")
    source(sp)
    sp.add_argument("--epsilon", type=float, default=0.1)

    sp = sub.add_parser("estimate-demo", parents=[common], help="run the relative-error estimator")
    sp.add_argument("--epsilon", type=_fraction, required=True)
    sp.add_argument("--c", type=_fraction, required=True)
    sp.add_argument("--p", type=_fraction, required=True)
    sp.add_argument("--k", type=int, required=True)

    sp = sub.add_parser("readonce", parents=[common], help="evaluate a read-once formula")
    sp.add_argument("--formula")
    sp.add_argument("--assignment")
    sp.add_argument("--random", nargs=2, type=int, metavar=("N", "D"))

    sp = sub.add_parser("lowerbound-map", parents=[common], help="tabulate the t -> t' group sizes")
    sp.add_argument("--times", required=True, help="file of positive integers")

    sp = sub.add_parser("bench", parents=[common], help="fit the recorded constants")
    sp.add_argument("--update-baseline", action="store_true")
    sp.add_argument("--quick", action="store_true", help="small matrix, for smoke runs")
    sp.add_argument("--baseline", default=None, help="baseline JSON (default: the packaged one)")
    return p


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args, stdout)
    except (InputError, ValueError) as e:
        print(f"vtsearch {args.command}: error: {e}", file=sys.stderr)
        return 2


def _dispatch(args, stdout) -> int:
    cfg = ExperimentConfig(args.command, args.seed, args.trials, args.strict_charging, args.out,
                           getattr(args, "instance", None), getattr(args, "generate", None), {})
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    cmd = args.command
    if cmd == "known-search":
        _instance(cfg, np.random.default_rng(cfg.seed))  # validate before fanning out
        rows = _run_trials(_known_trial, cfg, args.jobs)
        _emit(RESULT_FIELDS, rows, cfg, stdout)
    elif cmd == "unknown-search":
        if not 0 < args.epsilon < 1:
            raise InputError("--epsilon must lie in (0, 1)")
        cfg.extra = {"epsilon": args.epsilon}
        _instance(cfg, np.random.default_rng(cfg.seed))
        rows = _run_trials(_unknown_trial, cfg, args.jobs)
        _emit(("seed", "cost", "success", "levels", "max_r"), rows, cfg, stdout)
    elif cmd == "estimate-demo":
        if not 0 <= args.epsilon <= 1:
            raise InputError("--epsilon must lie in [0, 1]")
        if not 0 < args.c < 1:
            raise InputError("--c must lie in (0, 1)")
        if not 0 < args.p <= 1:
            raise InputError("--p must lie in (0, 1]")
        if args.k < 1:
            raise InputError("--k must be >= 1")
        cfg.extra = {"epsilon": args.epsilon, "c": args.c, "p": args.p, "k": args.k}
        rows = _run_trials(_estimate_trial, cfg, args.jobs)
        _emit(("trial", "estimate", "evaluations", "within_bound"), rows, cfg, stdout)
    elif cmd == "readonce":
        if args.random:
            N, d = args.random
            if N < 1:
                raise InputError("--random: field N must be >= 1")
            if d < 1 or (N == 1 and d != 1) or (N > 1 and d > N - 1):
                raise InputError("--random: field D is out of range for this N")
            cfg.extra = {"random": [N, d]}
        else:
            if args.formula is None or args.assignment is None:
                raise InputError("--formula and --assignment are required unless --random is given")
            try:
                f = parse_formula(args.formula)
            except ValueError as e:
                raise InputError(f"--formula: {e}") from None
            try:
                a = parse_assignment(args.assignment)
                classical_eval(f, a)
            except ValueError as e:
                raise InputError(f"--assignment: {e}") from None
            cfg.extra = {"formula": f, "assignment": a, "N": size(f), "d": depth(f)}
        rows = _run_trials(_readonce_trial, cfg, args.jobs)
        _emit(("seed", "N", "d", "value", "classical", "queries"), rows, cfg, stdout)
    elif cmd == "lowerbound-map":
        rows = _lowerbound_rows(args.times)
        _emit(("t", "t_prime", "queries_used", "certainty_ok"), rows, cfg, stdout)
    elif cmd == "bench":
        return _bench(args, stdout)
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
