"""Command-line entry point: ``boolfpp <subcommand> ...``.

Outputs go to ``--out`` (written atomically) or stdout; a one-line summary is
printed on stderr.  Exit status: 0 success, 2 invalid input, 3 a verification
subcommand found a violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from .estimators import continuity_curve, estimate_mu
from .geometry import PolyPath, is_good, local_time, path_time
from .greedy import greedy_sup, greedy_sup_exiting
from .measures import MeasureSpec, parse_measure
from .percolation import crossing_probability
from .sampler import Configuration, Window, replica_rng, sample_config
from .travel import ComponentGraph, TerminalSet, mu_square_probe, t_square
from .verify_bk import (
    CountEvent,
    check_coloring_lemma,
    empirical_bk,
    exhaustive_rule_sets,
    random_rule_set,
)

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION = 0, 2, 3

# manifest keys whose values are files that must exist
FILE_KEYS = ("measure-file", "config", "path", "family")


class InvalidInput(Exception):
    pass


class Output:
    """What a subcommand produced: text payload, summary line, exit status."""

    def __init__(self, text: str, summary: str, status: int = EXIT_OK):
        self.text = text
        self.summary = summary
        self.status = status


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InvalidInput(f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc


def _measure(args) -> MeasureSpec:
    if getattr(args, "measure_file", None):
        return MeasureSpec.from_dict(_read_json(args.measure_file))
    if args.measure is None:
        raise InvalidInput("a measure is required (--measure or --measure-file)")
    return parse_measure(args.measure)


def _config(path: str) -> Configuration:
    return Configuration.from_dict(_read_json(path))


def _need_seed(args) -> int:
    if args.seed is None:
        raise InvalidInput(f"{args.command} draws random samples and needs --seed")
    return args.seed


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidInput(f"expected comma-separated numbers, got {text!r}") from exc


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _table(header, rows, fmt: str) -> str:
    if fmt == "json":
        return _json([dict(zip(header, r)) for r in rows])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _json_only(args) -> None:
    if args.format == "csv":
        raise InvalidInput(f"{args.command} emits nested results; use --format json")


def cmd_sample(args) -> Output:
    seed = _need_seed(args)
    _json_only(args)
    nu = _measure(args)
    cfg = sample_config(nu, Window(args.d, args.half_width), seed, args.replica)
    return Output(_json(cfg.to_dict()), f"sampled {len(cfg)} balls (seed={seed}, replica={args.replica})")


def cmd_tau(args) -> Output:
    _json_only(args)
    cfg = _config(args.config)
    pi = PolyPath.from_dict(_read_json(args.path))
    tau, loc = path_time(pi, cfg), local_time(pi, cfg)
    good = is_good(pi, cfg)
    out = {"length": pi.length, "tau": tau, "local_time": loc, "good": good.good, "first_bad_segment": good.segment}
    return Output(_json(out), f"tau={tau!r} local_time={loc!r} good={good.good}")


def cmd_travel(args) -> Output:
    _json_only(args)
    cfg = _config(args.config)
    A = TerminalSet.parse(args.source, cfg.d)
    B = TerminalSet.parse(args.target, cfg.d)
    res = ComponentGraph(cfg).query(A, B, geodesic=args.geodesic)
    return Output(_json(res.to_dict()), f"T={res.time!r}" + (" (window warning)" if res.window_warning else ""))


def _straight_anchors(rho: float, k: int, d: int) -> np.ndarray:
    anchors = np.zeros((k + 1, d))
    anchors[:, 0] = rho * np.arange(k + 1)
    return anchors


def cmd_tsquare(args) -> Output:
    if args.config:
        if not args.format_given:
            args.format = "json"
        _json_only(args)
        cfg = _config(args.config)
        value = t_square(_straight_anchors(args.rho, args.k, cfg.d), cfg, args.cap)
        out = {"rho": args.rho, "k": args.k, "t_square": value}
        return Output(_json(out), f"t_square={value!r}")
    seed = _need_seed(args)
    nu = _measure(args)
    sq, pt = mu_square_probe(nu, args.rho, args.k, args.replicas, seed, args.d, args.cap, args.threads)
    header = ("label", "n", "mean", "stderr", "ci_lo", "ci_hi")
    rows = [(r.label, r.n_replicas, r.mean, r.stderr, *r.ci95) for r in (sq, pt)]
    return Output(_table(header, rows, args.format), f"t_square/(k rho) upper bound {sq.mean!r}")


def cmd_crossing(args) -> Output:
    seed = _need_seed(args)
    nu = _measure(args)
    rows = []
    for r in _floats(args.r):
        rep = crossing_probability(nu, r, args.replicas, seed, args.d, threads=args.threads)
        rows.append((r, rep.n_replicas, rep.mean, rep.stderr))
    return Output(_table(("r", "replicas", "p_hat", "stderr"), rows, args.format), f"{len(rows)} crossing estimates")


def cmd_greedy(args) -> Output:
    _json_only(args)
    cfg = _config(args.config)
    if args.exiting is not None:
        res = greedy_sup_exiting(cfg, args.exiting, args.exact_cap)
    else:
        res = greedy_sup(cfg, args.exact_cap)
    return Output(_json(res.to_dict()), f"G={res.ratio!r} exact={res.exact}")


def cmd_estimate_mu(args) -> Output:
    seed = _need_seed(args)
    nu = _measure(args)
    est = estimate_mu(nu, _floats(args.k_grid), args.replicas, seed, args.d, args.threads)
    header = ("label", "k", "n", "mean", "stderr", "ci_lo", "ci_hi")
    rows = [(r.label, r.scale, r.n_replicas, r.mean, r.stderr, *r.ci95) for r in est.reports]
    return Output(_table(header, rows, args.format), f"mu upper bound {est.upper_bound!r}")


def cmd_continuity(args) -> Output:
    seed = _need_seed(args)
    data = _read_json(args.family)
    members = data["family"] if isinstance(data, dict) else data
    family = [MeasureSpec.from_dict(m) for m in members]
    curve = continuity_curve(family, args.s, args.replicas, seed, args.d, threads=args.threads)
    if args.format == "json":
        inc = curve.increments(1)
        rows = [
            {
                "member": label,
                "mu_hat": float(curve.mu_hat[i]),
                "stderr": float(curve.stderr[i]),
                "delta_mu": None if i == 0 else float(inc[i - 1]),
                "bound_integral": None if i == 0 else curve.bound_integrals[i - 1],
            }
            for i, label in enumerate(curve.labels)
        ]
        text = _json(rows)
    else:
        text = curve.to_csv()
    return Output(text, f"{len(family)} members, fitted constant {curve.fitted_constant!r}")


def cmd_verify_bk(args) -> Output:
    _json_only(args)
    results = {}
    ok = True
    if args.exhaustive:
        n, m = args.exhaustive
        checked = 0
        bad = None
        for rs in exhaustive_rule_sets(n, m):
            v = check_coloring_lemma(rs)
            checked += 1
            if not v.holds:
                bad = {"rules": rs.to_dict(), **v.to_dict()}
                break
        results["exhaustive"] = {"n": n, "m": m, "checked": checked, "counterexample": bad}
        ok &= bad is None
    if args.random:
        n, m, trials, seed = args.random
        bad = None
        for t in range(trials):
            rs = random_rule_set(n, m, replica_rng(seed, t))
            v = check_coloring_lemma(rs)
            if not v.holds:
                bad = {"trial": t, "rules": rs.to_dict(), **v.to_dict()}
                break
        results["random"] = {"n": n, "m": m, "trials": trials, "seed": seed, "counterexample": bad}
        ok &= bad is None
    if args.bk_intensity is not None:
        seed = _need_seed(args)
        events = [CountEvent((0.0, 0.0), (1.0, 1.0), 1), CountEvent((0.0, 0.0), (1.0, 1.0), 1)]
        rep = empirical_bk(args.bk_intensity, ((0.0, 0.0), (1.0, 1.0)), events, args.replicas, seed)
        results["empirical_bk"] = rep.to_dict()
        ok &= rep.holds
    if not results:
        raise InvalidInput("verify-bk needs --exhaustive, --random or --bk-intensity")
    results["pass"] = ok
    return Output(_json(results), "PASS" if ok else "FAIL", EXIT_OK if ok else EXIT_VIOLATION)


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=int, default=None, help="master seed (required for sampling commands)")
    g.add_argument("--replicas", type=int, default=1000)
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--out", default=None, help="output file (default stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--d", type=int, default=2, help="dimension")


def _measure_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--measure", help='inline measure "mass@radius,..."')
    p.add_argument("--measure-file", help='JSON {"atoms": [[radius, mass], ...]}')


COMMANDS: dict[str, tuple[Callable[[argparse.Namespace], Output], str]] = {
    "sample": (cmd_sample, "json"),
    "tau": (cmd_tau, "json"),
    "travel": (cmd_travel, "json"),
    "tsquare": (cmd_tsquare, "csv"),
    "crossing": (cmd_crossing, "csv"),
    "greedy": (cmd_greedy, "json"),
    "estimate-mu": (cmd_estimate_mu, "csv"),
    "continuity": (cmd_continuity, "csv"),
    "verify-bk": (cmd_verify_bk, "json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boolfpp", description="First-passage percolation in the Poisson Boolean model.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a Boolean configuration")
    _measure_args(p)
    p.add_argument("--half-width", type=float, required=True)
    p.add_argument("--replica", type=int, default=0)

    p = sub.add_parser("tau", help="vacant time and local time of a path")
    p.add_argument("--path", required=True)
    p.add_argument("--config", required=True)

    p = sub.add_parser("travel", help="exact travel time between two sets")
    p.add_argument("--config", required=True)
    p.add_argument("--from", dest="source", required=True, help="point:x,y | sphere:R[@x,y] | ball:R[@..] | outside:R[@..]")
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--geodesic", action="store_true")

    p = sub.add_parser("tsquare", help="disjoint-resource travel time along a straight skeleton")
    p.add_argument("--config", help="evaluate on this configuration instead of sampling")
    _measure_args(p)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--cap", type=int, default=14)

    p = sub.add_parser("crossing", help="annulus crossing probabilities")
    _measure_args(p)
    p.add_argument("--r", required=True, help="comma-separated inner radii")

    p = sub.add_parser("greedy", help="greedy-path ratio of a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--exiting", type=float, default=None)
    p.add_argument("--exact-cap", type=int, default=9)

    p = sub.add_parser("estimate-mu", help="time-constant estimates over a k grid")
    _measure_args(p)
    p.add_argument("--k-grid", required=True)

    p = sub.add_parser("continuity", help="coupled time-constant curve over a measure family")
    p.add_argument("--family", required=True, help='JSON list of {"atoms": ...} or {"family": [...]}')
    p.add_argument("--s", type=float, required=True)

    p = sub.add_parser("verify-bk", help="coloring lemma and BK checks")
    p.add_argument("--exhaustive", nargs=2, type=int, metavar=("N", "M"))
    p.add_argument("--random", nargs=4, type=int, metavar=("N", "M", "TRIALS", "SEED"))
    p.add_argument("--bk-intensity", type=float, default=None)

    sp = sub.add_parser("run", help="run an experiment manifest")
    sp.add_argument("--manifest", required=True)
    for name, choice in sub.choices.items():
        if name != "run":
            _common(choice)
    return parser


def manifest_argv(manifest: dict) -> list[str]:
    """Translate ``{"command", "seed", "out", "format", "threads", "params"}`` into argv."""
    if "command" not in manifest or manifest["command"] not in COMMANDS:
        raise InvalidInput(f"manifest needs a command among {sorted(COMMANDS)}")
    params = dict(manifest.get("params", {}))
    for key in FILE_KEYS:
        if key in params and not Path(str(params[key])).is_file():
            raise InvalidInput(f"file not found: {params[key]}")
    argv = [manifest["command"]]
    for key in ("seed", "out", "format", "threads", "replicas"):
        if manifest.get(key) is not None:
            argv += [f"--{key}", str(manifest[key])]
    for key, value in params.items():
        flag = f"--{key}"
        if value is True:
            argv.append(flag)
        elif isinstance(value, (list, tuple)):
            argv += [flag, *map(str, value)]
        elif value is not None and value is not False:
            argv += [flag, str(value)]
    return argv


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            argv = manifest_argv(_read_json(args.manifest))
            args = parser.parse_args(argv)
        handler, default_format = COMMANDS[args.command]
        args.format_given = args.format is not None
        if args.format is None:
            args.format = default_format
        if args.threads < 1:
            raise InvalidInput("--threads must be >= 1")
        out = handler(args)
    except (InvalidInput, ValueError, KeyError, TypeError) as exc:
        print(f"boolfpp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        write_atomic(args.out, out.text)
        print(f"{args.command}: {out.summary} -> {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(out.text)
        print(f"{args.command}: {out.summary}", file=sys.stderr)
    return out.status


if __name__ == "__main__":
    sys.exit(main())
