"""Command-line entry point: ``stabvote <subcommand> ...``.

Exit codes: 0 success, 1 bad input or usage, 2 an internal cross-check
failed (for example a Harper-inequality audit returned False).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import electoral, geometry, multicandidate, noise, power
from .errors import InvariantError, StabvoteError
from .hypercube import BiasedMeasure, BooleanFunction
from .io import dumps, load_method, parse_method_name, save_spec, save_table, spec_to_dict
from .methods import VotingMethod, describe
from .rng import default_threads

log = logging.getLogger("stabvote")

METHOD_HELP = """\
method references:
  maj                      majority sign(x1+...+xn), needs --n
  tmaj:<t>                 majority with threshold t, sign(sum - t), needs --n
  dict:<i>                 dictator f(x) = x_i, needs --n
  wmaj:<w1,...,wn>[;<t>]   weighted majority sign(w.x - t)
  two-tier:<s1,...>[;<e1,...>]  majority of state majorities (sizes s_j,
                           optional elector weights e_j); two-tier:<m>x<size>
                           for m equal states
  un-pre1965               UN Security Council before 1965: 5 permanent
                           members with veto, 6 others, 2 needed (n=11)
  un-post1965              UN Security Council since 1965: 10 others,
                           4 needed (n=15)
  <file>.json              method spec document {"kind": ..., ...}
  <file>                   truth table: line 1 'n=<int>', line 2 hex digits,
                           bit idx(x) = sum_i 2^(i-1)(1+x_i)/2 set iff f(x)=+1
sign(0) is resolved to +1 throughout.
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    output: str = "-"
    format: str = "json"
    threads: int = 1
    flags: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args):
        flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
        return cls(
            subcommand=args.command,
            seed=getattr(args, "seed", 0) or 0,
            output=getattr(args, "out", "-") or "-",
            format=getattr(args, "format", "json") or "json",
            threads=args.threads,
            flags=flags,
        )


def _count(text):
    value = float(text)
    if value < 1 or value != int(value):
        raise argparse.ArgumentTypeError(f"expected a positive integer count, got {text}")
    return int(value)


def _prob(text):
    """Decimal or a/b strings are read exactly, so 0.5 stays 1/2."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number or fraction, got {text}") from None


def _rho_grid(text):
    lo, hi, step = (float(v) for v in text.split(":"))
    count = int(round((hi - lo) / step))
    return [round(lo + j * step, 12) for j in range(count + 1)]


def _emit(cfg: RunConfig, text: str):
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w") as fh:
            fh.write(text)


def _csv(rows, header):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _name(f):
    if isinstance(f, VotingMethod):
        return describe(f.spec)
    return f.name


def cmd_power(cfg, args):
    f = load_method(args.method, args.n)
    measure = BiasedMeasure(args.p)
    report = power.pivotal_report(f, measure)
    doc = {
        "method": _name(f),
        "n": report.n,
        "p": report.p,
        "b": [str(b) for b in report.b],
        "influences": list(report.influences),
        "banzhaf": list(report.banzhaf),
    }
    _emit(cfg, dumps(doc))


def cmd_stability(cfg, args):
    measure = BiasedMeasure(args.p)
    mc = args.mc is not None
    f = load_method(args.method, args.n, dense=None if not mc else False)
    rhos = _rho_grid(args.rho_sweep) if args.rho_sweep else [args.rho]

    def one(rho):
        model = noise.CorruptionModel(rho, measure)
        if mc:
            return noise.stability_mc(f, model, args.mc, seed=cfg.seed, threads=cfg.threads)
        return noise.stability_exact(f, model)

    if args.rho_sweep:
        rows = []
        for rho in rhos:
            est = one(rho)
            rows.append([f"{rho:.12g}", f"{float(est.value):.17g}", f"{est.stderr:.17g}"])
        _emit(cfg, _csv(rows, ["rho", "value", "stderr"]))
        return
    est = one(rhos[0])
    doc = {
        "method": _name(f),
        "n": f.n,
        "rho": rhos[0],
        "p": measure.p,
        "value": est.value,
        "stderr": est.stderr,
        "samples": est.samples,
        "seed": est.seed,
        "exact": est.exact,
        "outcome_change_prob": noise.outcome_change_prob(est.value),
    }
    _emit(cfg, dumps(doc))


def _plurality_k(args):
    if args.method is None:
        if args.k is None:
            raise StabvoteError("stability-k needs --k or --method plurality:<k>")
        return args.k
    head, _, arg = args.method.partition(":")
    if head != "plurality" or not arg.isdigit():
        raise StabvoteError(f"stability-k supports plurality:<k> methods, got {args.method!r}")
    if args.k is not None and args.k != int(arg):
        raise StabvoteError(f"--k {args.k} disagrees with {args.method}")
    return int(arg)


def cmd_stability_k(cfg, args):
    args.k = _plurality_k(args)
    f = multicandidate.MultiFunction.plurality(args.n, args.k, dense=None if args.mc is None else False)
    if args.mc is None:
        est = multicandidate.stability_k(f, args.rho, exact=True)
    else:
        est = multicandidate.stability_k(f, args.rho, exact=False, samples=args.mc, seed=cfg.seed, threads=cfg.threads)
    doc = {"method": f"plurality:{args.k}", "n": args.n, "k": args.k, "rho": args.rho}
    doc.update({"value": est.value, "stderr": est.stderr, "samples": est.samples, "seed": est.seed, "exact": est.exact})
    _emit(cfg, dumps(doc))


def cmd_adversary(cfg, args):
    if args.action == "verify":
        if args.t is None:
            rep = geometry.verify_majority_optimal(args.n, args.k, trials=args.trials, seed=cfg.seed)
        else:
            rep = geometry.verify_threshold_optimal(args.n, args.t, args.k, trials=args.trials, seed=cfg.seed, allow_odd_t=args.allow_odd_t)
        doc = dict(vars(rep))
        doc["co_minimizers"] = [f"{t:x}" for t in rep.co_minimizers]
        doc["optimal"] = rep.optimal
        _emit(cfg, dumps(doc))
        if rep.asserted and not rep.optimal:
            raise InvariantError(f"{rep.method} is not minimal: {rep.violations} competitors do better")
        return
    if args.action == "harper":
        rng = np.random.default_rng(cfg.seed)
        failures = 0
        for _ in range(args.trials or 1000):
            k = int(rng.integers(0, args.n + 1))
            size = int(rng.integers(len(geometry.half_ball(args.n, k)), (1 << args.n) + 1))
            S = geometry.SubsetMask.from_indices(args.n, rng.choice(1 << args.n, size=size, replace=False))
            failures += not geometry.check_harper(S, k)
        _emit(cfg, dumps({"n": args.n, "trials": args.trials or 1000, "failures": failures}))
        if failures:
            raise InvariantError(f"Harper inequality failed {failures} times")
        return
    if args.method is None:
        raise StabvoteError("adversary needs --method")
    f = load_method(args.method, args.n, dense=True)
    rep = geometry.vulnerable_count(f, args.k)
    _emit(cfg, dumps({"method": _name(f), "n": f.n, **vars(rep)}))


def cmd_condorcet(cfg, args):
    profile = multicandidate.RankedProfile.from_csv(args.profile)
    result = multicandidate.condorcet_analysis(profile)
    labels = profile.labels
    t = result.tournament
    doc = {
        "candidates": list(labels),
        "ballots": len(profile.ballots),
        "winner": None if result.winner is None else labels[result.winner],
        "cycle": None if result.cycle is None else [labels[c] for c in result.cycle],
        "pairwise": {f"{labels[a]}>{labels[b]}": t.counts[a][b] for a in range(profile.m) for b in range(profile.m) if a != b},
        "majority_prefers": [f"{labels[a]}>{labels[b]}" for a in range(profile.m) for b in range(profile.m) if t.relation[a][b] == 1],
        "ties": [[labels[a], labels[b]] for a, b in t.ties],
    }
    _emit(cfg, dumps(doc))


def _states(args):
    if args.states:
        states = electoral.load_states(args.states)
    elif args.equal:
        m, size = args.equal.split("x")
        states = electoral.equal_states(int(m), int(size))
    else:
        states = electoral.census_2010_states()
    if args.voter_scale != 1:
        states = electoral.scale_states(states, args.voter_scale)
    return states


def cmd_ec(cfg, args):
    states = _states(args)
    eps_values = [float(e) for e in args.sweep.split(",")] if args.sweep else [args.epsilon]
    reports = []
    for eps in eps_values:
        scenario = electoral.EcScenario(states, eps, args.samples, cfg.seed)
        reports.append(electoral.compare_ec_vs_majority(scenario, threads=cfg.threads))
    if args.sweep:
        rows = [
            [f"{r.epsilon:.12g}", f"{r.electoral_college.prob:.17g}", f"{r.electoral_college.stderr:.17g}",
             f"{r.majority.prob:.17g}", f"{r.majority.stderr:.17g}", "" if r.ratio is None else f"{r.ratio:.17g}"]
            for r in reports
        ]
        _emit(cfg, _csv(rows, ["epsilon", "ec", "ec_stderr", "majority", "majority_stderr", "ratio"]))
        return
    _emit(cfg, dumps(reports[0]))


def cmd_method(cfg, args):
    f = load_method(args.method, args.n)
    if args.save:
        if not isinstance(f, BooleanFunction):
            raise StabvoteError(f"n={f.n} is too large for a dense truth table")
        save_table(f, args.save)
    if args.save_spec:
        if args.method.startswith(tuple("./")) or args.method.endswith(".json"):
            raise StabvoteError("--save-spec needs a built-in method name")
        save_spec(parse_method_name(args.method), args.save_spec, f.n)
    doc = {"method": _name(f), "n": f.n}
    if isinstance(f, BooleanFunction):
        doc["plus_count"] = str(f.count_ones())
        doc["expectation"] = f.expectation()
        doc["balanced"] = f.expectation() == 0
        if f.spec is not None:
            doc["spec"] = spec_to_dict(f.spec)
    else:
        doc["spec"] = spec_to_dict(f.spec)
        doc["ties_reachable"] = f.ties_reachable
    _emit(cfg, dumps(doc))


def build_parser():
    parser = _Parser(prog="stabvote", description="Stability and power analysis of voting methods.")
    parser.add_argument("--threads", type=int, default=default_threads(),
                        help="worker threads for Monte Carlo (default $STABVOTE_THREADS or 1); never changes results")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    raw = argparse.RawDescriptionHelpFormatter

    def common(p, seed=False):
        p.add_argument("--out", default="-", help="output path (default stdout)")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed (default 0)")

    p = sub.add_parser("power", help="pivotal counts, influences, Banzhaf indices", epilog=METHOD_HELP, formatter_class=raw)
    p.add_argument("--method", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=_prob, default=0.5, help="probability of a +1 vote (fraction like 1/3 keeps results exact)")
    common(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("stability", help="noise stability S_rho(f)", epilog=METHOD_HELP + "\n--rho-sweep lo:hi:step writes CSV rho,value,stderr.", formatter_class=raw)
    p.add_argument("--method", required=True)
    p.add_argument("--n", type=int)
    rho = p.add_mutually_exclusive_group(required=True)
    rho.add_argument("--rho", type=_prob)
    rho.add_argument("--rho-sweep", metavar="LO:HI:STEP")
    p.add_argument("--p", type=_prob, default=0.5)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact computation (default)")
    mode.add_argument("--mc", type=_count, metavar="SAMPLES", help="Monte Carlo with this many samples")
    common(p, seed=True)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("stability-k", help="k-candidate plurality stability P[f(X)=f(Y)]",
                       epilog="method: plurality:<k> (ties go to the lowest candidate id); same as --k <k>.\n"
                              "Each corrupted vote keeps its value with probability rho, else is redrawn uniformly.",
                       formatter_class=raw)
    p.add_argument("--k", type=int)
    p.add_argument("--method", metavar="plurality:<k>")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--mc", type=_count, metavar="SAMPLES")
    common(p, seed=True)
    p.set_defaults(func=cmd_stability_k)

    p = sub.add_parser("adversary", help="adversarial vote changes",
                       epilog=METHOD_HELP + "\nactions: report (default) counts vulnerable configurations of --method;\n"
                       "verify checks majority (or --t threshold majority) is least vulnerable;\n"
                       "harper audits Harper's inequality on random sets.", formatter_class=raw)
    p.add_argument("action", nargs="?", choices=["report", "verify", "harper"], default="report")
    p.add_argument("--method")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--t", type=int, help="threshold for verify (even)")
    p.add_argument("--allow-odd-t", action="store_true", help="report odd thresholds without asserting optimality")
    p.add_argument("--trials", type=_count, help="random competitors instead of exhaustive search")
    common(p, seed=True)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("condorcet", help="pairwise majority analysis of ranked ballots",
                       epilog="profile CSV: one ballot per row, candidate names most-preferred first.", formatter_class=raw)
    p.add_argument("--profile", required=True)
    common(p)
    p.set_defaults(func=cmd_condorcet)

    p = sub.add_parser("ec", help="electoral college vs national majority under vote corruption",
                       epilog="states CSV: header name,voters,electors; even voter counts are rounded up.\n"
                              "Without --states or --equal the bundled synthetic 2010-shaped scenario is used.\n"
                              "--sweep e1,e2,... writes CSV epsilon,ec,ec_stderr,majority,majority_stderr,ratio.",
                       formatter_class=raw)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--states")
    src.add_argument("--equal", metavar="MxSIZE", help="m equal states, e.g. 51x10001")
    p.add_argument("--epsilon", type=float, default=1e-4, help="per-vote corruption probability (rho = 1 - 2 epsilon)")
    p.add_argument("--voter-scale", type=float, default=1.0, metavar="F",
                   help="multiply every state electorate by F (rounded to odd), keeping proportions")
    p.add_argument("--sweep", metavar="E1,E2,...")
    p.add_argument("--samples", type=_count, default=1_000_000)
    common(p, seed=True)
    p.set_defaults(func=cmd_ec)

    p = sub.add_parser("method", help="inspect, build and save voting methods", epilog=METHOD_HELP, formatter_class=raw)
    p.add_argument("--method", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--save", metavar="PATH", help="write the dense truth table")
    p.add_argument("--save-spec", metavar="PATH", help="write the method spec as JSON")
    common(p)
    p.set_defaults(func=cmd_method)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig.from_args(args)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(cfg, args)
    except InvariantError as exc:
        print(f"stabvote: invariant failure: {exc}", file=sys.stderr)
        return 2
    except (StabvoteError, ValueError, OSError) as exc:
        print(f"stabvote: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
