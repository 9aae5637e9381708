"""Command-line front end: ``cost``, ``run`` and ``audit``.

Exit status: 0 success, 1 audit failure, 2 invalid input, 3 I/O error.
Every JSON document and every table starts with the resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import string
import sys
from dataclasses import asdict, dataclass
from typing import Sequence

from pirsim import alphabet as alpha
from pirsim.audit import DEFAULT_BUDGET, DEFAULT_TRIALS, run_audit
from pirsim.composite import decompose, stream
from pirsim.core import (
    MessageStore,
    SchemeParams,
    attains_capacity,
    capacity,
    optimal_download_cost,
)
from pirsim.errors import ParameterError, PirError
from pirsim.qgen import plan_for
from pirsim.sim.protocol import run_protocol

DEFAULT_SEED = 20170503
BUDGET_ENV = "PIRSIM_BUDGET"

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3


@dataclass
class CliConfig:
    subcommand: str
    N: int
    K: int
    L: int
    M: int = 2
    Mprime: int | None = None
    theta: int = 1
    seed: int = DEFAULT_SEED
    trials: int = DEFAULT_TRIALS
    budget: int = DEFAULT_BUDGET
    output: str | None = None
    format: str = "table"
    store: str | None = None
    negative_control: bool = False
    workers: int = 1
    loopback: bool = False

    def params(self) -> SchemeParams:
        return SchemeParams(self.N, self.K, self.L, self.M, self.Mprime)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["Mprime"] = self.M if self.Mprime is None else self.Mprime
        return doc


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None


# -- cost -------------------------------------------------------------------


def cost_summary(params: SchemeParams) -> dict:
    N, K, L = params.N, params.K, params.L
    C = capacity(N, K)
    doc: dict = {"capacity": f"{C.numerator}/{C.denominator}"}
    if params.matched:
        doc["download_cost"] = optimal_download_cost(N, K, L)
        doc["attains_capacity"] = attains_capacity(N, K, L)
        inner_L = L
    else:
        inner_L = alpha.transcoded_length(L, params.M, params.Mprime)
        doc["transcoded_length"] = inner_L
        if N == 1:
            doc["lower_bound"] = alpha.lower_bound_cost(N, K, L, params.M, params.Mprime)
            doc["achieved"] = K * inner_L
        else:
            w = alpha.mismatched_cost_bounds(params)
            doc["lower_bound"] = w.lower_bound_cost
            doc["achieved"] = w.achieved_cost
            doc["exactly_optimal"] = w.exactly_optimal
        doc["gap"] = doc["achieved"] - doc["lower_bound"]
    if N >= 2:
        d = decompose(SchemeParams(N, K, inner_L))
        doc["decomposition"] = d.to_json()
    else:
        doc["decomposition"] = None
    return doc


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def render_cost(doc: dict) -> str:
    lines = [f"capacity C = {doc['capacity']}"]
    if "download_cost" in doc:
        lines.append(f"D = {doc['download_cost']}")
        lines.append(f"attains capacity: {_yes(doc['attains_capacity'])}")
    else:
        lines.append(f"L' = {doc['transcoded_length']}")
        lines.append(f"download window: [{doc['lower_bound']}, {doc['achieved']}] (gap {doc['gap']})")
        lines.append(f"achieved {doc['achieved']}")
    d = doc["decomposition"]
    if d is None:
        lines.append("decomposition: full download (N = 1)")
    else:
        lines.append(f"decomposition G1/G2/L2 = {d['G1']}/{d['G2']}/{d['L2']}")
    return "\n".join(lines)


# -- demo tables ------------------------------------------------------------


def _label(k: int, j: int) -> str:
    letters = string.ascii_lowercase
    name = letters[k - 1] if k <= len(letters) else f"w{k}_"
    return f"{name}{j}"


def demo_table(N: int, K: int, theta: int = 1) -> str:
    """Symbolic query table with a_i, b_i, ... labels, one column per database."""
    plan = plan_for(N, K, theta)
    columns = []
    for qs in plan.per_database:
        col = []
        for b in range(1, K + 1):
            sums = [" + ".join(_label(k, j) for k, j in q.terms) for q in qs.block(b)]
            # single symbols share one line, as in the worked examples
            if b == 1 and sums:
                col.append(", ".join(sums))
            else:
                col.extend(sums)
        columns.append(col)
    height = max(len(c) for c in columns)
    width = max([len(s) for c in columns for s in c] + [3])
    head = " | ".join(f"DB{n + 1}".ljust(width) for n in range(N))
    rule = "-+-".join("-" * width for _ in range(N))
    rows = [
        " | ".join((c[i] if i < len(c) else "").ljust(width) for c in columns)
        for i in range(height)
    ]
    title = f"N={N}, K={K}, theta={theta}"
    return "\n".join([title, head, rule] + rows)


DEMO_CASES = ((2, 2), (2, 3), (3, 3))


# -- run --------------------------------------------------------------------


def load_store(path: str, params: SchemeParams) -> MessageStore:
    with open(path) as fh:
        doc = json.load(fh)
    rows = doc["messages"] if isinstance(doc, dict) else doc
    store = MessageStore.from_lists(rows, params.M)
    store.check(params)
    return store


def _emit(doc: dict, text: str, cfg: CliConfig) -> None:
    if cfg.output:
        with open(cfg.output, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if cfg.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text)


def _config_line(cfg: CliConfig) -> str:
    return "config: " + json.dumps(cfg.to_json(), sort_keys=True)


def cmd_cost(cfg: CliConfig) -> int:
    doc = {"config": cfg.to_json(), "cost": cost_summary(cfg.params())}
    _emit(doc, _config_line(cfg) + "\n" + render_cost(doc["cost"]), cfg)
    return EXIT_OK


def cmd_demo(cfg: CliConfig, cases) -> int:
    tables = {f"N={N},K={K}": demo_table(N, K, cfg.theta) for N, K in cases}
    doc = {"config": cfg.to_json(), "tables": tables}
    _emit(doc, _config_line(cfg) + "\n\n" + "\n\n".join(tables.values()), cfg)
    return EXIT_OK


def cmd_run(cfg: CliConfig) -> int:
    params = cfg.params()
    if cfg.store:
        store = load_store(cfg.store, params)
    else:
        store = MessageStore.random(params.K, params.L, params.M, stream(cfg.seed, "store"))
    t = run_protocol(params, cfg.theta, store, cfg.seed, loopback=cfg.loopback)
    doc = {"config": cfg.to_json(), "transcript": t.to_json()}
    if t.decoded != store.message(cfg.theta):
        raise AssertionError("decoded message differs from the stored one")
    verdict = "optimal" if t.optimal else "NOT optimal"
    text = "\n".join([
        _config_line(cfg),
        f"per-database symbols: {list(t.per_db_symbol_count)}",
        f"total download: {t.total_download} (target {t.target_cost}, {verdict})",
        f"decoded W{cfg.theta}: {list(t.decoded)}",
    ])
    _emit(doc, text, cfg)
    return EXIT_OK


def cmd_audit(cfg: CliConfig) -> int:
    report = run_audit(
        cfg.params(),
        budget=cfg.budget,
        trials=cfg.trials,
        seed=cfg.seed,
        negative=cfg.negative_control,
        workers=cfg.workers,
    )
    report.config = cfg.to_json()
    doc = report.to_json()
    lines = [_config_line(cfg), f"scheme: {report.scheme}, privacy mode: {report.mode}"]
    for r in report.privacy:
        line = f"  DB{r.database}: {r.verdict.value}"
        if r.witness:
            w = r.witness
            line += (f" (query {w['query_hex']}: {w['count_a']} under theta={w['theta_a']}, "
                     f"{w['count_b']} under theta={w['theta_b']})")
        lines.append(line)
    c = report.correctness
    lines.append(f"correctness: {'pass' if c.passed else 'FAIL'} ({c.mode}, {c.trials} cases)")
    lines.append(f"cost: {report.cost.to_json()}")
    if report.structure is not None:
        lines.append(f"structure: {'pass' if report.structure.passed else 'FAIL'}")
        lines.extend(f"  {f}" for f in report.structure.failures)
    lines.append("PASS" if report.passed else "FAIL")
    _emit(doc, "\n".join(lines), cfg)
    return EXIT_OK if report.passed else EXIT_VIOLATION


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pirsim", description="Capacity-optimal private information retrieval simulator."
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, need_params: bool = True) -> None:
        p.add_argument("-N", type=int, required=need_params, help="number of databases")
        p.add_argument("-K", type=int, required=need_params, help="number of messages")
        p.add_argument("-L", type=int, required=need_params, help="message length")
        p.add_argument("-M", type=int, default=2, help="message alphabet size")
        p.add_argument("--mprime", type=int, default=None, help="download alphabet size")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--output", "-o", default=None, help="write the JSON document here")
        p.add_argument("--format", choices=("json", "table"), default="table")

    p_cost = sub.add_parser("cost", help="capacity, optimal download and decomposition")
    common(p_cost, need_params=False)
    p_cost.add_argument("--demo", action="store_true",
                        help="print the symbolic query tables of the worked examples")
    p_cost.add_argument("--theta", type=int, default=1)

    p_run = sub.add_parser("run", help="run the protocol once and write the transcript")
    common(p_run)
    p_run.add_argument("--theta", type=int, default=1)
    p_run.add_argument("--store", default=None, help="JSON file with the K messages")
    p_run.add_argument("--loopback", action="store_true",
                       help="reach each database through a local socket")

    p_audit = sub.add_parser("audit", help="structure, correctness, cost and privacy audits")
    common(p_audit)
    p_audit.add_argument("--trials", type=int, default=DEFAULT_TRIALS,
                         help="samples per theta when the space exceeds the budget")
    p_audit.add_argument("--budget", type=int, default=None,
                         help=f"exhaustive enumeration limit (default ${BUDGET_ENV} or {DEFAULT_BUDGET})")
    p_audit.add_argument("--negative-control", action="store_true",
                         help="audit the broken scheme (identity permutations, zero coins)")
    p_audit.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> CliConfig:
    budget = getattr(args, "budget", None)
    cfg = CliConfig(
        subcommand=args.subcommand,
        N=args.N,
        K=args.K,
        L=args.L,
        M=args.M,
        Mprime=args.mprime,
        theta=getattr(args, "theta", 1),
        seed=args.seed,
        trials=getattr(args, "trials", DEFAULT_TRIALS),
        budget=default_budget() if budget is None else budget,
        output=args.output,
        format=args.format,
        store=getattr(args, "store", None),
        negative_control=getattr(args, "negative_control", False),
        workers=getattr(args, "workers", 1),
        loopback=getattr(args, "loopback", False),
    )
    if cfg.trials < 1 or cfg.budget < 1 or cfg.workers < 1:
        raise ParameterError("trials, budget and workers must be positive")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "cost" and args.demo:
            cfg = CliConfig("cost", args.N or 0, args.K or 0, args.L or 0, args.M,
                            args.mprime, args.theta, args.seed, output=args.output,
                            format=args.format)
            cases = [(args.N, args.K)] if args.N and args.K else DEMO_CASES
            for N, K in cases:
                if N < 2 or K < 1 or not 1 <= cfg.theta <= K:
                    raise ParameterError("demo needs N >= 2, K >= 1 and theta in [1, K]")
            return cmd_demo(cfg, cases)
        if args.subcommand == "cost" and None in (args.N, args.K, args.L):
            raise ParameterError("cost needs -N, -K and -L (or --demo)")
        cfg = config_from_args(args)
        params = cfg.params()
        if args.subcommand != "cost" and not 1 <= cfg.theta <= params.K:
            raise ParameterError(f"theta must be in [1, {params.K}], got {cfg.theta}")
        handler = {"cost": cmd_cost, "run": cmd_run, "audit": cmd_audit}[args.subcommand]
        return handler(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PirError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
