"""Command-line entry point: ``mpir {plan,run,bounds,audit,table,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage error.
The default seed comes from ``MPIR_SEED`` when set.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import bounds_calc as bd
from .errors import DomainError, MPIRError
from .scheme_mds import mds_build_queries, mds_decode, mds_params, mds_rate
from .scheme_rounds import rounds_build_queries, rounds_decode, rounds_params
from .stage_planner import StagePlan, rational_rate, spectral_rate, stage_counts
from .message_store import RetrievalRequest, answer, dump_store, generate_store
from .tables import format_table, parse_table, table_csv
from .verifier import oracle_decode, statistical_privacy_check, structural_privacy_check

SEED_ENV = "MPIR_SEED"


def frac(x: Fraction) -> str:
    """``p/q (decimal)``."""
    return f"{x.numerator}/{x.denominator} ({float(x):.6f})"


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    scheme: str | None
    M: int
    P: int
    N: int
    q: int | None = None
    pset: tuple[int, ...] | None = None
    seed: int = 0
    table_out: str | None = None
    store_out: str | None = None
    plan: StagePlan | None = None

    def __post_init__(self):
        if not 1 <= self.P <= self.M:
            raise UsageError("need 1 <= P <= M")
        if self.N < 2:
            raise UsageError("need N >= 2")
        if self.scheme is None:
            self.scheme = "mds" if 2 * self.P >= self.M else "rounds"
        if self.scheme not in ("mds", "rounds"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "mds" and 2 * self.P < self.M:
            raise UsageError("the MDS scheme needs 2P >= M")
        if self.scheme == "rounds" and self.P == self.M and self.M > 1:
            raise UsageError("the rounds scheme needs P < M")
        if self.pset is not None:
            if len(set(self.pset)) != self.P or not all(1 <= m <= self.M for m in self.pset):
                raise UsageError(f"--pset must list {self.P} distinct indices in 1..{self.M}")

    @property
    def desired(self) -> tuple[int, ...]:
        return tuple(sorted(self.pset)) if self.pset else tuple(range(1, self.P + 1))


@dataclass
class RateReport:
    scheme: str
    M: int
    P: int
    N: int
    L: int
    desired_symbols: int
    downloads: int
    per_db: list[int]
    expected: Fraction
    decode_ok: bool
    oracle_ok: bool
    bounds: dict[str, Fraction | float] = field(default_factory=dict)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.desired_symbols, self.downloads)

    @property
    def passed(self) -> bool:
        return self.decode_ok and self.oracle_ok and self.rate == self.expected

    def text(self) -> str:
        out = [
            f"scheme   {self.scheme}  (M,P,N)=({self.M},{self.P},{self.N})  L={self.L}",
            f"desired  {self.desired_symbols} symbols",
            f"download {self.downloads} total, per database {self.per_db}",
            f"rate     {frac(self.rate)}",
            f"expected {frac(self.expected)}",
        ]
        for k, v in self.bounds.items():
            out.append(f"{k:<8} {frac(v) if isinstance(v, Fraction) else f'{v:.9f}'}")
        out.append(f"decode {'ok' if self.decode_ok else 'MISMATCH'}, oracle {'ok' if self.oracle_ok else 'MISMATCH'}")
        out.append("PASS" if self.passed else "FAIL")
        return "\n".join(out)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "M", "P", "N", "L", "desired", "downloads", "rate", "expected", "decode", "oracle"])
        w.writerow([self.scheme, self.M, self.P, self.N, self.L, self.desired_symbols, self.downloads,
                    f"{self.rate.numerator}/{self.rate.denominator}",
                    f"{self.expected.numerator}/{self.expected.denominator}", self.decode_ok, self.oracle_ok])
        return buf.getvalue()


def build(cfg: RunConfig):
    """(params, request, table, expected rate) for a run configuration."""
    req = RetrievalRequest(cfg.desired, cfg.seed)
    if cfg.scheme == "mds":
        params = mds_params(cfg.M, cfg.P, cfg.N, cfg.q)
        return params, req, mds_build_queries(params, req), mds_rate(params)
    plan = cfg.plan or stage_counts(cfg.M, cfg.P, cfg.N)
    params = rounds_params(cfg.M, cfg.P, cfg.N, cfg.q or 2, plan)
    return params, req, rounds_build_queries(params, req, plan), rational_rate(plan)


def run_experiment(cfg: RunConfig) -> RateReport:
    """Plan, build queries, answer, decode, cross-check with the oracle, report."""
    params, req, table, expected = build(cfg)
    store = generate_store(params, cfg.seed)
    answers = answer(table, store)
    decode = mds_decode if cfg.scheme == "mds" else rounds_decode
    truth = store.desired_messages(req)
    got = decode(table, answers, store.interleavers)
    decode_ok = all(np.array_equal(got[m], truth[m]) for m in req.desired)
    try:
        oracle = oracle_decode(table, answers, req, params, store.interleavers).messages
        oracle_ok = all(np.array_equal(oracle[m], got[m]) for m in req.desired)
    except MPIRError:
        oracle_ok = False
    bounds: dict = {"upper": bd.upper_bound(cfg.M, cfg.P, cfg.N)}
    if 2 * cfg.P >= cfg.M:
        bounds["capacity"] = bd.capacity_high(cfg.M, cfg.P, cfg.N)
    else:
        bounds["spectral"] = spectral_rate(cfg.M, cfg.P, cfg.N)
    if cfg.table_out:
        _write(cfg.table_out, format_table(table))
    if cfg.store_out:
        _write(cfg.store_out, dump_store(store))
    return RateReport(cfg.scheme, cfg.M, cfg.P, cfg.N, params.L, params.P * params.L, table.total,
                      table.counts(), expected, decode_ok, oracle_ok, bounds)


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- subcommands


def _pset(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_mpn(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("-M", type=int, required=required, help="number of messages")
    p.add_argument("-P", type=int, required=required, help="number of desired messages")
    p.add_argument("-N", type=int, required=required, help="number of databases")


def cmd_plan(args) -> int:
    rows = []
    if args.sweep:
        for M in range(2, args.max_M + 1):
            for P in range(1, M // 2 + 1):
                for N in range(2, args.max_N + 1):
                    rows.append(stage_counts(M, P, N))
    else:
        if args.M is None or args.P is None or args.N is None:
            raise UsageError("plan needs -M -P -N or --sweep")
        rows.append(stage_counts(args.M, args.P, args.N))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["M", "P", "N", "alpha", "D", "U", "L", "rate", "scale"])
        for pl in rows:
            r = rational_rate(pl)
            w.writerow([pl.M, pl.P, pl.N, " ".join(map(str, pl.alpha)), pl.D_db, pl.U_db, pl.L,
                        f"{r.numerator}/{r.denominator}", pl.scale])
        sys.stdout.write(buf.getvalue())
    else:
        for pl in rows:
            print(f"(M,P,N)=({pl.M},{pl.P},{pl.N})")
            print(f"  alpha  {list(pl.alpha)}" + (f"  (scaled by {pl.scale})" if pl.scale > 1 else ""))
            print(f"  D={pl.D_db} U={pl.U_db} per database, L={pl.L}")
            print(f"  rate   {frac(rational_rate(pl))}")
    return 0


def cmd_run(args) -> int:
    cfg = RunConfig(args.scheme, args.M, args.P, args.N, args.q, args.pset, args.seed,
                    args.emit_table, args.store_out)
    rep = run_experiment(cfg)
    sys.stdout.write(rep.csv() if args.format == "csv" else rep.text() + "\n")
    return 0 if rep.passed else 1


def cmd_bounds(args) -> int:
    if args.sweep:
        header, rows = bd.sweep_rows(args.sweep)
        _write(args.out or "-", bd.rows_to_csv(header, rows))
        return 0
    if args.M is None or args.P is None or args.N is None:
        raise UsageError("bounds needs -M -P -N or --sweep")
    r = bd.bounds_report(args.M, args.P, args.N)
    items = [
        ("capacity_high", r.capacity_high), ("capacity_int", r.capacity_int), ("upper", r.upper),
        ("lower", r.lower_exact), ("lower_spectral", r.lower), ("gap", r.gap), ("repetition", r.repetition),
        ("delta", r.delta), ("C", r.region.C), ("delta_corner", r.region.delta), ("C_P", r.region.C_P),
        ("beta", r.beta),
    ]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for k, v in items:
            w.writerow([k, "" if v is None else (f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else v)])
        sys.stdout.write(buf.getvalue())
    else:
        for k, v in items:
            if v is None:
                shown = "n/a"
            elif isinstance(v, Fraction):
                shown = frac(v)
            elif isinstance(v, float):
                shown = f"{v:.12f}"
            else:
                shown = str(v)
            print(f"{k:<15} {shown}")
        print("corners        " + "  ".join("(" + ", ".join(f"{c.numerator}/{c.denominator}" for c in pt) + ")"
                                          for pt in r.region.corners))
    return 0


def cmd_audit(args) -> int:
    rep = structural_privacy_check(args.scheme, args.M, args.P, args.N, args.seed)
    if args.samples:
        stat = statistical_privacy_check(args.scheme, args.M, args.P, args.N, R=args.samples)
        rep.tv_estimates, rep.thresholds, rep.samples = stat.tv_estimates, stat.thresholds, stat.samples
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "db", "set_a", "set_b", "result"])
        w.writerows(rep.rows())
        sys.stdout.write(buf.getvalue())
    else:
        print(f"audit {args.scheme} (M,P,N)=({args.M},{args.P},{args.N})")
        for row in rep.rows():
            kind, n, a, b, res = row
            print(f"  {kind:<10} db {n} {a} {b} {res}".rstrip())
        for note in rep.notes:
            print(f"  note: {note}")
        print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 1


def cmd_table(args) -> int:
    if args.input:
        with open(args.input) as fh:
            table = parse_table(fh.read())
    else:
        if args.M is None or args.P is None or args.N is None:
            raise UsageError("table needs -M -P -N or --input")
        cfg = RunConfig(args.scheme, args.M, args.P, args.N, args.q, args.pset, args.seed)
        table = build(cfg)[2]
    _write(args.out or "-", table_csv(table) if args.format == "csv" else format_table(table))
    return 0


def cmd_verify(args) -> int:
    from .acceptance import Context, run_suite

    ctx = Context.with_fault(args.inject) if args.inject else Context()
    results = run_suite(ctx, args.filter)
    if not results:
        raise UsageError(f"no criterion matches filter {args.filter!r}")
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"[{'PASS' if r.ok else 'FAIL'}] {r.cid:>2} {r.name:<{width}}  {r.detail}")
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 1 if failed else 0


def parser() -> argparse.ArgumentParser:
    default_seed = int(os.environ.get(SEED_ENV, "0"))
    ap = argparse.ArgumentParser(prog="mpir", description="Multi-message private information retrieval toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--format", choices=("text", "csv"), default="text")
        if seed:
            p.add_argument("--seed", type=int, default=default_seed, help=f"random seed (default ${SEED_ENV} or 0)")

    p = sub.add_parser("plan", help="stage counts and totals for the multi-round scheme")
    _add_mpn(p, required=False)
    p.add_argument("--sweep", action="store_true", help="every P <= M/2 up to --max-M, --max-N")
    p.add_argument("--max-M", type=int, default=8)
    p.add_argument("--max-N", type=int, default=5)
    common(p, seed=False)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="build, answer, decode and measure one retrieval")
    _add_mpn(p)
    p.add_argument("--scheme", choices=("mds", "rounds"), help="default: mds when 2P >= M")
    p.add_argument("--q", type=int, help="field size override")
    p.add_argument("--pset", type=_pset, help="desired message indices, e.g. 1,3")
    p.add_argument("--emit-table", metavar="PATH", help="write the query table text ('-' for stdout)")
    p.add_argument("--store-out", metavar="PATH", help="write the generated message store")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bounds", help="capacities, bounds and sweep data")
    _add_mpn(p, required=False)
    p.add_argument("--sweep", choices=sorted(bd.SWEEPS), help="emit CSV for one plot grid")
    p.add_argument("--out", metavar="PATH")
    common(p, seed=False)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("audit", help="privacy checks across all desired sets")
    _add_mpn(p)
    p.add_argument("--scheme", choices=("mds", "rounds", "desired-only", "asymmetric"), required=True)
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo samples per desired set (0 skips)")
    common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("table", help="print a query table, or re-emit a parsed one")
    _add_mpn(p, required=False)
    p.add_argument("--scheme", choices=("mds", "rounds"))
    p.add_argument("--q", type=int)
    p.add_argument("--pset", type=_pset)
    p.add_argument("--input", metavar="PATH", help="parse this text table instead of building one")
    p.add_argument("--out", metavar="PATH")
    common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--filter", help="only criteria whose tags or name contain this word")
    p.add_argument("--inject", choices=("alpha",), help="deliberately corrupt an input to test the suite")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MPIRError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
