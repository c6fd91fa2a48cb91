"""Command-line driver: gen | schedule | simulate | report (+ hidden verify).

Exit codes: 0 success, 2 usage/config error (including missing input
files), 3 content/validation failure, 4 OS-level I/O error. The SATA_SEED
environment variable supplies the default seed when --seed is absent.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from . import cost, mask as mask_mod, oracle, scheduler, stats
from .errors import MaskFormatError, ReportFormatError, ScheduleFormatError, SpecError
from .sorter import HeadType, SeedPolicy

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4


@dataclass
class RunConfig:
    """Scheduling knobs shared by the schedule/simulate verbs."""

    theta_fraction: float = 0.5
    s_h_init_fraction: float = 0.5
    s_h_min: int = 1
    s_f: int | None = None  # None = one tile spanning the head
    zero_skip: bool = False
    seed_policy: SeedPolicy = SeedPolicy("fixed", 0)


def _default_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("SATA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise SpecError(f"SATA_SEED must be an integer, got {env!r}") from exc
    return 0


def _require_file(path: str, what: str) -> None:
    if not os.path.exists(path):
        raise SpecError(f"{what} file not found: {path}")


def cmd_gen(args: argparse.Namespace) -> int:
    spec = mask_mod.GeneratorSpec(
        preset=args.preset,
        seq_len=args.n,
        n_heads=args.heads,
        k_per_query=args.k,
        locality=mask_mod.Locality.parse(args.locality),
        noise=args.noise,
        seed=_default_seed(args.seed),
    )
    m = mask_mod.generate_mask(spec)
    mask_mod.save_mask(m, args.out)
    print(f"wrote {args.out}: N={m.seq_len} K={m.k_per_query} heads={m.n_heads}")
    return EXIT_OK


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        theta_fraction=args.theta_fraction,
        s_h_init_fraction=args.s_h_init_fraction,
        s_h_min=args.s_h_min,
        s_f=args.tile,
        zero_skip=args.zero_skip,
        seed_policy=SeedPolicy.parse(args.seed_policy),
    )


def _plan(mask, cfg: RunConfig):
    return scheduler.plan_layer(
        mask,
        theta_fraction=cfg.theta_fraction,
        s_h_init_fraction=cfg.s_h_init_fraction,
        s_h_min=cfg.s_h_min,
        s_f=cfg.s_f,
        zero_skip_enabled=cfg.zero_skip,
        seed_policy=cfg.seed_policy,
    )


def cmd_schedule(args: argparse.Namespace) -> int:
    _require_file(args.mask, "mask")
    m = mask_mod.load_mask(args.mask)
    cfg = _run_config(args)
    sched = _plan(m, cfg)
    scheduler.save_schedule(sched, args.out)
    for i, sub in enumerate(sched.subheads):
        o = sub.outcome
        a, b, c = o.counts
        print(
            f"subhead {i} (head {sub.head}, q{sub.q_fold}/k{sub.k_fold}): "
            f"type={o.head_type.value} s_h={o.s_h} decrements={o.decrements} "
            f"HEAD={a} TAIL={b} GLOB={c}"
        )
    n_glob = sum(1 for s in sched.subheads if s.outcome.head_type is HeadType.GLOB)
    print(
        f"wrote {args.out}: {len(sched.subheads)} subheads "
        f"({n_glob} GLOB), {len(sched.steps)} steps"
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    _require_file(args.schedule, "schedule")
    _require_file(args.mask, "mask")
    if args.cost is not None:
        _require_file(args.cost, "cost config")
        params = cost.load_cost_params(args.cost)
    else:
        params = cost.CostParams()
    if args.combine is not None:
        params.combine_mode = args.combine
    m = mask_mod.load_mask(args.mask)
    sched = scheduler.load_schedule(args.schedule)
    report = cost.simulate(sched, m, params)
    row = stats.collect_stats(
        sched, report, label=args.label, k=m.k_per_query
    )
    stats.emit_report([row], args.format, args.out)
    print(
        f"throughput gain: {report.throughput_gain_dense:.4f}x vs dense, "
        f"{report.throughput_gain_pruned:.4f}x vs pruned"
    )
    print(
        f"energy gain:     {report.energy_gain_dense:.4f}x vs dense, "
        f"{report.energy_gain_pruned:.4f}x vs pruned"
    )
    print(
        f"utilization {100 * report.utilization:.2f}%  "
        f"MAC reduction {100 * row.mac_reduction_fraction:.2f}%  "
        f"GLOB queries {100 * row.glob_q_fraction:.2f}%"
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    if not args.files:
        raise SpecError("no report files given")
    rows = []
    for path in args.files:
        _require_file(path, "report")
        rows.extend(stats.read_report(path))
    stats.emit_report(rows, "csv", args.out)
    print(f"wrote {args.out}: {len(rows)} rows from {len(args.files)} files")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    _require_file(args.schedule, "schedule")
    _require_file(args.mask, "mask")
    m = mask_mod.load_mask(args.mask)
    sched = scheduler.load_schedule(args.schedule)
    violations = oracle.validate_schedule(sched, m, max_n=args.max_n)
    for v in violations:
        print(f"{v.kind.value}: {v.message}")
    if violations:
        print(f"{len(violations)} violations")
        return EXIT_VALIDATION
    print("schedule verified: no violations")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sata",
        description="Schedule and cost-simulate TopK selective query-key attention.",
    )
    sub = parser.add_subparsers(
        dest="command", required=True, metavar="{gen,schedule,simulate,report}"
    )

    p = sub.add_parser("gen", help="generate a selective mask file")
    p.add_argument("--preset", choices=sorted(mask_mod.PRESETS))
    p.add_argument("--n", type=int, help="sequence length (tokens)")
    p.add_argument("--k", type=int, help="keys selected per query")
    p.add_argument("--heads", type=int, default=mask_mod.DEFAULT_N_HEADS)
    p.add_argument("--locality", default="uniform", help="uniform | block:B | banded:W")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("schedule", help="sort, classify, and schedule a mask")
    p.add_argument("mask")
    p.add_argument("--theta-fraction", type=float, default=0.5)
    p.add_argument("--s-h-init-fraction", type=float, default=0.5)
    p.add_argument("--s-h-min", type=int, default=1)
    p.add_argument("--tile", type=int, default=None, help="tile edge S_f (default: whole head)")
    p.add_argument("--zero-skip", action="store_true")
    p.add_argument("--seed-policy", default="fixed:0", help="fixed:IDX | random:SEED")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="evaluate a schedule against the baselines")
    p.add_argument("--schedule", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--cost", default=None, help="cost config JSON (default: unit costs)")
    p.add_argument("--combine", choices=cost.COMBINE_MODES, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--label", default="")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="merge simulation reports into one CSV")
    p.add_argument("files", nargs="*")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_report)

    # Debugging verb, intentionally absent from the subcommand metavar.
    p = sub.add_parser("verify")
    p.add_argument("--schedule", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--max-n", type=int, default=oracle.DEFAULT_MAX_N)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MaskFormatError, ScheduleFormatError, ReportFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
