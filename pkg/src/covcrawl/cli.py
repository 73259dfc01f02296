"""Command-line entry point; every subcommand delegates to a library call."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import coverage as cov
from .crawler import CrawlStrategy
from .kg import KGError, import_graph
from .pipeline import (ConfigError, PipelineConfig, comparison_configs, emit_reports,
                       reports_from_snapshots, run_comparison, run_pipeline)
from .simweb import WorldConfig, WorldConfigError, WorldTruth, generate_world

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_RUNTIME = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in ("strategy", "budget", "max_iterations", "seed", "world", "seed_file",
                 "priors_file", "cache_dir", "output_dir", "bootstrap_replicates"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if getattr(args, "no_early_stop", False):
        overrides["early_stop"] = False
    if getattr(args, "no_link_prediction", False):
        overrides["link_prediction"] = False
    return replace(cfg, **overrides) if overrides else cfg


def _strategy(text: str) -> CrawlStrategy:
    try:
        return CrawlStrategy(text.upper())
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown strategy {text!r}") from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--world", type=Path, help="simulated-web JSON (sidecars alongside)")
    p.add_argument("--seed-file", type=Path)
    p.add_argument("--priors-file", type=Path)
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--budget", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bootstrap-replicates", type=int)
    p.add_argument("--no-early-stop", action="store_true")
    p.add_argument("--no-link-prediction", action="store_true")


def cmd_gen_world(args) -> int:
    world = generate_world(WorldConfig(n_companies=args.companies, seed=args.seed,
                                       presence=args.presence))
    paths = world.save(args.out)
    print("\n".join(f"{k}: {v}" for k, v in paths.items()))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.output_dir or Path("covcrawl-out")
    res = run_pipeline(cfg, output_dir=out)
    for r in res.reports:
        print(json.dumps(r.breakdown_record()))
    if res.evaluation is not None:
        ev = res.evaluation
        print(f"discovered={ev.discovered} tp={ev.tp} precision={ev.precision:.3f} "
              f"recall={ev.recall:.3f} f1={ev.f1:.3f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    base = _config(args)
    rows, _ = run_comparison(comparison_configs(base, early_stop=base.early_stop and args.allow_early_stop))
    if args.out:
        emit_reports(args.out, comparison=rows, config=base)
    if args.json:
        print(json.dumps([r.record() for r in rows], indent=1))
    else:
        print(f"{'strategy':<16}{'disc':>6}{'tp':>5}{'P':>8}{'R':>8}{'F1':>8}{'pages':>7}")
        for r in rows:
            print(f"{r.strategy:<16}{r.discovered:>6}{r.tp:>5}{r.precision:>8.3f}{r.recall:>8.3f}"
                  f"{r.f1:>8.3f}{r.pages:>7}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    inc = cov.IncidenceMatrix.read_csv(args.incidence)
    est = cov.estimate(inc, args.replicates, args.level, args.seed)
    rec = {"S_obs": est.s_obs, "f1": est.f1, "f2": est.f2, "S_hat": est.s_hat,
           "C_hat": est.c_hat, "ci_low": est.ci_low, "ci_high": est.ci_high}
    if args.json:
        print(json.dumps(rec))
    else:
        print(f"S_obs {est.s_obs}  f1 {est.f1}  f2 {est.f2}")
        print(f"S_hat {round(est.s_hat)}  C_hat {100 * est.c_hat:.1f}%")
        if est.ci_low is not None:
            print(f"{int(args.level * 100)}% CI [{est.ci_low:.1f}, {est.ci_high:.1f}]")
    return EXIT_OK


def cmd_fit_curve(args) -> int:
    with Path(args.points).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    points = [(float(r[0]), float(r[1])) for r in rows]
    fit = cov.fit_accumulation(points)
    rec = {"S_max": fit.s_max, "K": fit.k, "rss": fit.rss, "at_upper_bound": fit.at_upper_bound,
           "linear_rss": cov.linear_rss(points), "affine_rss": cov.linear_rss(points, intercept=True)}
    if args.json:
        print(json.dumps(rec))
    else:
        print(f"S_max {fit.s_max:.1f}  K {fit.k:.2f}  RSS {fit.rss:.1f}")
    return EXIT_OK


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_report(args) -> int:
    truth = WorldTruth.load(args.truth) if args.truth else None
    res = reports_from_snapshots(args.snapshots, truth, args.replicates, args.seed)
    paths = emit_reports(args.out, runs=[res], retro=not args.no_retro)
    print("\n".join(str(p) for p in paths.values()))
    return EXIT_OK


def cmd_validate_kg(args) -> int:
    graph = import_graph(args.snapshot)
    problems = graph.audit()
    for p in problems:
        print(p)
    print(f"{len(graph)} entities, {len(graph.relations)} relations, {len(problems)} problems")
    return EXIT_OK if not problems else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covcrawl", description="Coverage-aware iterative supplier crawling")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-world", help="generate a synthetic web world")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--companies", type=int, default=200)
    p.add_argument("--presence", type=float, default=0.9)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_world)

    p = sub.add_parser("run", help="run one crawl strategy")
    _add_run_flags(p)
    p.add_argument("--strategy", type=_strategy, choices=list(CrawlStrategy),
                   metavar="{bfs,focused,wk_single_pass,wkw}")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all four strategies on one world")
    _add_run_flags(p)
    p.add_argument("--allow-early-stop", action="store_true",
                   help="let each strategy stop early instead of spending the full shared budget")
    p.add_argument("--out", type=Path)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("estimate", help="Chao1 + bootstrap CI on an incidence CSV")
    p.add_argument("--incidence", type=Path, required=True)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fit-curve", help="Michaelis-Menten fit on a (n, S) points CSV")
    p.add_argument("--points", type=Path, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit_curve)

    p = sub.add_parser("report", help="rebuild report tables from KG snapshots")
    p.add_argument("snapshots", nargs="+", type=Path)
    p.add_argument("--truth", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-retro", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate-kg", help="audit a KG snapshot file")
    p.add_argument("snapshot", type=Path)
    p.set_defaults(func=cmd_validate_kg)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, WorldConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KGError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
