"""The crawl -> extract -> filter -> resolve -> gap-analyse -> reseed loop and its baselines."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import coverage as cov
from .crawler import (CrawlBudget, Crawler, CrawlStrategy, Fetcher, FrontierItem, Origin,
                      PageCache, Politeness, PriorityContext, Seed, SimulatedBackend, Weights,
                      compute_priority, host_of, load_seeds, registered_domain, tokens)
from .extraction import ExtractionCache, ExtractorConfig, ExtractorKind, PageText, make_extractor
from .gaps import (SIGNAL_PATIENCE, DirectoryIndex, GapSignal, Priors, detect_all,
                   predicted_link_signals, resolve_query_map)
from .kg import (RELATION_CONFIDENCE_MIN, EntityType, KnowledgeGraph, Relation, RelationType,
                 export_graph, type_consistency_report)
from .linkpred import TrainConfig, TrainingError, predict_top_k, retro_eval, train
from .resolution import MERGE_THRESHOLD, resolve, write_merge_log
from .simweb import Evaluation, World, evaluate_against_truth

log = logging.getLogger(__name__)

CACHE_ENV = "COVCRAWL_CACHE_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    strategy: CrawlStrategy = CrawlStrategy.WKW
    max_iterations: int = 5
    budget: int = 213
    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3
    relation_threshold: float = RELATION_CONFIDENCE_MIN
    merge_threshold: float = MERGE_THRESHOLD
    tau: float = 0.85
    delta: int = 0
    consecutive: int = 2
    early_stop: bool = True
    gap_analysis: bool = True
    link_prediction: bool = True
    link_top_k: int = 20
    embedding_dim: int = 100
    embedding_epochs: int = 50
    embedding_lr: float = 0.01
    max_gap_seeds: int = 40
    query_top_k: int = 3
    domain_keyword: str = "semiconductor"
    bootstrap_replicates: int = 200
    incidence_mode: str = "source"  # or "iteration"
    per_domain_delay: float = 1.5
    max_concurrency: int = 10
    seed: int = 0
    backend: str = "simulated"  # or "live"
    world: Path | None = None
    seed_file: Path | None = None
    priors_file: Path | None = None
    cache_dir: Path | None = None
    output_dir: Path | None = None
    extractor: str = "fixture_rules"
    recorded_responses: Path | None = None

    def __post_init__(self):
        try:
            self.strategy = CrawlStrategy(self.strategy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("world", "seed_file", "priors_file", "cache_dir", "output_dir",
                     "recorded_responses"):
            v = getattr(self, name)
            if v is not None and not isinstance(v, Path):
                setattr(self, name, Path(v))
        if self.budget < 0:
            raise ConfigError("budget must be >= 0")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.backend not in ("simulated", "live"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.incidence_mode not in ("source", "iteration"):
            raise ConfigError(f"unknown incidence mode {self.incidence_mode!r}")
        try:
            self.weights
            self.stopping
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def weights(self) -> Weights:
        return Weights(self.alpha, self.beta, self.gamma)

    @property
    def stopping(self) -> cov.StoppingConfig:
        return cov.StoppingConfig(self.tau, self.delta, self.consecutive)

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(dim=self.embedding_dim, epochs=self.embedding_epochs, lr=self.embedding_lr)

    def resolved_cache_dir(self) -> Path | None:
        if self.cache_dir is not None:
            return self.cache_dir
        env = os.environ.get(CACHE_ENV)
        return Path(env) if env else None

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "PipelineConfig":
        """Build from a possibly nested mapping; section names are ignored."""
        flat: dict[str, Any] = {}

        def walk(d):
            for k, v in d.items():
                if isinstance(v, dict):
                    walk(v)
                else:
                    flat[k.replace("-", "_")] = v
        walk(data)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(flat) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**flat)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        cfg = cls.from_mapping(data)
        for name in ("world", "seed_file", "priors_file", "cache_dir", "output_dir",
                     "recorded_responses"):
            v = getattr(cfg, name)
            if v is not None and not v.is_absolute():
                setattr(cfg, name, (path.parent / v).resolve())
        return cfg

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, CrawlStrategy) else (str(v) if isinstance(v, Path) else v)
        return out


@dataclass
class IterationReport:
    iteration: int
    pages_fetched: int
    cumulative_pages: int
    new_entities: int
    cumulative_entities: int
    cumulative_companies: int
    cumulative_relations: int
    raw_company_mentions: int
    estimate: cov.CoverageEstimate | None
    c_true: float | None
    gap_signals: int
    gap_seeds: int
    stop: str
    elapsed_s: float

    def coverage_record(self) -> dict[str, Any]:
        e = self.estimate
        return {"iter": self.iteration,
                "observed": e.s_obs if e else 0,
                "S_hat": round(e.s_hat, 3) if e else None,
                "C_hat": round(e.c_hat, 6) if e else None,
                "C_true": None if self.c_true is None else round(self.c_true, 6),
                "error": (round(cov.coverage_error(e.c_hat, self.c_true), 6)
                          if e and self.c_true is not None else None),
                "f1": e.f1 if e else 0, "f2": e.f2 if e else 0}

    def breakdown_record(self) -> dict[str, Any]:
        return {"iter": self.iteration, "pages": self.pages_fetched,
                "cumulative_pages": self.cumulative_pages, "new_entities": self.new_entities,
                "entities": self.cumulative_entities, "companies": self.cumulative_companies,
                "relations": self.cumulative_relations,
                "raw_company_mentions": self.raw_company_mentions,
                "gap_signals": self.gap_signals, "gap_seeds": self.gap_seeds,
                "stop": self.stop, "elapsed_s": round(self.elapsed_s, 3)}


@dataclass
class RunResult:
    strategy: CrawlStrategy
    graph: KnowledgeGraph
    raw_graph: KnowledgeGraph
    snapshots: list[KnowledgeGraph]
    reports: list[IterationReport]
    evaluation: Evaluation | None
    pages_used: int
    fetched_urls: list[str]
    gap_query_urls: list[str] = field(default_factory=list)
    frontier_origins: list[set[Origin]] = field(default_factory=list)

    def discovered_company_names(self) -> set[str]:
        return {e.canonical_name for e in self.graph.companies()}


# -- setup ------------------------------------------------------------------------------

@dataclass
class Environment:
    """Everything a run reads from outside: backend, seeds, priors, search index, truth."""
    backend: Any
    seeds: list[Seed]
    priors: Priors
    index: DirectoryIndex | None
    truth: Any = None
    politeness: Politeness | None = None


def environment_from_world(world: World, config: PipelineConfig) -> Environment:
    pol = Politeness(config.per_domain_delay, virtual=True)
    backend = SimulatedBackend(world.simulated_web(), pol)
    return Environment(backend, list(world.seeds), world.priors,
                       DirectoryIndex(world.directory_documents()), world.truth, pol)


def build_environment(config: PipelineConfig) -> Environment:
    if config.backend == "simulated":
        if config.world is None:
            from .data import fixture_world_path
            world_path = fixture_world_path()
        else:
            world_path = config.world
        try:
            world = World.load(world_path)
        except OSError as exc:
            raise ConfigError(f"cannot read world {world_path}: {exc}") from exc
        env = environment_from_world(world, config)
    else:
        from .crawler import LiveBackend
        pol = Politeness(config.per_domain_delay)
        env = Environment(LiveBackend(politeness=pol), [], Priors(), None, None, pol)
    if config.seed_file is not None:
        try:
            env.seeds = load_seeds(config.seed_file)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read seed file {config.seed_file}: {exc}") from exc
    if config.priors_file is not None:
        try:
            env.priors = Priors.load(config.priors_file)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read priors {config.priors_file}: {exc}") from exc
    if not env.seeds:
        raise ConfigError("seed list is empty")
    return env


# -- the loop -------------------------------------------------------------------------------

def _ingest(page: PageText, extractor, kg: KnowledgeGraph, raw: KnowledgeGraph,
            iteration: int, threshold: float) -> None:
    result = extractor.extract(page)
    for g in (kg, raw):
        for m in result.mentions:
            g.upsert_entity(m.surface, m.entity_type, page.url, iteration)
    for t in result.triples:
        for g, enforce in ((raw, False), (kg, True)):
            rel = Relation(g.lookup(t.source, t.source_type), g.lookup(t.target, t.target_type),
                           t.relation_type, t.confidence, page.url)
            if enforce and t.confidence < threshold:
                continue
            g.add_relation(rel, enforce=enforce)


def _incidence(graph: KnowledgeGraph, mode: str, first_seen: dict | None = None) -> cov.IncidenceMatrix:
    by_source: dict[str, set] = {}
    for e in graph.entities.values():
        if mode == "iteration":
            keys = {str(it) for it in (first_seen or {}).get(e.key, {e.first_seen_iteration})}
        else:
            keys = {host_of(p) for p in e.source_pages if "://" in p}
        for k in keys:
            by_source.setdefault(k, set()).add(e.key)
    return cov.IncidenceMatrix.from_sets(by_source)


def _lexicon(graph: KnowledgeGraph, keyword: str) -> set[str]:
    lex = {keyword} if keyword else set()
    for ty in (EntityType.SECTOR, EntityType.PRODUCT):
        lex.update(e.canonical_name for e in graph.entities_of_type(ty))
    return lex


def _alias_tokens(graph: KnowledgeGraph) -> set[str]:
    out = set()
    for e in graph.companies():
        for a in e.aliases:
            out.update(tokens(a))
    return out


def _context(graph: KnowledgeGraph, fetched: set[str], signals: list[GapSignal],
             keyword: str) -> PriorityContext:
    return PriorityContext(lexicon=_lexicon(graph, keyword),
                           seen_domains={registered_domain(u) for u in fetched},
                           alias_tokens=_alias_tokens(graph), signals=list(signals))


def _signal_key(s: GapSignal) -> tuple:
    return (s.kind.value, tuple(f.lower() for f in s.focus))


def run_pipeline(config: PipelineConfig, env: Environment | None = None,
                 output_dir: str | Path | None = None) -> RunResult:
    """Run one strategy to completion; writes snapshots and reports when an output dir is set."""
    env = env or build_environment(config)
    out = Path(output_dir) if output_dir is not None else config.output_dir
    strategy = config.strategy
    budget = CrawlBudget(config.budget, per_domain_delay=config.per_domain_delay,
                         max_concurrency=config.max_concurrency)
    cache_dir = config.resolved_cache_dir()
    page_cache = PageCache(cache_dir / "pages") if cache_dir and config.backend == "live" else None
    fetcher = Fetcher(env.backend, page_cache, config.max_concurrency)
    crawler = Crawler(strategy, fetcher, budget)
    crawler.add_seeds(env.seeds, 1)
    extractor = ExtractionCache(
        make_extractor(ExtractorConfig(ExtractorKind(config.extractor),
                                       recorded_responses=config.recorded_responses)),
        directory=(cache_dir / "extraction") if cache_dir else None)

    raw = KnowledgeGraph()
    graph = KnowledgeGraph()
    snapshots: list[KnowledgeGraph] = []
    reports: list[IterationReport] = []
    coverage_hist: list[float] = []
    discovered_hist: list[int] = []
    active: dict[tuple, GapSignal] = {}
    expired: set[tuple] = set()
    gap_urls: list[str] = []
    gap_items: list[FrontierItem] = []
    origins: list[set[Origin]] = []
    first_seen: dict[tuple, set[int]] = {}
    wkw = strategy is CrawlStrategy.WKW
    cap_base = math.ceil(config.budget / config.max_iterations) if config.budget else 0
    carry = 0
    weights = config.weights
    if out is not None:
        for sub in ("reports", "kg_snapshots", "logs"):
            (out / sub).mkdir(parents=True, exist_ok=True)

    for t in range(1, config.max_iterations + 1):
        if budget.exhausted or not len(crawler.frontier):
            break
        started = time.perf_counter()
        origins.append({it.origin for it in crawler.frontier.items()})
        cap = budget.remaining
        if wkw and config.max_iterations > 1:
            cap = min(budget.remaining, cap_base + carry)
        before_entities = len(graph)
        crawl = crawler.run_iteration(t, cap)
        carry = max(0, cap - crawl.requests)
        # incremental resolution: new mentions join the resolved graph, and
        # entities reported in earlier iterations are never merged with each other
        established = set(graph.entities)
        graph = graph.copy()
        for page in crawl.pages:
            _ingest(page, extractor, graph, raw, t, config.relation_threshold)
        graph, merges = resolve(graph, config.merge_threshold, established)
        graph.iteration = raw.iteration = t
        snapshots.append(graph)
        for e in graph.entities.values():
            first_seen.setdefault(e.key, {e.first_seen_iteration})
        for page in crawl.pages:
            for eid in _page_entities(graph, page.url):
                first_seen[graph.entities[eid].key].add(t)

        estimate = None
        if len(graph):
            inc = _incidence(graph, config.incidence_mode, first_seen)
            estimate = cov.estimate(inc, config.bootstrap_replicates, seed=config.seed + t)
        c_true = None
        if env.truth is not None:
            ev = evaluate_against_truth(graph, env.truth)
            c_true = ev.recall
        if estimate is not None:
            coverage_hist.append(estimate.c_hat)
        discovered_hist.append(len(graph))
        decision = cov.StopDecision.CONTINUE
        if config.early_stop and estimate is not None:
            decision = cov.should_stop(coverage_hist, discovered_hist, config.stopping)

        # feedback: gap analysis and reseeding only for the full loop
        n_signals = n_seeds = 0
        last = t == config.max_iterations or budget.exhausted or decision is not cov.StopDecision.CONTINUE
        if wkw and not last:
            signals: list[GapSignal] = []
            if config.gap_analysis:
                signals = detect_all(graph, env.priors, config.domain_keyword, t)
                _age_signals(active, expired, crawl.pages, graph, gap_items, t)
                if config.link_prediction and graph.relations_of_type(RelationType.SUPPLIES_TO):
                    try:
                        model = train(graph, seed=config.seed, config=config.train_config)
                        signals += predicted_link_signals(
                            predict_top_k(model, graph, config.link_top_k), t)
                    except TrainingError as exc:
                        log.warning("link prediction skipped: %s", exc)
                signals = [s for s in signals if _signal_key(s) not in expired]
                for s in signals:
                    active.setdefault(_signal_key(s), s)
            n_signals = len(signals)
            ctx = _context(graph, crawler.fetched, list(active.values()), config.domain_keyword)
            crawler.score_link = lambda page, url, anchor, y, it, _c=ctx: compute_priority(
                url, _c, weights, anchor, Origin.OUTLINK, (), it)

            def rescore(item: FrontierItem, _c=ctx) -> FrontierItem:
                new = compute_priority(item.url, _c, weights, item.anchor, item.origin,
                                       item.queries, item.discovered_iteration)
                new.source_type, new.parent = item.source_type, item.parent
                return new
            crawler.frontier.rescore(rescore, fifo=False)
            if signals and env.index is not None:
                n_seeds = _reseed(crawler, env.index, signals, ctx, weights, config, t + 1,
                                  gap_items)
                gap_urls.extend(it.url for it in gap_items[len(gap_items) - n_seeds:])

        elapsed = time.perf_counter() - started
        reports.append(IterationReport(
            t, crawl.requests, budget.pages_used, len(graph) - before_entities, len(graph),
            len(graph.companies()), len(graph.relations), len(raw.companies()), estimate, c_true,
            n_signals, n_seeds, decision.value, elapsed))
        if out is not None:
            export_graph(graph, out / "kg_snapshots" / f"G_{t}.jsonl")
            write_merge_log(merges, out / "logs" / f"merges_{t}.jsonl")
        log.info("iteration %d: %d pages, %d entities, decision %s", t, crawl.requests,
                 len(graph), decision.value)
        if decision is not cov.StopDecision.CONTINUE:
            break

    evaluation = evaluate_against_truth(graph, env.truth) if env.truth is not None else None
    result = RunResult(strategy, graph, raw, snapshots, reports, evaluation, budget.pages_used,
                       sorted(crawler.fetched), gap_urls, origins)
    if out is not None:
        emit_reports(out / "reports", runs=[result], config=config)
    return result


def _page_entities(graph: KnowledgeGraph, url: str) -> list[int]:
    return [eid for eid, e in graph.entities.items() if url in e.source_pages]


def _age_signals(active: dict, expired: set, pages: list[PageText], graph: KnowledgeGraph,
                 gap_items: list[FrontierItem], iteration: int) -> None:
    """Expire signals whose queries yielded no new entity for SIGNAL_PATIENCE iterations."""
    fetched_now = {p.url for p in pages}
    productive: set[str] = set()
    for item in gap_items:
        if item.url in fetched_now and any(
                graph.entities[eid].first_seen_iteration == iteration
                for eid in _page_entities(graph, item.url)):
            productive |= set(item.queries)
    for key, sig in list(active.items()):
        if productive & set(sig.queries):
            sig.idle_iterations = 0
        else:
            sig.idle_iterations += 1
        if sig.idle_iterations >= SIGNAL_PATIENCE:
            expired.add(key)
            del active[key]


def _reseed(crawler: Crawler, index: DirectoryIndex, signals: list[GapSignal],
            ctx: PriorityContext, weights: Weights, config: PipelineConfig, next_iter: int,
            gap_items: list[FrontierItem]) -> int:
    ordered = sorted(signals, key=lambda s: (-s.severity, s.sort_key))
    queries = list(dict.fromkeys(q for s in ordered for q in s.queries))
    hits = resolve_query_map(queries, index, crawler.fetched, config.query_top_k)
    added = 0
    for url, qs in hits.items():
        if added >= config.max_gap_seeds:
            break
        item = compute_priority(url, ctx, weights, " ".join(qs), Origin.GAP_QUERY, qs, next_iter)
        if crawler.frontier.promote(item):
            gap_items.append(item)
            added += 1
    return added


# -- comparisons ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    strategy: str
    discovered: int
    tp: int
    precision: float
    recall: float
    f1: float
    pages: int
    entities: int
    planted_found: int

    def record(self) -> dict[str, Any]:
        d = asdict(self)
        for k in ("precision", "recall", "f1"):
            d[k] = round(d[k], 6)
        return d


def run_comparison(configs: Sequence[PipelineConfig], world: World | None = None,
                   env_factory=None) -> tuple[list[ComparisonRow], list[RunResult]]:
    """Run every config against the same world; budgets must agree."""
    if not configs:
        raise ConfigError("no strategies to compare")
    budgets = {c.budget for c in configs}
    if len(budgets) != 1:
        raise ConfigError(f"mismatched budgets across strategies: {sorted(budgets)}")
    rows, runs = [], []
    for cfg in configs:
        if cfg.budget == 0:
            rows.append(ComparisonRow(cfg.strategy.value, 0, 0, 0.0, 0.0, 0.0, 0, 0, 0))
            continue
        env = env_factory(cfg) if env_factory else (
            environment_from_world(world, cfg) if world is not None else build_environment(cfg))
        res = run_pipeline(cfg, env, output_dir=None)
        ev = res.evaluation or Evaluation(len(res.graph.companies()), 0, 0)
        planted = 0
        if env.truth is not None:
            planted = len(res.discovered_company_names() & env.truth.planted_names())
        rows.append(ComparisonRow(cfg.strategy.value, ev.discovered, ev.tp, ev.precision, ev.recall,
                                  ev.f1, res.pages_used, len(res.graph), planted))
        runs.append(res)
    return rows, runs


def comparison_configs(base: PipelineConfig, early_stop: bool = False) -> list[PipelineConfig]:
    """One config per strategy sharing every other setting."""
    return [replace(base, strategy=s, early_stop=early_stop) for s in CrawlStrategy]


# -- reports ------------------------------------------------------------------------------------

COVERAGE_COLUMNS = ["iter", "observed", "S_hat", "C_hat", "C_true", "error", "f1", "f2"]
BREAKDOWN_COLUMNS = ["iter", "pages", "cumulative_pages", "new_entities", "entities", "companies",
                     "relations", "raw_company_mentions", "gap_signals", "gap_seeds", "stop",
                     "elapsed_s"]
COMPARISON_COLUMNS = [f.name for f in fields(ComparisonRow)]
CONSISTENCY_COLUMNS = ["relation_type", "count", "consistent", "percentage"]
RETRO_COLUMNS = ["iteration", "n_entities", "loss", "n_predictions", "link_confirmation_rate",
                 "neighborhood_growth_rate"]
CURVE_COLUMNS = ["iter", "pages", "entities", "companies"]
ACCUMULATION_COLUMNS = ["pages", "observed", "fitted"]


def _write_table(base: Path, columns: list[str], rows: list[dict], extra: dict | None = None) -> None:
    try:
        with base.with_suffix(".csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=columns)
            w.writeheader()
            for r in rows:
                w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
        payload = {"columns": columns, "rows": rows}
        if extra:
            payload.update(extra)
        base.with_suffix(".json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                                             encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report {base}: {exc}") from exc


def emit_reports(destination: str | Path, runs: Sequence[RunResult] = (),
                 comparison: Sequence[ComparisonRow] = (), config: PipelineConfig | None = None,
                 retro: bool | None = None) -> dict[str, Path]:
    """Write every report table as CSV + JSON; tables without data get headers only."""
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    main = runs[0] if runs else None
    reports = main.reports if main else []
    out = {}

    def table(name, columns, rows, extra=None):
        _write_table(dest / name, columns, rows, extra)
        out[name] = dest / f"{name}.csv"

    table("comparison", COMPARISON_COLUMNS, [r.record() for r in comparison])
    table("coverage", COVERAGE_COLUMNS, [r.coverage_record() for r in reports])
    table("iterations", BREAKDOWN_COLUMNS, [r.breakdown_record() for r in reports])
    cons = type_consistency_report(main.raw_graph).as_records() if main else []
    table("type_consistency", CONSISTENCY_COLUMNS, cons)

    retro_rows = []
    do_retro = retro if retro is not None else (config.link_prediction if config else True)
    if main and do_retro and len(main.snapshots) >= 2:
        tc = config.train_config if config else TrainConfig()
        k = config.link_top_k if config else 20
        seed = config.seed if config else 0
        retro_rows = [asdict(r) for r in retro_eval(main.snapshots, seed=seed, k=k, config=tc)]
        for r in retro_rows:
            if isinstance(r["loss"], float) and math.isnan(r["loss"]):
                r["loss"] = None
    table("retro_eval", RETRO_COLUMNS, retro_rows)

    curve = [{"iter": r.iteration, "pages": r.cumulative_pages, "entities": r.cumulative_entities,
              "companies": r.cumulative_companies} for r in reports]
    table("discovery_curve", CURVE_COLUMNS, curve)

    acc_rows, fit_info = [], {"fit": None}
    points = [(c["pages"], c["entities"]) for c in curve if c["pages"] > 0]
    points = [p for i, p in enumerate(points) if i == 0 or p[0] > points[i - 1][0]]
    if len(points) >= 3:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                fit = cov.fit_accumulation(points)
            fit_info = {"fit": {"S_max": fit.s_max, "K": fit.k, "rss": fit.rss,
                                "at_upper_bound": fit.at_upper_bound or bool(caught),
                                "linear_rss": cov.linear_rss(points)}}
            acc_rows = [{"pages": n, "observed": s, "fitted": round(float(fit.predict(n)), 3)}
                        for n, s in points]
        except cov.FitError as exc:
            log.info("accumulation fit skipped: %s", exc)
    table("accumulation", ACCUMULATION_COLUMNS, acc_rows, fit_info)
    if config is not None:
        (dest / "config.json").write_text(json.dumps(config.to_dict(), indent=1, sort_keys=True) + "\n",
                                          encoding="utf-8")
    return out


def read_table(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def reports_from_snapshots(paths: Sequence[str | Path], truth=None, replicates: int = 200,
                           seed: int = 0) -> RunResult:
    """Rebuild a RunResult (coverage and counts) from saved G_t snapshot files."""
    from .kg import import_graph
    snaps = [import_graph(p) for p in paths]
    reports = []
    prev = 0
    for t, g in enumerate(snaps, start=1):
        est = cov.estimate(_incidence(g, "source"), replicates, seed=seed + t) if len(g) else None
        c_true = evaluate_against_truth(g, truth).recall if truth is not None else None
        reports.append(IterationReport(t, 0, 0, len(g) - prev, len(g), len(g.companies()),
                                       len(g.relations), len(g.companies()), est, c_true, 0, 0,
                                       "continue", 0.0))
        prev = len(g)
    final = snaps[-1] if snaps else KnowledgeGraph()
    ev = evaluate_against_truth(final, truth) if truth is not None else None
    return RunResult(CrawlStrategy.WKW, final, final, snaps, reports, ev, 0, [])
