"""Structural-hole detection over the KG and conversion of holes into crawl seeds."""
from __future__ import annotations

import enum
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import Iterable

from .crawler import tokens
from .kg import EntityType, KnowledgeGraph, RelationType, normalize_name

log = logging.getLogger(__name__)

MAD_SCALE = 1.4826
Z_THRESHOLD = -1.0
BRIDGE_SEVERITY = 0.5
DEFAULT_TOP_K = 3
SIGNAL_PATIENCE = 2


class GapKind(str, enum.Enum):
    DEGREE_ANOMALY = "degree_anomaly"
    MISSING_BRIDGE = "missing_bridge"
    GEOGRAPHIC_GAP = "geographic_gap"
    PREDICTED_LINK = "predicted_link"


_KIND_ORDER = {k: i for i, k in enumerate(GapKind)}


@dataclass
class GapSignal:
    kind: GapKind
    focus: tuple[str, ...]
    severity: float
    queries: list[str] = field(default_factory=list)
    created_iteration: int = 1
    keyword: str = ""
    idle_iterations: int = 0

    def __post_init__(self):
        if not 0.0 < self.severity <= 1.0:
            raise ValueError(f"severity {self.severity} outside (0, 1]")

    @property
    def sort_key(self) -> tuple:
        return (_KIND_ORDER[self.kind], tuple(f.lower() for f in self.focus))


@dataclass
class Priors:
    """Expected minimum counts: company-degree per sector, companies per location."""
    sectors: dict[str, int] = field(default_factory=dict)
    locations: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in (*self.sectors.values(), *self.locations.values())):
            raise ValueError("priors must be non-negative")

    def sector_prior(self, name: str) -> int | None:
        key = normalize_name(name)
        for k, v in self.sectors.items():
            if normalize_name(k) == key:
                return v
        return None

    @classmethod
    def load(cls, path: str | Path) -> "Priors":
        pri = cls()
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                target = pri.sectors if rec["kind"] == "sector" else pri.locations
                if rec["kind"] not in ("sector", "location"):
                    raise ValueError(f"unknown prior kind {rec['kind']!r}")
                target[rec["name"]] = int(rec["expected"])
        pri.__post_init__()
        return pri

    def dump(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for name, v in self.sectors.items():
                fh.write(json.dumps({"kind": "sector", "name": name, "expected": v}) + "\n")
            for name, v in self.locations.items():
                fh.write(json.dumps({"kind": "location", "name": name, "expected": v}) + "\n")


def _companies_by_target(graph: KnowledgeGraph, rel: RelationType) -> dict[int, set[int]]:
    out: dict[int, set[int]] = defaultdict(set)
    for r in graph.relations:
        if r.relation_type is rel and graph.entities[r.source_id].entity_type is EntityType.COMPANY:
            out[r.target_id].add(r.source_id)
    return out


def sector_company_degrees(graph: KnowledgeGraph) -> dict[int, int]:
    members = _companies_by_target(graph, RelationType.BELONGS_TO_SECTOR)
    return {s.id: len(members.get(s.id, ())) for s in graph.entities_of_type(EntityType.SECTOR)}


# -- query templates -----------------------------------------------------------------

def expand_queries(signal: GapSignal, graph: KnowledgeGraph | None = None,
                   keyword: str | None = None) -> list[str]:
    f = signal.focus
    if signal.kind is GapKind.DEGREE_ANOMALY:
        qs = [f"{f[0]} suppliers", f"{f[0]} manufacturers directory"]
    elif signal.kind is GapKind.MISSING_BRIDGE:
        qs = [f"suppliers to {f[1]}", f"{f[0]} customers"]
    elif signal.kind is GapKind.GEOGRAPHIC_GAP:
        qs = [f"{keyword or signal.keyword or 'industry'} companies in {f[0]}"]
    else:
        qs = [f"{f[0]} supplier {f[1]}"]
    return list(dict.fromkeys(qs))


def _finish(signals: list[GapSignal], keyword: str = "") -> list[GapSignal]:
    for s in signals:
        s.queries = expand_queries(s, keyword=keyword)
    return sorted(signals, key=lambda s: s.sort_key)


# -- detectors ------------------------------------------------------------------------

def detect_degree_anomalies(graph: KnowledgeGraph, priors: Priors | None = None,
                            iteration: int = 1) -> list[GapSignal]:
    priors = priors or Priors()
    degrees = sector_company_degrees(graph)
    if not degrees:
        return []
    values = list(degrees.values())
    med = median(values)
    mad = median(abs(v - med) for v in values)
    use_z = len(values) >= 3 and mad > 0
    signals = []
    for sid, deg in degrees.items():
        name = graph.entities[sid].name
        prior = priors.sector_prior(name)
        deficit = 0.0
        if prior is not None and deg < prior:
            deficit = prior - deg
        if use_z and (deg - med) / (MAD_SCALE * mad) < Z_THRESHOLD:
            deficit = max(deficit, med - deg)
        if deficit > 0:
            severity = min(1.0, deficit / max(prior or 0, med))
            signals.append(GapSignal(GapKind.DEGREE_ANOMALY, (name,), severity,
                                     created_iteration=iteration))
    return _finish(signals)


def _supplies_adjacency(graph: KnowledgeGraph) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = defaultdict(set)
    for r in graph.relations:
        if r.relation_type is RelationType.SUPPLIES_TO:
            adj[r.source_id].add(r.target_id)
    return adj


def _company_sectors(graph: KnowledgeGraph) -> dict[int, set[int]]:
    out: dict[int, set[int]] = defaultdict(set)
    for r in graph.relations:
        if (r.relation_type is RelationType.BELONGS_TO_SECTOR
                and graph.entities[r.source_id].entity_type is EntityType.COMPANY
                and graph.entities[r.target_id].entity_type is EntityType.SECTOR):
            out[r.source_id].add(r.target_id)
    return out


def detect_missing_bridges(graph: KnowledgeGraph, iteration: int = 1) -> list[GapSignal]:
    """Company pairs lacking a <=2-hop supplies_to path that their sectors elsewhere have."""
    adj = _supplies_adjacency(graph)
    if not adj:
        return []
    sectors = _company_sectors(graph)
    bridged: set[tuple[int, int]] = set()
    for a, mids in adj.items():
        for x in mids:
            for b in adj.get(x, ()):
                if b == a:
                    continue
                for s1 in sectors.get(a, ()):
                    for s2 in sectors.get(b, ()):
                        bridged.add((s1, s2))
    if not bridged:
        return []
    members: dict[int, set[int]] = defaultdict(set)
    for c, ss in sectors.items():
        for s in ss:
            members[s].add(c)
    pairs: set[tuple[int, int]] = set()
    for s1, s2 in bridged:
        for c1 in members[s1]:
            reach = set(adj.get(c1, ()))
            for x in list(reach):
                reach |= adj.get(x, set())
            for c3 in members[s2]:
                if c3 != c1 and c3 not in reach:
                    pairs.add((c1, c3))
    signals = [GapSignal(GapKind.MISSING_BRIDGE,
                         (graph.entities[c1].name, graph.entities[c3].name),
                         BRIDGE_SEVERITY, created_iteration=iteration)
               for c1, c3 in pairs]
    return _finish(signals)


def detect_geographic_gaps(graph: KnowledgeGraph, activity_prior: dict[str, int] | Iterable,
                           keyword: str = "", iteration: int = 1) -> list[GapSignal]:
    if not isinstance(activity_prior, dict):
        activity_prior = dict(activity_prior)
    located = _companies_by_target(graph, RelationType.LOCATED_IN)
    observed = {}
    for loc in graph.entities_of_type(EntityType.LOCATION):
        observed[loc.canonical_name] = len(located.get(loc.id, ()))
    signals = []
    for name, expected in activity_prior.items():
        have = observed.get(normalize_name(name), 0)
        if expected > 0 and have < expected:
            signals.append(GapSignal(GapKind.GEOGRAPHIC_GAP, (name,), (expected - have) / expected,
                                     created_iteration=iteration, keyword=keyword))
    return _finish(signals, keyword)


def predicted_link_signals(predictions, iteration: int = 1) -> list[GapSignal]:
    """Turn link predictions (objects with head/tail names and score) into signals.

    Severity is the model's sigmoid probability, clipped into (0, 1].
    """
    signals = []
    for p in predictions:
        sev = 1.0 / (1.0 + math.exp(-p.score))
        signals.append(GapSignal(GapKind.PREDICTED_LINK, (p.head_name, p.tail_name),
                                 min(1.0, max(sev, 1e-6)), created_iteration=iteration))
    return _finish(signals)


def detect_all(graph: KnowledgeGraph, priors: Priors | None = None, keyword: str = "",
               iteration: int = 1) -> list[GapSignal]:
    priors = priors or Priors()
    out = (detect_degree_anomalies(graph, priors, iteration)
           + detect_missing_bridges(graph, iteration)
           + detect_geographic_gaps(graph, priors.locations, keyword, iteration))
    return sorted(out, key=lambda s: s.sort_key)


# -- query resolution -------------------------------------------------------------------

class DirectoryIndex:
    """Keyword -> url inverted index standing in for directory search endpoints.

    Scoring is the summed inverse document frequency of distinct query tokens
    found on the page, so generic words count for little.
    """

    def __init__(self, documents: dict[str, str]):
        self.postings: dict[str, set[str]] = defaultdict(set)
        for url, text in documents.items():
            for tok in set(tokens(text)):
                self.postings[tok].add(url)
        self.n_docs = max(1, len(documents))

    def idf(self, tok: str) -> float:
        return math.log((1 + self.n_docs) / (1 + len(self.postings.get(tok, ()))))

    def search(self, query: str) -> list[tuple[str, float]]:
        scores: dict[str, float] = defaultdict(float)
        for tok in set(tokens(query)):
            w = self.idf(tok)
            for url in self.postings.get(tok, ()):
                scores[url] += w
        return sorted(((u, s) for u, s in scores.items() if s > 0), key=lambda x: (-x[1], x[0]))


def resolve_query_map(queries: Iterable[str], index: DirectoryIndex,
                      fetched: set[str] = frozenset(), k: int = DEFAULT_TOP_K) -> dict[str, list[str]]:
    """Map each query to its top-k unfetched urls; returns url -> originating queries."""
    seeds: dict[str, list[str]] = {}
    for q in queries:
        hits = [u for u, _ in index.search(q) if u not in fetched]
        if not hits:
            log.info("gap query %r matched nothing", q)
            continue
        for url in hits[:k]:
            seeds.setdefault(url, []).append(q)
    return seeds


def resolve_queries(queries: Iterable[str], index: DirectoryIndex,
                    fetched: set[str] = frozenset(), k: int = DEFAULT_TOP_K) -> list[str]:
    return list(resolve_query_map(queries, index, fetched, k))
