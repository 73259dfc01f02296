"""Entity resolution: prefix blocking plus Jaro-Winkler and attribute overlap."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable

from .kg import EntityType, KnowledgeGraph, Relation, RelationType, normalize_name

MERGE_THRESHOLD = 0.85
NAME_WEIGHT = 0.7
ATTRIBUTE_WEIGHT = 0.3
BLOCK_PREFIX = 4


def jaro(a: str, b: str) -> float:
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(0, max(len(a), len(b)) // 2 - 1)
    a_hit = [False] * len(a)
    b_hit = [False] * len(b)
    matches = 0
    for i, ch in enumerate(a):
        for j in range(max(0, i - window), min(len(b), i + window + 1)):
            if not b_hit[j] and b[j] == ch:
                a_hit[i] = b_hit[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    a_seq = [c for c, h in zip(a, a_hit) if h]
    b_seq = [c for c, h in zip(b, b_hit) if h]
    half_transpositions = sum(x != y for x, y in zip(a_seq, b_seq))
    m = float(matches)
    return (m / len(a) + m / len(b) + (m - half_transpositions / 2) / m) / 3


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    """Jaro-Winkler similarity in [0, 1].

    Both strings empty gives 1.0, exactly one empty gives 0.0.
    """
    sim = jaro(a, b)
    prefix = 0
    for x, y in zip(a[:max_prefix], b[:max_prefix]):
        if x != y:
            break
        prefix += 1
    return sim + prefix * prefix_scale * (1.0 - sim)


@dataclass(frozen=True)
class MatchScore:
    name_similarity: float
    attribute_overlap: float

    @property
    def combined(self) -> float:
        return NAME_WEIGHT * self.name_similarity + ATTRIBUTE_WEIGHT * self.attribute_overlap


@dataclass
class Block:
    key: str
    members: list[int]


@dataclass(frozen=True)
class MergeRecord:
    survivor: str
    absorbed: str
    score: float


def block_key(name: str) -> str:
    return normalize_name(name)[:BLOCK_PREFIX]


def build_blocks(graph: KnowledgeGraph, entity_ids: Iterable[int] | None = None) -> list[Block]:
    """Partition company entities by the first four characters of their normalized name."""
    ids = entity_ids if entity_ids is not None else [e.id for e in graph.companies()]
    groups: dict[str, list[int]] = defaultdict(list)
    for eid in ids:
        ent = graph.entities[eid]
        if ent.entity_type is not EntityType.COMPANY:
            raise ValueError(f"blocking applies to companies only, got {ent.entity_type}")
        groups[block_key(ent.name)].append(eid)
    return [Block(k, sorted(v)) for k, v in sorted(groups.items())]


def _attributes(graph: KnowledgeGraph) -> dict[int, frozenset[str]]:
    attrs: dict[int, set[str]] = defaultdict(set)
    for r in graph.relations:
        if r.relation_type in (RelationType.PRODUCES, RelationType.LOCATED_IN):
            target = graph.entities[r.target_id]
            attrs[r.source_id].add(f"{target.entity_type.value}:{target.canonical_name}")
    return {k: frozenset(v) for k, v in attrs.items()}


def match_score(graph: KnowledgeGraph, a: int, b: int,
                attrs: dict[int, frozenset[str]] | None = None) -> MatchScore:
    attrs = attrs if attrs is not None else _attributes(graph)
    ea, eb = graph.entities[a], graph.entities[b]
    name_sim = jaro_winkler(ea.canonical_name, eb.canonical_name)
    sa, sb = attrs.get(a, frozenset()), attrs.get(b, frozenset())
    union = sa | sb
    overlap = len(sa & sb) / len(union) if union else 0.0
    return MatchScore(name_sim, overlap)


class _UnionFind:
    def __init__(self, items, established=()):
        self.parent = {x: x for x in items}
        self.established = {x: x in established for x in self.parent}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        """Join two clusters unless both already hold an established entity."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if self.established[ra] and self.established[rb]:
            return False
        lo, hi = min(ra, rb), max(ra, rb)
        self.parent[hi] = lo
        self.established[lo] = self.established[ra] or self.established[rb]
        return True


def _survivor_order(graph: KnowledgeGraph, eid: int) -> tuple:
    name = graph.entities[eid].name
    return (len(name), name, eid)


def _candidate_pairs(graph: KnowledgeGraph, threshold: float) -> list[tuple[float, int, int]]:
    attrs = _attributes(graph)
    pairs = []
    # exact normalized-name equality merges every entity type
    by_key: dict[tuple, list[int]] = defaultdict(list)
    for e in graph.entities.values():
        by_key[e.key].append(e.id)
    for ids in by_key.values():
        pairs.extend((1.0, ids[0], other) for other in ids[1:])
    for block in build_blocks(graph):
        for a, b in combinations(block.members, 2):
            if graph.entities[a].canonical_name == graph.entities[b].canonical_name:
                pairs.append((1.0, a, b))
                continue
            combined = match_score(graph, a, b, attrs).combined
            if combined > threshold:
                pairs.append((combined, a, b))
    return sorted(pairs, key=lambda p: (-p[0], p[1], p[2]))


def _merge_once(graph: KnowledgeGraph, threshold: float, established: set[int]
                ) -> tuple[list[MergeRecord], dict[int, int]]:
    uf = _UnionFind(graph.entities, established)
    scores: dict[frozenset, float] = {}
    for score, a, b in _candidate_pairs(graph, threshold):
        if uf.union(a, b):
            scores[frozenset((a, b))] = score

    clusters: dict[int, list[int]] = defaultdict(list)
    for eid in graph.entities:
        clusters[uf.find(eid)].append(eid)

    log = []
    remap = {}
    for members in clusters.values():
        if len(members) == 1:
            continue
        survivor = min(members, key=lambda m: _survivor_order(graph, m))
        keep = graph.entities[survivor]
        for m in sorted(members, key=lambda m: _survivor_order(graph, m)):
            if m == survivor:
                continue
            gone = graph.entities[m]
            keep.aliases |= gone.aliases
            keep.source_pages |= gone.source_pages
            keep.first_seen_iteration = min(keep.first_seen_iteration, gone.first_seen_iteration)
            remap[m] = survivor
            score = max((s for pair, s in scores.items() if m in pair), default=threshold)
            log.append(MergeRecord(keep.name, gone.name, round(score, 6)))
    if not remap:
        return log, remap

    for gone in remap:
        del graph.entities[gone]
    graph._index = {k: remap.get(v, v) for k, v in graph._index.items()}
    old = graph.relations
    graph.relations, graph._relation_keys = [], set()
    for r in old:
        src, dst = remap.get(r.source_id, r.source_id), remap.get(r.target_id, r.target_id)
        if src == dst:
            continue
        graph.add_relation(Relation(src, dst, r.relation_type, r.confidence, r.source_page),
                           enforce=False)
    return log, remap


def resolve(graph: KnowledgeGraph, threshold: float = MERGE_THRESHOLD,
            established: Iterable[int] = ()) -> tuple[KnowledgeGraph, list[MergeRecord]]:
    """Merge duplicate entities; returns a new graph and the merge log.

    Merging repeats until no pair crosses the threshold, since a merge can
    enlarge attribute sets and enable further matches. Entities listed in
    ``established`` were reported earlier: no two of them are ever merged,
    which keeps incremental entity counts from shrinking.
    """
    out = graph.copy()
    fixed = {eid for eid in established if eid in out.entities}
    log: list[MergeRecord] = []
    while True:
        step, remap = _merge_once(out, threshold, fixed)
        if not step:
            return out, log
        log.extend(step)
        fixed = {remap.get(eid, eid) for eid in fixed}


def write_merge_log(log: list[MergeRecord], destination: str | Path) -> None:
    with Path(destination).open("w", encoding="utf-8") as fh:
        for rec in log:
            fh.write(json.dumps({"survivor": rec.survivor, "absorbed": rec.absorbed,
                                 "score": rec.score}) + "\n")
