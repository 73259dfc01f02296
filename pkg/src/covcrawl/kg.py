"""Typed heterogeneous knowledge graph with schema enforcement.

Four node types (company, product, sector, location) and five relation
types. Relations are filtered on insertion by endpoint type constraints and
a confidence floor; the graph can be serialized to a line-delimited JSON
snapshot and read back.
"""
from __future__ import annotations

import copy
import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

RELATION_CONFIDENCE_MIN = 0.3

LEGAL_SUFFIXES = frozenset(
    ["inc", "inc.", "corp", "corp.", "corporation", "llc", "ltd", "ltd.",
     "co", "co.", "gmbh", "ag", "plc"]
)


class EntityType(str, enum.Enum):
    COMPANY = "COMPANY"
    PRODUCT = "PRODUCT"
    SECTOR = "SECTOR"
    LOCATION = "LOCATION"


class RelationType(str, enum.Enum):
    SUPPLIES_TO = "supplies_to"
    PARTNERS_WITH = "partners_with"
    PRODUCES = "produces"
    LOCATED_IN = "located_in"
    BELONGS_TO_SECTOR = "belongs_to_sector"


TYPE_CONSTRAINTS: dict[RelationType, tuple[EntityType, EntityType]] = {
    RelationType.SUPPLIES_TO: (EntityType.COMPANY, EntityType.COMPANY),
    RelationType.PARTNERS_WITH: (EntityType.COMPANY, EntityType.COMPANY),
    RelationType.PRODUCES: (EntityType.COMPANY, EntityType.PRODUCT),
    RelationType.LOCATED_IN: (EntityType.COMPANY, EntityType.LOCATION),
    RelationType.BELONGS_TO_SECTOR: (EntityType.COMPANY, EntityType.SECTOR),
}


class KGError(Exception):
    pass


class InvalidMention(KGError, ValueError):
    pass


class DanglingEndpoint(KGError, KeyError):
    pass


class SnapshotParseError(KGError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Verdict(str, enum.Enum):
    ACCEPTED = "accepted"
    TYPE_VIOLATION = "type_violation"
    LOW_CONFIDENCE = "low_confidence"
    DUPLICATE = "duplicate"

    @property
    def accepted(self) -> bool:
        return self is Verdict.ACCEPTED


_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Lowercase, collapse whitespace and drop trailing legal suffixes.

    >>> normalize_name("  Edwards   Vacuum Inc. ")
    'edwards vacuum'
    >>> normalize_name("Tokyo Seimitsu Co., Ltd.")
    'tokyo seimitsu'
    """
    tokens = _WS.sub(" ", name.strip().lower()).split(" ")
    tokens = [t for t in tokens if t]
    while len(tokens) > 1 and tokens[-1].rstrip(",") in LEGAL_SUFFIXES:
        tokens.pop()
    if tokens:
        tokens[-1] = tokens[-1].rstrip(",")
    return " ".join(tokens)


def clean_surface(name: str) -> str:
    return _WS.sub(" ", name.strip())


@dataclass
class Entity:
    id: int
    name: str
    entity_type: EntityType
    aliases: set[str] = field(default_factory=set)
    source_pages: set[str] = field(default_factory=set)
    first_seen_iteration: int = 1

    @property
    def canonical_name(self) -> str:
        return normalize_name(self.name)

    @property
    def key(self) -> tuple[str, EntityType]:
        return (self.canonical_name, self.entity_type)


@dataclass(frozen=True)
class Relation:
    source_id: int
    target_id: int
    relation_type: RelationType
    confidence: float
    source_page: str

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.source_id == self.target_id:
            raise ValueError("relation endpoints must differ")

    @property
    def dedup_key(self) -> tuple:
        return (self.source_id, self.target_id, self.relation_type, self.source_page)


class KnowledgeGraph:
    """Mutable typed graph; a single owner mutates it, readers may share it."""

    def __init__(self, iteration: int = 0):
        self.iteration = iteration
        self.entities: dict[int, Entity] = {}
        self.relations: list[Relation] = []
        # (normalized surface, type) -> id; includes normalized aliases
        self._index: dict[tuple[str, EntityType], int] = {}
        self._relation_keys: set[tuple] = set()
        self._next_id = 0

    def __len__(self) -> int:
        return len(self.entities)

    def copy(self) -> "KnowledgeGraph":
        return copy.deepcopy(self)

    # -- entities -----------------------------------------------------------

    def lookup(self, name: str, entity_type: EntityType) -> int | None:
        return self._index.get((normalize_name(name), EntityType(entity_type)))

    def upsert_entity(self, mention: str, entity_type: EntityType, page: str,
                      iteration: int) -> int:
        surface = clean_surface(mention)
        key = normalize_name(surface)
        if not key:
            raise InvalidMention(f"empty mention {mention!r}")
        entity_type = EntityType(entity_type)
        eid = self._index.get((key, entity_type))
        if eid is None:
            eid = self._next_id
            self._next_id += 1
            self.entities[eid] = Entity(eid, surface, entity_type, {surface}, {page}, iteration)
            self._index[(key, entity_type)] = eid
        else:
            ent = self.entities[eid]
            ent.aliases.add(surface)
            ent.source_pages.add(page)
            ent.first_seen_iteration = min(ent.first_seen_iteration, iteration)
        return eid

    def _insert_entity(self, ent: Entity) -> None:
        if ent.key in self._index:
            raise KGError(f"duplicate entity key {ent.key}")
        self.entities[ent.id] = ent
        self._index[ent.key] = ent.id
        for alias in ent.aliases:
            self._index.setdefault((normalize_name(alias), ent.entity_type), ent.id)
        self._next_id = max(self._next_id, ent.id + 1)

    def entities_of_type(self, entity_type: EntityType) -> list[Entity]:
        return [e for e in self.entities.values() if e.entity_type == entity_type]

    def companies(self) -> list[Entity]:
        return self.entities_of_type(EntityType.COMPANY)

    # -- relations ----------------------------------------------------------

    def add_relation(self, relation: Relation, enforce: bool = True) -> Verdict:
        """Store ``relation`` unless it violates the schema.

        With ``enforce=False`` type and confidence checks are skipped, which
        is how raw extractor output is retained for consistency auditing.
        Dangling endpoints raise :class:`DanglingEndpoint` either way.
        """
        for eid in (relation.source_id, relation.target_id):
            if eid not in self.entities:
                raise DanglingEndpoint(eid)
        if enforce:
            if not self.type_consistent(relation):
                return Verdict.TYPE_VIOLATION
            if relation.confidence < RELATION_CONFIDENCE_MIN:
                return Verdict.LOW_CONFIDENCE
        if relation.dedup_key in self._relation_keys:
            return Verdict.DUPLICATE
        self._relation_keys.add(relation.dedup_key)
        self.relations.append(relation)
        return Verdict.ACCEPTED

    def type_consistent(self, relation: Relation) -> bool:
        src_t, dst_t = TYPE_CONSTRAINTS[relation.relation_type]
        return (self.entities[relation.source_id].entity_type == src_t
                and self.entities[relation.target_id].entity_type == dst_t)

    def relations_of_type(self, relation_type: RelationType) -> list[Relation]:
        return [r for r in self.relations if r.relation_type == relation_type]

    def degree(self, eid: int) -> int:
        return sum((r.source_id == eid) + (r.target_id == eid) for r in self.relations)

    def degrees(self) -> dict[int, int]:
        deg = dict.fromkeys(self.entities, 0)
        for r in self.relations:
            deg[r.source_id] += 1
            deg[r.target_id] += 1
        return deg

    # -- whole-graph operations ---------------------------------------------

    def canonical_form(self) -> tuple:
        """Id-free representation; two graphs are equal iff these match."""
        ents = sorted(
            (e.canonical_name, e.entity_type.value, e.name, tuple(sorted(e.aliases)),
             tuple(sorted(e.source_pages)), e.first_seen_iteration)
            for e in self.entities.values()
        )
        rels = sorted(
            (self.entities[r.source_id].canonical_name,
             self.entities[r.source_id].entity_type.value,
             self.entities[r.target_id].canonical_name,
             self.entities[r.target_id].entity_type.value,
             r.relation_type.value, r.confidence, r.source_page)
            for r in self.relations
        )
        return (self.iteration, tuple(ents), tuple(rels))

    def equivalent(self, other: "KnowledgeGraph") -> bool:
        return self.canonical_form() == other.canonical_form()

    def audit(self) -> list[str]:
        """Return a list of invariant violations (empty when healthy)."""
        problems = []
        seen = {}
        for e in self.entities.values():
            if not e.canonical_name:
                problems.append(f"entity {e.id} has empty name")
            if not e.source_pages:
                problems.append(f"entity {e.name!r} has no source pages")
            if e.key in seen:
                problems.append(f"entities {seen[e.key]} and {e.id} share key {e.key}")
            seen[e.key] = e.id
        keys = set()
        for r in self.relations:
            if r.source_id not in self.entities or r.target_id not in self.entities:
                problems.append(f"dangling relation {r}")
                continue
            if r.dedup_key in keys:
                problems.append(f"duplicate relation {r}")
            keys.add(r.dedup_key)
        return problems


# -- type-consistency report ------------------------------------------------

@dataclass(frozen=True)
class ConsistencyRow:
    relation_type: str
    count: int
    consistent: int

    @property
    def percentage(self) -> float | None:
        return None if self.count == 0 else 100.0 * self.consistent / self.count

    def formatted(self) -> str:
        pct = self.percentage
        return "N/A" if pct is None else f"{pct:.1f}%"


@dataclass(frozen=True)
class ConsistencyReport:
    rows: tuple[ConsistencyRow, ...]

    @property
    def total(self) -> ConsistencyRow:
        return ConsistencyRow("total", sum(r.count for r in self.rows),
                              sum(r.consistent for r in self.rows))

    def row(self, relation_type: RelationType | str) -> ConsistencyRow:
        name = RelationType(relation_type).value
        return next(r for r in self.rows if r.relation_type == name)

    @classmethod
    def from_counts(cls, counts: dict) -> "ConsistencyReport":
        """Build from ``{relation_type: (count, consistent)}``; missing types are empty."""
        rows = []
        for rt in RelationType:
            n, ok = counts.get(rt, counts.get(rt.value, (0, 0)))
            if not 0 <= ok <= n:
                raise ValueError(f"{rt.value}: consistent {ok} not within [0, {n}]")
            rows.append(ConsistencyRow(rt.value, n, ok))
        return cls(tuple(rows))

    def as_records(self) -> list[dict]:
        out = []
        for r in (*self.rows, self.total):
            out.append({"relation_type": r.relation_type, "count": r.count,
                        "consistent": r.consistent, "percentage": r.percentage})
        return out


def type_consistency_report(graph: KnowledgeGraph) -> ConsistencyReport:
    counts = {rt: [0, 0] for rt in RelationType}
    for rel in graph.relations:
        c = counts[rel.relation_type]
        c[0] += 1
        c[1] += graph.type_consistent(rel)
    return ConsistencyReport.from_counts({k: tuple(v) for k, v in counts.items()})


# -- snapshot I/O -------------------------------------------------------------

def _graph_records(graph: KnowledgeGraph) -> Iterator[dict]:
    yield {"kind": "graph", "iteration": graph.iteration}
    for e in sorted(graph.entities.values(), key=lambda e: e.id):
        yield {"kind": "entity", "name": e.name, "type": e.entity_type.value,
               "aliases": sorted(e.aliases), "pages": sorted(e.source_pages),
               "iter": e.first_seen_iteration}
    for r in graph.relations:
        src, dst = graph.entities[r.source_id], graph.entities[r.target_id]
        yield {"kind": "relation", "src": src.name, "src_type": src.entity_type.value,
               "dst": dst.name, "dst_type": dst.entity_type.value,
               "rel": r.relation_type.value, "conf": r.confidence, "page": r.source_page}


def dump_graph(graph: KnowledgeGraph, fh: IO[str]) -> None:
    for rec in _graph_records(graph):
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def export_graph(graph: KnowledgeGraph, destination: str | Path) -> Path:
    path = Path(destination)
    with path.open("w", encoding="utf-8") as fh:
        dump_graph(graph, fh)
    return path


def load_graph(lines: Iterable[str]) -> KnowledgeGraph:
    """Parse snapshot lines; unknown record kinds are ignored."""
    graph = KnowledgeGraph()
    seen_relation = False
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SnapshotParseError(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise SnapshotParseError(lineno, "record is not an object")
        kind = rec.get("kind")
        try:
            if kind == "graph":
                graph.iteration = int(rec.get("iteration", 0))
            elif kind == "entity":
                if seen_relation:
                    raise SnapshotParseError(lineno, "entity after relations")
                name = clean_surface(rec["name"])
                if not normalize_name(name):
                    raise SnapshotParseError(lineno, "empty entity name")
                pages = set(rec.get("pages", []))
                if not pages:
                    raise SnapshotParseError(lineno, "entity without pages")
                ent = Entity(graph._next_id, name, EntityType(rec["type"]),
                             set(rec.get("aliases", [])) | {name}, pages,
                             int(rec.get("iter", 1)))
                try:
                    graph._insert_entity(ent)
                except KGError as exc:
                    raise SnapshotParseError(lineno, str(exc)) from None
            elif kind == "relation":
                seen_relation = True
                src = graph.lookup(rec["src"], rec["src_type"])
                dst = graph.lookup(rec["dst"], rec["dst_type"])
                if src is None or dst is None:
                    missing = rec["src"] if src is None else rec["dst"]
                    raise SnapshotParseError(lineno, f"relation references unknown entity {missing!r}")
                rel = Relation(src, dst, RelationType(rec["rel"]), float(rec["conf"]), rec["page"])
                graph.add_relation(rel, enforce=False)
        except SnapshotParseError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise SnapshotParseError(lineno, f"malformed {kind} record: {exc}") from None
    return graph


def import_graph(source: str | Path) -> KnowledgeGraph:
    with Path(source).open(encoding="utf-8") as fh:
        return load_graph(fh)
