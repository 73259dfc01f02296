"""Page -> (mentions, triples) extraction behind a single-call interface.

The rule extractor understands two surface forms:

* marker blocks: ``[[COMPANY: Edwards Vacuum]]`` and
  ``[[produces: Edwards Vacuum -> dry pumps :: 0.9]]`` (the ``:: conf`` part
  is optional for both kinds);
* plain sentences such as ``Acme manufactures dry pumps.`` or
  ``Acme operates in the vacuum systems sector.``

A recorded-response extractor replays stored model outputs keyed by url and
text hash, so a real LLM pipeline can be replayed offline.
"""
from __future__ import annotations

import enum
import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Callable, Protocol

from .kg import TYPE_CONSTRAINTS, EntityType, RelationType, clean_surface

MARKER_DEFAULT_CONFIDENCE = 0.8
SENTENCE_DEFAULT_CONFIDENCE = 0.7
DEFAULT_CACHE_TTL = timedelta(days=30)


class ExtractorUnavailable(RuntimeError):
    """Raised when an extractor cannot answer (e.g. no recorded response)."""


@dataclass
class PageText:
    url: str
    text: str
    anchor_texts: list[tuple[str, str]] = field(default_factory=list)
    fetch_iteration: int = 1

    def __post_init__(self):
        if not self.url:
            raise ValueError("page url must be nonempty")

    @property
    def text_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def cache_key(self) -> str:
        return f"{self.url}#{self.text_hash}"


@dataclass(frozen=True)
class Mention:
    surface: str
    entity_type: EntityType
    confidence: float


@dataclass(frozen=True)
class Triple:
    source: str
    relation_type: RelationType
    target: str
    confidence: float
    source_type: EntityType
    target_type: EntityType


@dataclass
class ExtractionResult:
    mentions: list[Mention] = field(default_factory=list)
    triples: list[Triple] = field(default_factory=list)

    def check(self) -> None:
        """Raise ``AssertionError`` if the result breaks endpoint closure or ranges."""
        present = {(m.surface, m.entity_type) for m in self.mentions}
        for m in self.mentions:
            assert 0.0 <= m.confidence <= 1.0, m
        for t in self.triples:
            assert 0.0 <= t.confidence <= 1.0, t
            assert (t.source, t.source_type) in present, t
            assert (t.target, t.target_type) in present, t

    def to_dict(self) -> dict:
        return {
            "mentions": [[m.surface, m.entity_type.value, m.confidence] for m in self.mentions],
            "triples": [[t.source, t.relation_type.value, t.target, t.confidence,
                         t.source_type.value, t.target_type.value] for t in self.triples],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionResult":
        mentions = [Mention(s, EntityType(ty), float(c)) for s, ty, c in data["mentions"]]
        triples = []
        for row in data["triples"]:
            src, rel, dst, conf = row[:4]
            rel = RelationType(rel)
            if len(row) >= 6:
                st, dt = EntityType(row[4]), EntityType(row[5])
            else:
                st, dt = TYPE_CONSTRAINTS[rel]
            triples.append(Triple(src, rel, dst, float(conf), st, dt))
        return _close_endpoints(mentions, triples)


class ExtractorKind(str, enum.Enum):
    FIXTURE_RULES = "fixture_rules"
    EXTERNAL_LLM_STUB = "external_llm_stub"


@dataclass
class ExtractorConfig:
    kind: ExtractorKind = ExtractorKind.FIXTURE_RULES
    cache_ttl: timedelta = DEFAULT_CACHE_TTL
    recorded_responses: Path | None = None
    entity_types: tuple[EntityType, ...] = tuple(EntityType)
    relation_types: tuple[RelationType, ...] = tuple(RelationType)

    def __post_init__(self):
        self.kind = ExtractorKind(self.kind)
        if set(self.entity_types) != set(EntityType) or set(self.relation_types) != set(RelationType):
            raise ValueError("extraction schema is fixed to the four entity and five relation types")


class Extractor(Protocol):
    def extract(self, page: PageText) -> ExtractionResult: ...


# -- rule extractor -----------------------------------------------------------

_MARKER = re.compile(r"\[\[\s*([A-Za-z_]+)\s*:\s*(.*?)\s*\]\]", re.S)
_SENTENCE_SPLIT = re.compile(r"(?<=[a-z0-9)])[.!?]\s+(?=[A-Z])|\n+")
_PATTERNS: list[tuple[re.Pattern, RelationType]] = [
    (re.compile(r"^(?P<x>.+?) operates in the (?P<y>.+?) sector$"), RelationType.BELONGS_TO_SECTOR),
    (re.compile(r"^(?P<x>.+?) is located in (?P<y>.+)$"), RelationType.LOCATED_IN),
    (re.compile(r"^(?P<x>.+?) partners with (?P<y>.+)$"), RelationType.PARTNERS_WITH),
    (re.compile(r"^(?P<x>.+?) manufactures (?P<y>.+)$"), RelationType.PRODUCES),
    (re.compile(r"^(?P<x>.+?) supplies (?P<y>.+)$"), RelationType.SUPPLIES_TO),
]
_ENTITY_TAGS = {t.value: t for t in EntityType}
_RELATION_TAGS = {t.value: t for t in RelationType}


def _split_confidence(body: str, default: float) -> tuple[str, float]:
    if "::" in body:
        body, conf = body.rsplit("::", 1)
        return body.strip(), min(1.0, max(0.0, float(conf)))
    return body.strip(), default


def _close_endpoints(mentions: list[Mention], triples: list[Triple]) -> ExtractionResult:
    out: list[Mention] = []
    seen = set()
    for m in mentions:
        if (m.surface, m.entity_type) not in seen:
            seen.add((m.surface, m.entity_type))
            out.append(m)
    for t in triples:
        for surface, ty in ((t.source, t.source_type), (t.target, t.target_type)):
            if (surface, ty) not in seen:
                seen.add((surface, ty))
                out.append(Mention(surface, ty, t.confidence))
    return ExtractionResult(out, list(dict.fromkeys(triples)))


class RuleExtractor:
    """Deterministic extractor for fixture and simulated pages."""

    def extract(self, page: PageText) -> ExtractionResult:
        mentions: list[Mention] = []
        typed: dict[str, EntityType] = {}
        pending: list[tuple[str, RelationType, str, float]] = []

        for tag, body in _MARKER.findall(page.text):
            if tag.upper() in _ENTITY_TAGS:
                name, conf = _split_confidence(body, MARKER_DEFAULT_CONFIDENCE)
                name = clean_surface(name)
                if name:
                    ty = _ENTITY_TAGS[tag.upper()]
                    mentions.append(Mention(name, ty, conf))
                    typed.setdefault(name, ty)
            elif tag.lower() in _RELATION_TAGS:
                rest, conf = _split_confidence(body, MARKER_DEFAULT_CONFIDENCE)
                if "->" not in rest:
                    continue
                src, dst = (clean_surface(p) for p in rest.split("->", 1))
                if src and dst and src != dst:
                    pending.append((src, _RELATION_TAGS[tag.lower()], dst, conf))

        plain = _MARKER.sub(" ", page.text)
        for sentence in _SENTENCE_SPLIT.split(plain):
            sentence = clean_surface(sentence).rstrip(".")
            if not sentence:
                continue
            for pattern, rel in _PATTERNS:
                m = pattern.match(sentence)
                if m:
                    src, dst = clean_surface(m["x"]), clean_surface(m["y"])
                    if src and dst and src != dst:
                        pending.append((src, rel, dst, SENTENCE_DEFAULT_CONFIDENCE))
                    break

        # explicitly marked types take precedence over the schema default
        triples = []
        for src, rel, dst, conf in pending:
            default_src, default_dst = TYPE_CONSTRAINTS[rel]
            triples.append(Triple(src, rel, dst, conf, typed.get(src, default_src),
                                  typed.get(dst, default_dst)))
        return _close_endpoints(mentions, triples)


class RecordedExtractor:
    """Replays stored responses from a JSONL file of ``{"key", "result"}`` records."""

    def __init__(self, path: str | Path):
        self.responses: dict[str, dict] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    self.responses[rec["key"]] = rec["result"]

    def extract(self, page: PageText) -> ExtractionResult:
        if not page.text:
            return ExtractionResult()
        try:
            data = self.responses[page.cache_key]
        except KeyError:
            raise ExtractorUnavailable(f"no recorded response for {page.url}") from None
        return ExtractionResult.from_dict(data)


def make_extractor(config: ExtractorConfig) -> Extractor:
    if config.kind is ExtractorKind.FIXTURE_RULES:
        return RuleExtractor()
    if config.recorded_responses is None:
        raise ExtractorUnavailable("external_llm_stub needs a recorded-response file")
    return RecordedExtractor(config.recorded_responses)


def extract(page: PageText, config: ExtractorConfig | None = None) -> ExtractionResult:
    return make_extractor(config or ExtractorConfig()).extract(page)


# -- cache ----------------------------------------------------------------------

class ExtractionCache:
    """Per-page result cache keyed by url + text hash, with TTL expiry.

    Entries live in memory and, when ``directory`` is given, as one JSON file
    per key. Unreadable files are treated as misses and overwritten.
    """

    def __init__(self, extractor: Extractor, ttl: timedelta = DEFAULT_CACHE_TTL,
                 directory: str | Path | None = None,
                 clock: Callable[[], float] = time.time):
        self.extractor = extractor
        self.ttl = ttl.total_seconds()
        self.directory = Path(directory) if directory else None
        self.clock = clock
        self.invocations = 0
        self._mem: dict[str, tuple[float, ExtractionResult]] = {}
        self._lock = threading.Lock()
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    def _file(self, key: str) -> Path:
        return self.directory / (hashlib.sha256(key.encode()).hexdigest() + ".json")

    def _lookup(self, key: str) -> ExtractionResult | None:
        now = self.clock()
        hit = self._mem.get(key)
        if hit is None and self.directory:
            path = self._file(key)
            if path.exists():
                try:
                    rec = json.loads(path.read_text(encoding="utf-8"))
                    hit = (float(rec["stored"]), ExtractionResult.from_dict(rec["result"]))
                except (ValueError, KeyError, TypeError):
                    hit = None
        if hit is None or now - hit[0] > self.ttl:
            return None
        return hit[1]

    def extract(self, page: PageText) -> ExtractionResult:
        key = page.cache_key
        result = self._lookup(key)
        if result is not None:
            return result
        result = self.extractor.extract(page)
        with self._lock:
            self.invocations += 1
            stored = self.clock()
            self._mem[key] = (stored, result)
            if self.directory:
                self._file(key).write_text(
                    json.dumps({"key": key, "stored": stored, "result": result.to_dict()}),
                    encoding="utf-8")
        return result
