"""Corpora and reference implementations shared by unit and acceptance tests."""
from __future__ import annotations

import itertools
import random

from covcrawl.kg import EntityType, KnowledgeGraph, Relation, RelationType, clean_surface


def reference_jaro_winkler(s1: str, s2: str, p: float = 0.1) -> float:
    """Textbook Jaro-Winkler written independently of the package code."""
    if s1 == s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    window = max(len(s1), len(s2)) // 2 - 1
    window = max(window, 0)
    used2 = [False] * len(s2)
    m1 = []
    for i, ch in enumerate(s1):
        for j in range(max(0, i - window), min(len(s2), i + window + 1)):
            if not used2[j] and s2[j] == ch:
                used2[j] = True
                m1.append(ch)
                break
    m2 = [s2[j] for j in range(len(s2)) if used2[j]]
    m = len(m1)
    if m == 0:
        return 0.0
    transpositions = sum(a != b for a, b in zip(m1, m2)) / 2
    jaro = (m / len(s1) + m / len(s2) + (m - transpositions) / m) / 3
    prefix = 0
    for a, b in zip(s1[:4], s2[:4]):
        if a != b:
            break
        prefix += 1
    return jaro + prefix * p * (1 - jaro)


STEMS = [a + b for a, b in itertools.product(
    ["Kes", "Nov", "Bel", "Dra", "Fal", "Hal", "Jor", "Lum", "Mer", "Orb", "Pel", "Ros", "Tor",
     "Ver", "Xan", "Zen", "Cle", "Fen", "Gri", "Wol"],
    ["tron", "ara", "ex", "ith", "onic", "eon", "ova", "ium"])]
WORDS = ["Optics", "Vacuum", "Systems", "Materials", "Photonics", "Instruments", "Robotics",
         "Thermal"]
LOCS = ["Austin", "Boise", "Dresden", "Hsinchu", "Penang", "Kyoto", "Albany", "Malta"]
PRODS = [f"part {i}" for i in range(40)]


def _variant(name: str, kind: int) -> str:
    stem, word = name.split(" ", 1)
    if kind == 0:
        return f"{name} Inc."
    if kind == 1:
        return f"{stem} {word[:-1]}"  # truncated word
    if kind == 2:
        return f"{stem} {word[:2]}{word[3]}{word[2]}{word[4:]}"  # transposed letters
    return f"{stem} {word[:3]}{word[4:]}, LLC"  # dropped letter plus suffix


def alias_corpus(seed: int = 0, n_pairs: int = 50, n_distinct: int = 50):
    """Graph with planted (canonical, alias) pairs plus distinct companies.

    Returns ``(graph, truth_pairs)`` where ``truth_pairs`` is the set of
    planted same-entity pairs as frozensets of surface names. Alias partners
    share a location and a product; distinct names sometimes share a stem
    (and hence a block) with a planted name but never its attributes.
    """
    rng = random.Random(seed)
    stems = rng.sample(STEMS, n_pairs + n_distinct // 2)
    g = KnowledgeGraph()
    truth = set()

    def add(name, loc, prods, page):
        cid = g.upsert_entity(name, EntityType.COMPANY, page, 1)
        lid = g.upsert_entity(loc, EntityType.LOCATION, page, 1)
        g.add_relation(Relation(cid, lid, RelationType.LOCATED_IN, 0.9, page))
        for p in prods:
            pid = g.upsert_entity(p, EntityType.PRODUCT, page, 1)
            g.add_relation(Relation(cid, pid, RelationType.PRODUCES, 0.9, page))

    canon = []
    for i in range(n_pairs):
        name = f"{stems[i]} {rng.choice(WORDS)}"
        alias = _variant(name, i % 4)
        loc, prods = rng.choice(LOCS), rng.sample(PRODS, 2)
        add(name, loc, prods, f"https://a/{i}")
        add(alias, loc, prods, f"https://b/{i}")
        truth.add(frozenset((clean_surface(name), clean_surface(alias))))
        canon.append(name)
    used = set(canon)
    extra = stems[n_pairs:]
    for j in range(n_distinct):
        if j % 2 == 0:
            stem = canon[j].split(" ", 1)[0]  # shares a block with a planted name
        else:
            stem = extra[j // 2]
        word = rng.choice([w for w in WORDS if f"{stem} {w}" not in used])
        name = f"{stem} {word}"
        used.add(name)
        add(name, rng.choice(LOCS), rng.sample(PRODS, 2), f"https://c/{j}")
    return g, truth


def merged_pairs(graph: KnowledgeGraph) -> set[frozenset]:
    """Pairs of original surface names that ended up in the same entity."""
    out = set()
    for e in graph.companies():
        names = sorted(e.aliases)
        for a, b in itertools.combinations(names, 2):
            out.add(frozenset((a, b)))
    return out


def pair_scores(predicted: set[frozenset], truth: set[frozenset]) -> tuple[float, float]:
    tp = len(predicted & truth)
    precision = tp / len(predicted) if predicted else 1.0
    recall = tp / len(truth) if truth else 1.0
    return precision, recall
