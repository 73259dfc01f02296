import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covcrawl.kg import EntityType, KnowledgeGraph, Relation, RelationType
from covcrawl.resolution import (block_key, build_blocks, jaro_winkler, match_score, resolve,
                                 write_merge_log)

from .conftest import make_graph
from .helpers import alias_corpus, merged_pairs, pair_scores, reference_jaro_winkler

C = EntityType.COMPANY


def test_jw_identity_and_disjoint():
    assert jaro_winkler("applied materials", "applied materials") == 1.0
    assert jaro_winkler("abc", "xyz") == 0.0
    assert jaro_winkler("", "") == 1.0
    assert jaro_winkler("", "a") == 0.0


def test_jw_martha_matches_reference():
    ref = reference_jaro_winkler("MARTHA", "MARHTA")
    assert ref == pytest.approx(0.9611, abs=1e-4)
    assert jaro_winkler("MARTHA", "MARHTA") == pytest.approx(ref, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="abcdeğ ", max_size=12), st.text(alphabet="abcdeğ ", max_size=12))
def test_jw_against_reference_and_symmetric(a, b):
    v = jaro_winkler(a, b)
    assert v == pytest.approx(reference_jaro_winkler(a, b), abs=1e-12)
    assert v == pytest.approx(jaro_winkler(b, a), abs=1e-12)
    assert 0.0 <= v <= 1.0
    assert (v == 1.0) == (a == b)


@pytest.mark.parametrize("a, b, same, key", [
    ("Edwards Vacuum", "Edwards Vacuum Inc.", True, "edwa"),
    ("ASML", "ASM Pacific", False, "asml"),
])
def test_blocking(a, b, same, key):
    assert (block_key(a) == block_key(b)) is same
    assert block_key(a) == key
    assert block_key("ASM Pacific") == "asm "


def test_blocks_partition_fixture_companies(fixture_world):
    g = fixture_world.truth.to_graph()
    blocks = build_blocks(g)
    members = [m for b in blocks for m in b.members]
    assert sorted(members) == sorted(e.id for e in g.companies())
    assert len(members) == len(set(members))


def test_blocks_reject_non_companies():
    g = KnowledgeGraph()
    sid = g.upsert_entity("etch", EntityType.SECTOR, "p", 1)
    with pytest.raises(ValueError):
        build_blocks(g, [sid])


def test_suffix_variant_merges_and_keeps_shorter_name():
    g = KnowledgeGraph()
    a = g.upsert_entity("Edwards Vacuum", C, "p1", 2)
    loc = g.upsert_entity("Austin", EntityType.LOCATION, "p1", 2)
    g.add_relation(Relation(a, loc, RelationType.LOCATED_IN, 0.9, "p1"))
    # force a separate entity for the suffixed spelling, as a raw merge of two graphs would
    b = g._next_id
    from covcrawl.kg import Entity
    g.entities[b] = Entity(b, "Edwards Vacuum Inc.", C, {"Edwards Vacuum Inc."}, {"p2"}, 1)
    g._next_id += 1
    g.add_relation(Relation(b, loc, RelationType.LOCATED_IN, 0.9, "p2"))
    out, log = resolve(g)
    (ent,) = out.companies()
    assert ent.name == "Edwards Vacuum"
    assert ent.source_pages == {"p1", "p2"} and ent.first_seen_iteration == 1
    assert len(log) == 1 and log[0].survivor == "Edwards Vacuum"
    assert out.audit() == []


def test_unrelated_names_not_merged():
    g = make_graph(["Applied Materials", "Lam Research"])
    out, log = resolve(g)
    assert len(out.companies()) == 2 and log == []


def test_match_score_weights():
    g = make_graph(["Kestron Optics", "Kestron Optic"], locations={"Kestron Optics": "Austin",
                                                                  "Kestron Optic": "Austin"})
    a, b = (e.id for e in g.companies())
    s = match_score(g, a, b)
    assert s.attribute_overlap == 1.0
    assert s.combined == pytest.approx(0.7 * jaro_winkler("kestron optics", "kestron optic") + 0.3)


def test_relations_repointed_and_deduplicated(tmp_path):
    g = make_graph(["Kestron Optics", "Kestron Optic", "Norix"],
                   supplies=[("Kestron Optics", "Norix"), ("Kestron Optic", "Norix")],
                   locations={"Kestron Optics": "Austin", "Kestron Optic": "Austin"})
    before = len(g.relations)
    out, log = resolve(g)
    assert len(out.companies()) == 2
    assert len(out.relations) <= before
    assert len(out.relations_of_type(RelationType.SUPPLIES_TO)) == 1
    assert out.audit() == []
    write_merge_log(log, tmp_path / "m.jsonl")
    assert (tmp_path / "m.jsonl").read_text().count("\n") == len(log)


def test_non_companies_never_fuzzy_merged():
    g = KnowledgeGraph()
    g.upsert_entity("wafer cleaning", EntityType.SECTOR, "p", 1)
    g.upsert_entity("wafer cleanin", EntityType.SECTOR, "p", 1)
    out, _ = resolve(g)
    assert len(out) == 2


def test_alias_corpus_quality():
    g, truth = alias_corpus(seed=0)
    out, _ = resolve(g)
    p, r = pair_scores(merged_pairs(out), truth)
    assert p >= 0.95 and r >= 0.95


def random_company_graph(rng: random.Random) -> KnowledgeGraph:
    stems = ["Kes", "Kest", "Nova", "Nov", "Bel"]
    words = ["tron", "tronn", "ara", "Optics", "Optic", "Inc.", ""]
    g = KnowledgeGraph()
    ids = []
    for i in range(rng.randint(1, 12)):
        name = f"{rng.choice(stems)}{rng.choice(words)} {rng.choice(['', 'Corp', 'Systems'])}".strip()
        ids.append(g.upsert_entity(name, C, f"p{i % 3}", rng.randint(1, 4)))
    locs = [g.upsert_entity(x, EntityType.LOCATION, "p", 1) for x in ("Austin", "Boise")]
    for cid in ids:
        if rng.random() < 0.7:
            g.add_relation(Relation(cid, rng.choice(locs), RelationType.LOCATED_IN, 0.9, "p"))
    for _ in range(rng.randint(0, 10)):
        a, b = rng.choice(ids), rng.choice(ids)
        if a != b:
            g.add_relation(Relation(a, b, RelationType.SUPPLIES_TO, 0.8, f"p{rng.randint(0, 2)}"))
    return g


def test_resolve_idempotent_on_random_graphs():
    rng = random.Random(1234)
    for _ in range(1000):
        g = random_company_graph(rng)
        once, _ = resolve(g)
        twice, log2 = resolve(once)
        assert log2 == []
        assert twice.equivalent(once)
        assert len(once.relations) <= len(g.relations)
        assert once.audit() == []
        keys = [e.key for e in once.entities.values()]
        assert len(keys) == len(set(keys))


def test_established_entities_never_merge_with_each_other():
    g = make_graph(["Kestron Optics", "Kestron Optic"], locations={"Kestron Optics": "Austin",
                                                                  "Kestron Optic": "Austin"})
    ids = [e.id for e in g.companies()]
    kept, log = resolve(g, established=ids)
    assert len(kept.companies()) == 2 and log == []
    # a newcomer may still join exactly one established entity
    new = g.upsert_entity("Kestron Opticss", C, "p9", 2)
    loc = g.lookup("Austin", EntityType.LOCATION)
    g.add_relation(Relation(new, loc, RelationType.LOCATED_IN, 0.9, "p9"))
    out, log = resolve(g, established=ids)
    assert len(out.companies()) == 2 and len(log) == 1
    assert out.audit() == []
