import random

import numpy as np
import pytest

from covcrawl.gaps import (BRIDGE_SEVERITY, DirectoryIndex, GapKind, GapSignal, Priors,
                           detect_all, detect_degree_anomalies, detect_geographic_gaps,
                           detect_missing_bridges, expand_queries, predicted_link_signals,
                           resolve_queries, resolve_query_map)
from covcrawl.kg import EntityType

from .conftest import make_graph


def sector_graph(sizes: dict[str, int]):
    sectors, companies = {}, []
    for sec, n in sizes.items():
        for i in range(n):
            name = f"{sec} co {i}"
            companies.append(name)
            sectors[name] = sec
    return make_graph(companies, sectors=sectors)


def test_degree_outlier_flagged_with_hand_computed_severity():
    sigs = detect_degree_anomalies(sector_graph({"etch": 10, "litho": 9, "cmp": 11, "vacuum": 1}))
    # median 9.5, MAD 1.0, z(vacuum) = (1 - 9.5) / 1.4826 < -1; z(litho) = -0.34
    assert [s.focus for s in sigs] == [("vacuum",)]
    assert sigs[0].severity == pytest.approx((9.5 - 1) / 9.5)
    assert sigs[0].queries == ["vacuum suppliers", "vacuum manufacturers directory"]


def test_equal_degrees_and_no_priors_give_nothing():
    assert detect_degree_anomalies(sector_graph({"a": 3, "b": 3, "c": 3})) == []


def test_prior_deficit_severity():
    sigs = detect_degree_anomalies(sector_graph({"vacuum": 2}), Priors(sectors={"Vacuum": 5}))
    assert len(sigs) == 1 and sigs[0].severity == pytest.approx(0.6)
    assert detect_degree_anomalies(sector_graph({"vacuum": 5}), Priors(sectors={"vacuum": 5})) == []


def brute_force_bridges(graph):
    """Adjacency-matrix oracle: 2-hop patterns between sectors, then unreached pairs."""
    comps = sorted(e.id for e in graph.companies())
    ix = {c: i for i, c in enumerate(comps)}
    n = len(comps)
    A = np.zeros((n, n), dtype=int)
    member = {}
    for r in graph.relations:
        if r.relation_type.value == "supplies_to":
            A[ix[r.source_id], ix[r.target_id]] = 1
        elif r.relation_type.value == "belongs_to_sector":
            member.setdefault(r.target_id, set()).add(r.source_id)
    A2 = A @ A
    within2 = (A + A2) > 0
    sec_of = {c: {s for s, m in member.items() if c in m} for c in comps}
    patterns = {(s1, s2) for a in comps for b in comps if a != b and A2[ix[a], ix[b]] > 0
                for s1 in sec_of[a] for s2 in sec_of[b]}
    out = set()
    for s1, s2 in patterns:
        for c1 in member.get(s1, ()):
            for c3 in member.get(s2, ()):
                if c1 != c3 and not within2[ix[c1], ix[c3]]:
                    out.add((graph.entities[c1].name, graph.entities[c3].name))
    return out


def random_supply_graph(rng):
    names = [f"C{i}" for i in range(rng.randint(3, 9))]
    secs = ["s1", "s2", "s3"]
    supplies = [(a, b) for a in names for b in names if a != b and rng.random() < 0.2]
    return make_graph(names, supplies=supplies, sectors={c: rng.choice(secs) for c in names})


@pytest.mark.parametrize("seed", range(25))
def test_missing_bridges_match_brute_force(seed):
    g = random_supply_graph(random.Random(seed))
    sigs = detect_missing_bridges(g)
    assert {s.focus for s in sigs} == brute_force_bridges(g)
    assert all(s.severity == BRIDGE_SEVERITY for s in sigs)


def test_bridge_example():
    g = make_graph(["A", "X", "B", "C", "D"], supplies=[("A", "X"), ("X", "B")],
                   sectors={"A": "s1", "B": "s2", "C": "s1", "D": "s2"})
    foci = {s.focus for s in detect_missing_bridges(g)}
    assert ("C", "D") in foci and ("C", "B") in foci and ("A", "D") in foci
    assert ("A", "B") not in foci


def test_no_supplies_or_complete_pattern_gives_no_bridges():
    assert detect_missing_bridges(make_graph(["A", "B"], sectors={"A": "s", "B": "t"})) == []
    g = make_graph(["A", "X", "B"], supplies=[("A", "X"), ("X", "B")],
                   sectors={"A": "s1", "B": "s2"})
    assert detect_missing_bridges(g) == []


def test_geographic_gaps():
    g = make_graph(["A"], locations={"A": "Penang"})
    (sig,) = detect_geographic_gaps(g, {"Penang": 5}, keyword="semiconductor")
    assert sig.severity == pytest.approx(0.8)
    assert sig.queries == ["semiconductor companies in Penang"]
    (absent,) = detect_geographic_gaps(g, {"Kyoto": 3})
    assert absent.severity == 1.0
    assert detect_geographic_gaps(g, {"Penang": 1}) == []
    assert detect_geographic_gaps(g, {"Penang": 0}) == []


def test_predicted_link_severity_is_sigmoid():
    class P:
        head_name, tail_name, score = "A", "B", 0.0
    (sig,) = predicted_link_signals([P()])
    assert sig.severity == pytest.approx(0.5)
    assert sig.queries == ["A supplier B"]


@pytest.mark.parametrize("kind, focus, expected", [
    (GapKind.DEGREE_ANOMALY, ("etch",), ["etch suppliers", "etch manufacturers directory"]),
    (GapKind.MISSING_BRIDGE, ("A", "B"), ["suppliers to B", "A customers"]),
    (GapKind.GEOGRAPHIC_GAP, ("Austin",), ["semi companies in Austin"]),
    (GapKind.PREDICTED_LINK, ("A", "B"), ["A supplier B"]),
])
def test_query_templates(kind, focus, expected):
    assert expand_queries(GapSignal(kind, focus, 0.5), keyword="semi") == expected


@pytest.mark.parametrize("sev", [0.0, -0.1, 1.01])
def test_severity_bounds(sev):
    with pytest.raises(ValueError):
        GapSignal(GapKind.DEGREE_ANOMALY, ("x",), sev)


def test_directory_index_top_k_and_fetched_exclusion():
    docs = {f"https://d/{i}": f"vacuum pumps listing {i}" for i in range(5)}
    docs["https://d/other"] = "etch tools"
    idx = DirectoryIndex(docs)
    got = resolve_queries(["vacuum suppliers"], idx, k=3)
    assert got == ["https://d/0", "https://d/1", "https://d/2"]
    got = resolve_queries(["vacuum suppliers"], idx, fetched={"https://d/0"}, k=3)
    assert got == ["https://d/1", "https://d/2", "https://d/3"]
    assert resolve_queries(["zzz nothing"], idx) == []
    assert resolve_queries([], idx) == []
    m = resolve_query_map(["vacuum suppliers", "pumps"], idx, k=1)
    assert m == {"https://d/0": ["vacuum suppliers", "pumps"]}


def test_priors_round_trip(tmp_path):
    p = Priors(sectors={"etch": 4}, locations={"Austin": 2})
    p.dump(tmp_path / "p.jsonl")
    assert Priors.load(tmp_path / "p.jsonl") == p
    with pytest.raises(ValueError):
        Priors(sectors={"x": -1})


def test_detect_all_on_fixture_is_deterministic(fixture_world):
    g = fixture_world.truth.to_graph()
    a = detect_all(g, fixture_world.priors, "semiconductor")
    b = detect_all(g, fixture_world.priors, "semiconductor")
    assert a == b
    assert all(0 < s.severity <= 1 and s.queries for s in a)
    assert [s.sort_key for s in a] == sorted(s.sort_key for s in a)
    # priors never exceed the true counts, so the complete graph has no geographic gap
    assert GapKind.GEOGRAPHIC_GAP not in {s.kind for s in a}


def test_empty_graph_has_no_signals():
    g = make_graph([])
    assert detect_all(g) == []
    assert not [e for e in g.entities.values() if e.entity_type is EntityType.SECTOR]
