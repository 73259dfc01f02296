from pathlib import Path

import pytest

from covcrawl.data import fixture_world_path
from covcrawl.kg import EntityType, KnowledgeGraph, Relation, RelationType
from covcrawl.simweb import World, WorldConfig, generate_world

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_world() -> World:
    return World.load(fixture_world_path())


@pytest.fixture(scope="session")
def small_world() -> World:
    return generate_world(WorldConfig(n_companies=60, n_noise_companies=30, n_sectors=6,
                                      n_locations=6, n_products=20, n_directory_pages=4,
                                      n_registry_pages=2, n_news_pages=6, n_catalog_pages=4,
                                      bridge_gaps=1, seed=11))


def make_graph(companies, supplies=(), sectors=None, locations=None, products=None):
    """Small graph builder: names in, KnowledgeGraph out."""
    g = KnowledgeGraph()
    for c in companies:
        g.upsert_entity(c, EntityType.COMPANY, "p", 1)

    def link(src, dst, ty, rel):
        s = g.upsert_entity(src, EntityType.COMPANY, "p", 1)
        d = g.upsert_entity(dst, ty, "p", 1)
        g.add_relation(Relation(s, d, rel, 0.9, "p"))

    for a, b in supplies:
        link(a, b, EntityType.COMPANY, RelationType.SUPPLIES_TO)
    for c, s in (sectors or {}).items():
        link(c, s, EntityType.SECTOR, RelationType.BELONGS_TO_SECTOR)
    for c, loc in (locations or {}).items():
        link(c, loc, EntityType.LOCATION, RelationType.LOCATED_IN)
    for c, ps in (products or {}).items():
        for p in ps:
            link(c, p, EntityType.PRODUCT, RelationType.PRODUCES)
    return g
