"""Synthetic supplier web with a planted ground truth.

The generated world has a visible region (directories, registries, sector
hubs, company sites, news and marketplace pages, all linked from seeds) and
a hidden region that no visible page links to. Hidden pages are only
reachable through directory search, which is what gap-guided re-crawling
uses. Three motifs are planted in the hidden region:

* a sector whose companies are almost all unlisted (degree anomaly),
* locations whose companies are unlisted (geographic gap),
* supplier chains C -> M -> D whose middle M is unlisted (missing bridge).

Marketplace and news pages carry many non-ground-truth companies, so
strategies that chase entity-rich pages lose precision.
"""
from __future__ import annotations

import json
import math
import random
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from .crawler import Seed, SimulatedWeb, write_seeds
from .gaps import Priors
from .kg import EntityType, KnowledgeGraph, Relation, RelationType, normalize_name

SECTORS = [
    "wafer processing", "lithography", "vacuum systems", "metrology", "deposition",
    "etch", "inspection", "test equipment", "thermal processing", "assembly",
    "packaging", "wafer cleaning", "ion implantation", "photomask", "robotics automation",
]
LOCATIONS = [
    "Austin", "San Jose", "Phoenix", "Boise", "Portland", "Albany", "Dresden", "Eindhoven",
    "Hsinchu", "Kumamoto", "Singapore", "Penang", "Grenoble", "Malta", "Chandler",
    "Richardson", "Leuven", "Suwon", "Kyoto", "Tucson",
]
_PRODUCT_HEADS = [
    "pumps", "chucks", "reticles", "sensors", "heaters", "valves", "chambers", "scanners",
    "probers", "handlers", "furnaces", "implanters", "steppers", "bonders", "dispensers",
    "gauges", "controllers", "filters", "wafer carriers", "lasers",
]
_PRODUCT_MODS = [
    "dry", "turbo", "cryo", "electrostatic", "optical", "ceramic", "plasma", "precision",
    "automated", "high-vacuum", "thermal", "ultrasonic", "x-ray", "deep-uv", "atomic",
]
_SYL_A = [
    "Kes", "Nov", "Ar", "Bel", "Cor", "Dra", "Elm", "Fal", "Gal", "Hal", "Ion", "Jor",
    "Kal", "Lum", "Mer", "Nex", "Orb", "Pel", "Qua", "Ros", "Sil", "Tor", "Ul", "Ver",
    "Wex", "Xan", "Yor", "Zen", "Bra", "Cle", "Del", "Fen",
]
_SYL_B = [
    "tron", "ara", "ion", "ex", "ora", "ith", "onic", "ari", "eon", "ova", "ix", "ant",
    "elle", "ium", "ane", "ost", "ury", "ica", "ode", "ynx",
]
_GT_WORDS = ["Vacuum", "Photonics", "Precision", "Systems", "Technologies", "Materials",
             "Instruments", "Robotics", "Optics", "Thermal", "Semitech", "Microsystems"]
_NOISE_WORDS = ["Logistics", "Consulting", "Media", "Capital", "Trading", "Distribution",
                "Legal", "Staffing", "Marketing", "Ventures"]
_SUFFIXES = ["Inc.", "Corp.", "LLC", "Ltd.", "GmbH"]
INDEXED_KINDS = ("directory", "company", "registry", "hub")


class WorldConfigError(ValueError):
    pass


@dataclass
class WorldConfig:
    n_companies: int = 200
    n_noise_companies: int = 120
    n_sectors: int = 10
    n_locations: int = 12
    n_products: int = 60
    n_directory_pages: int = 8
    n_registry_pages: int = 4
    n_news_pages: int = 24
    n_catalog_pages: int = 16
    presence: float = 0.9
    customers_per_company: float = 1.2
    partner_prob: float = 0.4
    catalog_link_prob: float = 0.5
    hidden_sectors: int = 1
    hidden_sector_visible: int = 2
    geo_gaps: int = 2
    bridge_gaps: int = 3
    noisy_relation_prob: float = 0.3
    domain_keyword: str = "semiconductor"
    seed: int = 0

    def validate(self) -> None:
        if self.n_companies < 1:
            raise WorldConfigError("n_companies must be >= 1")
        for name in ("presence", "partner_prob", "catalog_link_prob", "noisy_relation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise WorldConfigError(f"{name} must lie in [0, 1]")
        if not 1 <= self.n_sectors <= len(SECTORS):
            raise WorldConfigError(f"n_sectors must be in [1, {len(SECTORS)}]")
        if not 1 <= self.n_locations <= len(LOCATIONS):
            raise WorldConfigError(f"n_locations must be in [1, {len(LOCATIONS)}]")
        if not 1 <= self.n_products <= len(_PRODUCT_HEADS) * len(_PRODUCT_MODS):
            raise WorldConfigError("n_products out of range")
        if self.n_directory_pages < 1:
            raise WorldConfigError("a world needs at least one directory page to seed from")
        if self.hidden_sectors >= self.n_sectors and self.hidden_sectors > 0:
            raise WorldConfigError("at least one sector must stay visible")
        if self.geo_gaps >= self.n_locations and self.geo_gaps > 0:
            raise WorldConfigError("at least one location must stay visible")
        if min(self.n_noise_companies, self.n_registry_pages, self.n_news_pages,
               self.n_catalog_pages, self.hidden_sectors, self.geo_gaps, self.bridge_gaps) < 0:
            raise WorldConfigError("counts must be non-negative")
        if self.n_companies + self.n_noise_companies + self.bridge_gaps > len(_SYL_A) * len(_SYL_B):
            raise WorldConfigError("not enough distinct company names")


@dataclass
class TruthEntity:
    name: str
    entity_type: EntityType
    aliases: list[str] = field(default_factory=list)
    ground_truth: bool = False
    planted: str | None = None
    pages: list[str] = field(default_factory=list)

    @property
    def discoverable(self) -> bool:
        return bool(self.pages)


@dataclass
class WorldTruth:
    entities: list[TruthEntity]
    relations: list[tuple[str, str, str, str, str]]  # src, src_type, rel, dst, dst_type
    page_entities: dict[str, list[tuple[str, str]]]

    def companies(self, ground_truth: bool | None = True) -> list[TruthEntity]:
        return [e for e in self.entities if e.entity_type is EntityType.COMPANY
                and (ground_truth is None or e.ground_truth == ground_truth)]

    def ground_truth_names(self) -> set[str]:
        return {normalize_name(e.name) for e in self.companies(True)}

    def planted_names(self) -> set[str]:
        return {normalize_name(e.name) for e in self.companies(True) if e.planted}

    def discoverable_ground_truth(self) -> set[str]:
        return {normalize_name(e.name) for e in self.companies(True) if e.discoverable}

    def all_surface_keys(self) -> set[tuple[str, EntityType]]:
        out = set()
        for e in self.entities:
            for s in (e.name, *e.aliases):
                out.add((normalize_name(s), e.entity_type))
        return out

    def to_graph(self) -> KnowledgeGraph:
        g = KnowledgeGraph()
        for e in self.entities:
            pages = e.pages or ["<offline>"]
            for p in pages:
                g.upsert_entity(e.name, e.entity_type, p, 1)
            for a in e.aliases:
                g.upsert_entity(a, e.entity_type, pages[0], 1)
        for src, st, rel, dst, dt in self.relations:
            g.add_relation(Relation(g.lookup(src, st), g.lookup(dst, dt), RelationType(rel), 1.0,
                                    "<truth>"), enforce=False)
        return g

    def dump(self, path: str | Path) -> None:
        """KG snapshot lines plus ground-truth flags and a page-mapping section."""
        with Path(path).open("w", encoding="utf-8") as fh:
            for e in self.entities:
                fh.write(json.dumps({"kind": "entity", "name": e.name, "type": e.entity_type.value,
                                     "aliases": sorted({e.name, *e.aliases}),
                                     "pages": sorted(e.pages) or ["<offline>"], "iter": 1,
                                     "gt": e.ground_truth, "planted": e.planted},
                                    sort_keys=True) + "\n")
            for src, st, rel, dst, dt in self.relations:
                fh.write(json.dumps({"kind": "relation", "src": src, "src_type": st, "dst": dst,
                                     "dst_type": dt, "rel": rel, "conf": 1.0, "page": "<truth>"},
                                    sort_keys=True) + "\n")
            for url in sorted(self.page_entities):
                fh.write(json.dumps({"kind": "page", "url": url,
                                     "entities": [list(x) for x in self.page_entities[url]]},
                                    sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WorldTruth":
        entities, relations, pages = [], [], {}
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec["kind"] == "entity":
                    real_pages = [p for p in rec["pages"] if p != "<offline>"]
                    entities.append(TruthEntity(rec["name"], EntityType(rec["type"]),
                                                [a for a in rec["aliases"] if a != rec["name"]],
                                                rec.get("gt", False), rec.get("planted"), real_pages))
                elif rec["kind"] == "relation":
                    relations.append((rec["src"], rec["src_type"], rec["rel"], rec["dst"],
                                      rec["dst_type"]))
                elif rec["kind"] == "page":
                    pages[rec["url"]] = [tuple(x) for x in rec["entities"]]
        return cls(entities, relations, pages)


@dataclass
class World:
    web: dict  # simulated-web JSON document
    truth: WorldTruth
    seeds: list[Seed]
    priors: Priors
    config: WorldConfig

    def simulated_web(self) -> SimulatedWeb:
        return SimulatedWeb.from_dict(self.web)

    def directory_documents(self) -> dict[str, str]:
        return {p["url"]: p["text"] for p in self.web["pages"] if p.get("kind") in INDEXED_KINDS}

    def save(self, path: str | Path) -> dict[str, Path]:
        """Write the web file plus ``.seeds.jsonl``, ``.priors.jsonl`` and ``.truth.jsonl`` sidecars."""
        path = Path(path)
        stem = path.with_suffix("")
        out = {"web": path, "seeds": Path(f"{stem}.seeds.jsonl"),
               "priors": Path(f"{stem}.priors.jsonl"), "truth": Path(f"{stem}.truth.jsonl")}
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.web, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        write_seeds(self.seeds, out["seeds"])
        self.priors.dump(out["priors"])
        self.truth.dump(out["truth"])
        return out

    @classmethod
    def load(cls, path: str | Path) -> "World":
        from .crawler import load_seeds
        path = Path(path)
        stem = path.with_suffix("")
        web = json.loads(path.read_text(encoding="utf-8"))
        meta = web.get("meta", {})
        config = WorldConfig(**meta.get("config", {}))
        return cls(web, WorldTruth.load(f"{stem}.truth.jsonl"), load_seeds(f"{stem}.seeds.jsonl"),
                   Priors.load(f"{stem}.priors.jsonl"), config)


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


class _Builder:
    def __init__(self, config: WorldConfig):
        self.c = config
        self.rng = random.Random(config.seed)
        self.pages: dict[str, dict] = {}
        self.mentions: dict[str, list[tuple[str, str]]] = {}
        self.entities: dict[tuple[str, EntityType], TruthEntity] = {}
        self.relations: list[tuple[str, str, str, str, str]] = []
        self.robots: dict[str, str] = {}

    # -- entity bookkeeping ------------------------------------------------------

    def entity(self, name: str, ty: EntityType, **kw) -> TruthEntity:
        key = (name, ty)
        if key not in self.entities:
            self.entities[key] = TruthEntity(name, ty, **kw)
        return self.entities[key]

    def relate(self, src: str, st: EntityType, rel: RelationType, dst: str, dt: EntityType):
        rec = (src, st.value, rel.value, dst, dt.value)
        if rec not in self.relations:
            self.relations.append(rec)

    def page(self, url: str, kind: str, lines: list[str], links: list[tuple[str, str]],
             mentioned: Iterable[tuple[str, EntityType]]):
        self.pages[url] = {"url": url, "kind": kind, "text": "\n".join(lines),
                           "links": [{"href": h, "anchor": a} for h, a in links]}
        seen = []
        for name, ty in mentioned:
            ent = self.entities[(name, ty)]
            if url not in ent.pages:
                ent.pages.append(url)
            if (name, ty.value) not in seen:
                seen.append((name, ty.value))
        self.mentions[url] = seen

    # -- names --------------------------------------------------------------------

    def company_names(self) -> tuple[list[str], list[str]]:
        stems = [a + b for a in _SYL_A for b in _SYL_B]
        self.rng.shuffle(stems)
        n_gt = self.c.n_companies + self.c.bridge_gaps
        gt = [f"{s} {self.rng.choice(_GT_WORDS)}" for s in stems[:n_gt]]
        noise = [f"{s} {self.rng.choice(_NOISE_WORDS)}"
                 for s in stems[n_gt:n_gt + self.c.n_noise_companies]]
        return gt, noise

    def products(self) -> list[str]:
        combos = [f"{m} {h}" for m in _PRODUCT_MODS for h in _PRODUCT_HEADS]
        self.rng.shuffle(combos)
        return sorted(combos[:self.c.n_products])

    def alias(self, name: str) -> str:
        return f"{name} {self.rng.choice(_SUFFIXES)}"


def _company_url(name: str) -> str:
    return f"https://www.{slug(name).replace('-', '')}.com/"


def generate_world(config: WorldConfig | None = None) -> World:
    """Build a deterministic world for ``config.seed``."""
    c = config or WorldConfig()
    c.validate()
    b = _Builder(c)
    rng = b.rng
    CO, PR, SE, LO = EntityType.COMPANY, EntityType.PRODUCT, EntityType.SECTOR, EntityType.LOCATION
    kw = c.domain_keyword

    gt_names, noise_names = b.company_names()
    bridge_names = gt_names[c.n_companies:]
    gt_names = gt_names[:c.n_companies]
    sectors = list(SECTORS[:c.n_sectors])
    if "vacuum systems" not in sectors:
        sectors[-1] = "vacuum systems"
    locations = list(LOCATIONS[:c.n_locations])
    products = b.products()
    for s in sectors:
        b.entity(s, SE)
    for loc in locations:
        b.entity(loc, LO)
    for p in products:
        b.entity(p, PR)

    hidden_sectors = (["vacuum systems"] + [s for s in sectors if s != "vacuum systems"])[:c.hidden_sectors]
    rest = [loc for loc in locations]
    rng.shuffle(rest)
    geo_gap_locs = sorted(rest[:c.geo_gaps])
    sector_products = {s: products[i::len(sectors)] or products for i, s in enumerate(sectors)}

    # -- ground-truth companies ------------------------------------------------------
    info: dict[str, dict] = {}
    for i, name in enumerate(gt_names):
        sector = sectors[i % len(sectors)]
        loc = rng.choice(locations)
        prods = rng.sample(sector_products[sector], k=min(len(sector_products[sector]),
                                                          rng.randint(1, 3)))
        present = rng.random() < c.presence
        info[name] = {"sector": sector, "loc": loc, "products": prods, "present": present,
                      "customers": [], "partners": [], "hidden": False}
        b.entity(name, CO, ground_truth=True)
        b.relate(name, CO, RelationType.BELONGS_TO_SECTOR, sector, SE)
        b.relate(name, CO, RelationType.LOCATED_IN, loc, LO)
        for p in prods:
            b.relate(name, CO, RelationType.PRODUCES, p, PR)

    present = [n for n in gt_names if info[n]["present"]]
    for s in hidden_sectors:
        members = [n for n in present if info[n]["sector"] == s]
        for n in members[c.hidden_sector_visible:]:
            info[n]["hidden"] = True
            b.entities[(n, CO)].planted = "sector"
    for n in present:
        if info[n]["loc"] in geo_gap_locs and not info[n]["hidden"]:
            info[n]["hidden"] = True
            b.entities[(n, CO)].planted = "geo"
    visible = [n for n in present if not info[n]["hidden"]]

    # supply and partner links among visible ground-truth companies
    for n in visible:
        k = int(c.customers_per_company) + (rng.random() < c.customers_per_company % 1)
        others = [m for m in visible if m != n and info[m]["sector"] != info[n]["sector"]]
        for m in rng.sample(others, k=min(k, len(others))):
            info[n]["customers"].append(m)
            b.relate(n, CO, RelationType.SUPPLIES_TO, m, CO)
        if rng.random() < c.partner_prob and len(visible) > 1:
            m = rng.choice([x for x in visible if x != n])
            info[n]["partners"].append(m)
            b.relate(n, CO, RelationType.PARTNERS_WITH, m, CO)

    def reach2(a: str) -> set[str]:
        one = set(info[a]["customers"])
        two = set(one)
        for x in one:
            two |= set(info[x]["customers"])
        return two

    # planted bridges: C -> M -> D with M unlisted, plus a visible A -> X -> B in the same sector pair
    bridges = []
    vis_sectors = sorted({info[n]["sector"] for n in visible})
    for m_name in bridge_names:
        for _ in range(200):
            if len(vis_sectors) < 1 or len(visible) < 5:
                break
            s1, s2 = rng.choice(vis_sectors), rng.choice(vis_sectors)
            pool1 = [n for n in visible if info[n]["sector"] == s1]
            pool2 = [n for n in visible if info[n]["sector"] == s2]
            if len(pool1) < 2 or len(pool2) < 2:
                continue
            a, cc = rng.sample(pool1, 2)
            bb, d = rng.sample(pool2, 2)
            if len({a, cc, bb, d}) < 4 or d in reach2(cc):
                continue
            x = rng.choice([n for n in visible if n not in (a, bb, cc, d)])
            for u, v in ((a, x), (x, bb)):
                if v not in info[u]["customers"]:
                    info[u]["customers"].append(v)
                    b.relate(u, CO, RelationType.SUPPLIES_TO, v, CO)
            if d in reach2(cc):
                continue
            bridges.append((cc, m_name, d))
            break
    for cc, m_name, d in bridges:
        sector = rng.choice(sectors)
        loc = rng.choice(locations)
        prods = rng.sample(sector_products[sector], k=1)
        info[m_name] = {"sector": sector, "loc": loc, "products": prods, "present": True,
                        "customers": [d], "partners": [], "hidden": True}
        b.entity(m_name, CO, ground_truth=True, planted="bridge")
        b.relate(cc, CO, RelationType.SUPPLIES_TO, m_name, CO)
        b.relate(m_name, CO, RelationType.SUPPLIES_TO, d, CO)
        b.relate(m_name, CO, RelationType.BELONGS_TO_SECTOR, sector, SE)
        b.relate(m_name, CO, RelationType.LOCATED_IN, loc, LO)
        b.relate(m_name, CO, RelationType.PRODUCES, prods[0], PR)

    # -- noise companies --------------------------------------------------------------
    noise_present = []
    for name in noise_names:
        b.entity(name, CO, ground_truth=False)
        if rng.random() < c.presence:
            noise_present.append(name)
            loc = rng.choice(locations)
            info[name] = {"loc": loc}
            b.relate(name, CO, RelationType.LOCATED_IN, loc, LO)

    news_urls = [f"https://news.chipwire.net/story/{i:03d}" for i in range(c.n_news_pages)]
    catalog_urls = [f"https://www.partsbazaar.com/deals/{i:03d}" for i in range(c.n_catalog_pages)]
    hub_url = {s: f"https://www.semi-hub.org/sectors/{slug(s)}" for s in sectors}

    # -- company pages ------------------------------------------------------------------
    for name in [n for n in gt_names if info[n]["present"]] + [m for _, m, _ in bridges]:
        d = info[name]
        url = _company_url(name)
        lines = [f"{name} operates in the {d['sector']} sector.",
                 f"{name} is located in {d['loc']}."]
        lines += [f"{name} manufactures {p}." for p in d["products"]]
        mentioned = [(name, CO), (d["sector"], SE), (d["loc"], LO)] + [(p, PR) for p in d["products"]]
        links = []
        for m in d["customers"]:
            lines.append(f"{name} supplies {m}.")
            mentioned.append((m, CO))
            links.append((_company_url(m), f"{m} {info[m]['sector']}"))
        for m in d["partners"]:
            lines.append(f"{name} partners with {m}.")
            mentioned.append((m, CO))
            links.append((_company_url(m), f"partner {m}"))
        for cc, m_name, dd in bridges:
            if name == m_name:
                lines.append(f"{name} is among the key suppliers to {dd}, serving customers such as {cc}.")
                lines.append(f"{cc} supplies {name}.")
                mentioned.append((cc, CO))
                mentioned.append((dd, CO))
        if not d["hidden"]:
            lines.append(f"See the {d['sector']} hub for related {kw} suppliers.")
            links.append((hub_url[d["sector"]], f"{d['sector']} suppliers"))
            if news_urls and rng.random() < 0.5:
                links.append((rng.choice(news_urls), "in the news"))
            if catalog_urls and rng.random() < c.catalog_link_prob:
                links.append((rng.choice(catalog_urls), "buy from our distributors"))
        b.page(url, "company", lines, links, mentioned)

    # -- sector hubs, directories, registries -----------------------------------------------
    for s in sectors:
        members = [n for n in visible if info[n]["sector"] == s]
        lines = [f"[[SECTOR: {s}]] {kw} {s} suppliers hub."]
        lines += [f"{b.alias(n) if rng.random() < 0.3 else n} operates in the {s} sector." for n in members]
        links = [(_company_url(n), f"{n} {s} equipment") for n in members]
        b.page(hub_url[s], "hub", lines, links, [(s, SE)] + [(n, CO) for n in members])

    dir_urls = []
    for i in range(c.n_directory_pages):
        covered = [sectors[(i + j) % len(sectors)] for j in range(2)]
        covered = [s for s in covered if s not in hidden_sectors] or covered[:1]
        members = [n for n in visible if info[n]["sector"] in covered]
        members = sorted(rng.sample(members, k=min(len(members), 14)))
        url = f"https://dir{i}.semidirectory.org/listing"
        lines = [f"{kw.title()} equipment supplier listing: {', '.join(covered)}."]
        mentioned = [(s, SE) for s in covered]
        for n in members:
            lines.append(f"[[COMPANY: {b.alias(n)}]] {n} operates in the {info[n]['sector']} sector.")
            mentioned.append((n, CO))
        links = [(_company_url(n), f"{n} {info[n]['sector']} supplier") for n in members]
        links += [(hub_url[s], f"{s} suppliers") for s in covered]
        b.page(url, "directory", lines, links, mentioned)
        dir_urls.append(url)

    reg_urls = []
    reg_locs = [loc for loc in locations if loc not in geo_gap_locs]
    for i in range(c.n_registry_pages):
        locs = reg_locs[i::max(1, c.n_registry_pages)]
        members = [n for n in visible if info[n]["loc"] in locs]
        url = f"https://registry.semi-registry.gov/region/{i}"
        lines = [f"Registered {kw} manufacturers by region."]
        mentioned = [(loc, LO) for loc in locs]
        for n in members:
            lines.append(f"{n} is located in {info[n]['loc']}.")
            mentioned.append((n, CO))
        links = [(_company_url(n), f"{n} {kw} manufacturer") for n in members[:10]]
        links.append((f"https://registry.semi-registry.gov/private/{i}", f"{kw} filings"))
        b.page(url, "registry", lines, links, mentioned)
        b.page(f"https://registry.semi-registry.gov/private/{i}", "registry",
               [f"[[COMPANY: {members[0]}]]" if members else "Restricted."], [],
               [(members[0], CO)] if members else [])
        reg_urls.append(url)
    b.robots["registry.semi-registry.gov"] = "User-agent: *\nDisallow: /private/\n"

    # -- news, marketplace and noise company pages --------------------------------------------
    noise_url = {n: f"https://www.{slug(n).replace('-', '')}.biz/" for n in noise_present}
    for name in noise_present:
        lines = [f"{name} is located in {info[name]['loc']}."]
        mentioned = [(name, CO), (info[name]["loc"], LO)]
        links = []
        if len(noise_present) > 1:
            other = rng.choice([x for x in noise_present if x != name])
            lines.append(f"{name} partners with {other}.")
            mentioned.append((other, CO))
            links.append((noise_url[other], "read more"))
        if catalog_urls:
            links.append((rng.choice(catalog_urls), "latest deals"))
        b.page(noise_url[name], "noise", lines, links, mentioned)

    for i, url in enumerate(news_urls):
        cast = rng.sample(noise_present, k=min(4, len(noise_present)))
        stars = rng.sample(visible, k=min(1, len(visible)))
        lines = [f"Industry roundup #{i}."]
        mentioned = []
        for n in cast:
            lines.append(f"[[COMPANY: {n}]]")
            mentioned.append((n, CO))
        for n in stars:
            if cast:
                lines.append(f"{cast[0]} partners with {n}.")
            mentioned.append((n, CO))
        if cast and rng.random() < c.noisy_relation_prob:
            loc = rng.choice(locations)
            lines.append(f"[[LOCATION: {loc}]] [[supplies_to: {cast[-1]} -> {loc} :: 0.6]]")
            mentioned.append((loc, LO))
        if len(cast) > 1 and rng.random() < c.noisy_relation_prob:
            lines.append(f"[[partners_with: {cast[0]} -> {cast[1]} :: 0.2]]")
        links = [(noise_url[n], "read more") for n in cast]
        links += [(news_urls[(i + 1) % len(news_urls)], "next story")]
        if catalog_urls:
            links.append((rng.choice(catalog_urls), "sponsored"))
        b.page(url, "news", lines, links, mentioned)

    for i, url in enumerate(catalog_urls):
        cast = rng.sample(noise_present, k=min(8, len(noise_present)))
        lines = ["Marketplace deals from verified distributors."]
        mentioned = []
        for n in cast:
            p = rng.choice(products)
            lines.append(f"{n} manufactures {p}.")
            mentioned += [(n, CO), (p, PR)]
        if len(cast) > 1:
            p = rng.choice(products)
            lines.append(f"[[PRODUCT: {p}]] [[supplies_to: {cast[0]} -> {p} :: 0.5]]")
            mentioned.append((p, PR))
        links = [(catalog_urls[(i + j) % len(catalog_urls)], "more deals") for j in (1, 2)]
        links += [(noise_url[n], "seller page") for n in cast[:3]]
        b.page(url, "catalog", lines, links, mentioned)

    # -- hidden region -------------------------------------------------------------------------
    for s in hidden_sectors:
        members = [n for n in present if info[n]["sector"] == s and info[n]["hidden"]]
        url = f"https://www.{slug(kw)}-suppliers.net/{slug(s)}"
        lines = [f"{s.title()} suppliers and manufacturers directory."]
        lines += [f"{n} operates in the {s} sector." for n in members]
        links = [(_company_url(n), f"{n} {s}") for n in members]
        b.page(url, "directory", lines, links, [(s, SE)] + [(n, CO) for n in members])
    for loc in geo_gap_locs:
        members = [n for n in present if info[n]["loc"] == loc and b.entities[(n, CO)].planted == "geo"]
        url = f"https://www.{slug(loc)}-business.net/{slug(kw)}"
        lines = [f"{kw.title()} companies in {loc}."]
        lines += [f"{n} is located in {loc}." for n in members]
        links = [(_company_url(n), f"{n} {loc}") for n in members]
        b.page(url, "directory", lines, links, [(loc, LO)] + [(n, CO) for n in members])

    # -- assemble ----------------------------------------------------------------------------------
    seeds = ([Seed(u, "directory") for u in dir_urls] + [Seed(u, "registry") for u in reg_urls]
             + [Seed(_company_url(n), "company") for n in visible[:4]]
             + [Seed(u, "news") for u in news_urls[:4]])
    rng.shuffle(seeds)

    # aliases actually used on pages
    for ent in b.entities.values():
        if ent.entity_type is CO:
            ent.aliases = sorted({a for url in ent.pages for a in _aliases_on(b.pages[url]["text"], ent.name)})

    entities = sorted(b.entities.values(), key=lambda e: (e.entity_type.value, e.name))
    truth = WorldTruth(entities, b.relations, {u: list(m) for u, m in b.mentions.items()})

    sector_counts = {s: sum(1 for n in present if info[n]["sector"] == s) for s in sectors}
    priors = Priors(
        sectors={s: max(1, math.floor(0.5 * v)) for s, v in sector_counts.items() if v},
        locations={loc: sum(1 for n in present if info[n]["loc"] == loc) for loc in geo_gap_locs},
    )
    web = {"pages": [b.pages[u] for u in sorted(b.pages)], "robots": b.robots,
           "meta": {"config": asdict(c)}}
    return World(web, truth, seeds, priors, c)


def _aliases_on(text: str, name: str) -> list[str]:
    return [f"{name} {s}" for s in _SUFFIXES if f"{name} {s}" in text]


# -- evaluation ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Evaluation:
    discovered: int
    tp: int
    gt_size: int

    @property
    def precision(self) -> float:
        return self.tp / self.discovered if self.discovered else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.gt_size if self.gt_size else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def metrics_from_counts(discovered: int, tp: int, gt_size: int) -> Evaluation:
    if not 0 <= tp <= min(discovered, gt_size) and not (discovered == 0 and tp == 0):
        raise ValueError("true positives exceed discovered or ground-truth size")
    return Evaluation(discovered, tp, gt_size)


def discovered_company_names(graph: KnowledgeGraph) -> set[str]:
    return {e.canonical_name for e in graph.companies()}


def evaluate_against_truth(graph: KnowledgeGraph, truth: WorldTruth) -> Evaluation:
    found = discovered_company_names(graph)
    gt = truth.ground_truth_names()
    return Evaluation(len(found), len(found & gt), len(gt))


class EfficiencyError(ValueError):
    pass


def crawl_efficiency(n_discovered: int, pages_used: int) -> float:
    if pages_used < 1:
        raise EfficiencyError("crawl efficiency undefined without fetched pages")
    return n_discovered / pages_used
