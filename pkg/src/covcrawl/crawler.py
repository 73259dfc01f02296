"""Crawl frontier, fetch backends and the per-iteration crawl loop."""
from __future__ import annotations

import enum
import hashlib
import heapq
import itertools
import json
import logging
import re
import threading
import time
import urllib.robotparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import timedelta
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Protocol
from urllib.parse import urldefrag, urljoin, urlsplit, urlunsplit

from .extraction import PageText

log = logging.getLogger(__name__)

DEFAULT_DELAY = 1.5
DEFAULT_CONCURRENCY = 10
PAGE_CACHE_TTL = timedelta(days=7)
SOURCE_TYPE_RANK = {"directory": 0, "registry": 1, "company": 2, "news": 3}
_SEED_PRIORITY = 1e6
_TOKEN = re.compile(r"[a-z0-9]+")


class CrawlStrategy(str, enum.Enum):
    BFS = "BFS"
    FOCUSED = "FOCUSED"
    WK_SINGLE_PASS = "WK_SINGLE_PASS"
    WKW = "WKW"


class Origin(str, enum.Enum):
    SEED = "seed"
    OUTLINK = "outlink"
    GAP_QUERY = "gap_query"


def tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


# -- urls -------------------------------------------------------------------------

def normalize_url(url: str, base: str | None = None) -> str | None:
    """Resolve against ``base`` and canonicalize; non-http(s) links give None."""
    if base is not None:
        url = urljoin(base, url)
    url, _ = urldefrag(url.strip())
    parts = urlsplit(url)
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https") or not parts.hostname:
        return None
    host = parts.hostname.lower()
    port = parts.port
    if port and not ((scheme == "http" and port == 80) or (scheme == "https" and port == 443)):
        host = f"{host}:{port}"
    path = parts.path or "/"
    return urlunsplit((scheme, host, path, parts.query, ""))


def host_of(url: str) -> str:
    return (urlsplit(url).hostname or "").lower()


def registered_domain(url: str) -> str:
    """Last two host labels; a public-suffix list is out of scope."""
    labels = host_of(url).split(".")
    return ".".join(labels[-2:])


# -- priority -----------------------------------------------------------------------

@dataclass(frozen=True)
class Weights:
    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("priority weights must be non-negative")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("priority weights must sum to 1")

    @classmethod
    def normalized(cls, alpha: float, beta: float, gamma: float) -> "Weights":
        s = alpha + beta + gamma
        return cls(alpha / s, beta / s, gamma / s)


@dataclass
class FrontierItem:
    url: str
    relevance: float = 0.0
    novelty: float = 0.0
    gap_score: float = 0.0
    priority: float = 0.0
    origin: Origin = Origin.SEED
    discovered_iteration: int = 1
    anchor: str = ""
    queries: frozenset[str] = frozenset()
    source_type: str | None = None
    parent: str | None = None


@dataclass
class PriorityContext:
    """Everything the priority function reads from the current crawl state."""
    lexicon: set[str] = field(default_factory=set)
    seen_domains: set[str] = field(default_factory=set)
    alias_tokens: set[str] = field(default_factory=set)
    signals: list = field(default_factory=list)  # objects with .severity and .queries
    relevance_fn: Callable[[str, str], float] | None = None


def lexicon_relevance(url: str, anchor: str, lexicon: set[str]) -> float:
    """Share of url-path and anchor tokens covered by lexicon terms."""
    words = tokens(urlsplit(url).path) + tokens(anchor)
    if not words or not lexicon:
        return 0.0
    lex_tokens = set()
    for term in lexicon:
        lex_tokens.update(tokens(term))
    hit = sum(w in lex_tokens for w in words)
    return min(1.0, hit / len(words))


def compute_priority(url: str, context: PriorityContext, weights: Weights = Weights(),
                     anchor: str = "", origin: Origin = Origin.SEED,
                     queries: Iterable[str] = (), iteration: int = 1) -> FrontierItem:
    if context.relevance_fn is not None:
        relevance = context.relevance_fn(url, anchor)
    else:
        relevance = lexicon_relevance(url, anchor, context.lexicon)
    relevance = min(1.0, max(0.0, relevance))

    if registered_domain(url) not in context.seen_domains:
        novelty = 1.0
    else:
        words = tokens(anchor)
        novelty = (sum(w not in context.alias_tokens for w in words) / len(words)) if words else 0.0

    queries = frozenset(queries)
    gap = 0.0
    if origin is Origin.GAP_QUERY:
        for sig in context.signals:
            if queries & set(sig.queries):
                gap = max(gap, sig.severity)
    priority = weights.alpha * relevance + weights.beta * novelty + weights.gamma * gap
    return FrontierItem(url, relevance, novelty, gap, priority, origin, iteration, anchor, queries)


# -- frontier -----------------------------------------------------------------------

class Frontier:
    """URL queue in FIFO or priority mode; every url is admitted at most once."""

    def __init__(self, fifo: bool = True):
        self.fifo = fifo
        self._heap: list = []
        self._items: dict[str, FrontierItem] = {}
        self._seq: dict[str, int] = {}
        self._counter = itertools.count()
        self.seen: set[str] = set()

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, url: str) -> bool:
        return url in self._items

    def _key(self, item: FrontierItem):
        if self.fifo:
            return (self._seq[item.url],)
        return (-item.priority, item.url)

    def push(self, item: FrontierItem) -> bool:
        if item.url in self.seen:
            return False
        self.seen.add(item.url)
        self._items[item.url] = item
        self._seq[item.url] = next(self._counter)
        heapq.heappush(self._heap, (self._key(item), item.url))
        return True

    def promote(self, item: FrontierItem) -> bool:
        """Push, or replace a still-queued entry when ``item`` ranks higher."""
        if self.push(item):
            return True
        old = self._items.get(item.url)
        if old is None or item.priority <= old.priority:
            return False
        self._items[item.url] = item
        heapq.heappush(self._heap, (self._key(item), item.url))
        return True

    def pop(self) -> FrontierItem:
        while self._heap:
            _, url = heapq.heappop(self._heap)
            item = self._items.pop(url, None)
            if item is not None:
                return item
        raise IndexError("pop from empty frontier")

    def items(self) -> list[FrontierItem]:
        return list(self._items.values())

    def rescore(self, fn: Callable[[FrontierItem], FrontierItem] | None = None,
                fifo: bool | None = None) -> None:
        """Recompute queued priorities (and optionally switch mode), then rebuild."""
        if fifo is not None:
            self.fifo = fifo
        if fn is not None:
            self._items = {u: fn(it) for u, it in self._items.items()}
        self._heap = [(self._key(it), u) for u, it in self._items.items()]
        heapq.heapify(self._heap)


# -- fetching -------------------------------------------------------------------------

class FetchStatus(str, enum.Enum):
    OK = "ok"
    CACHED = "cached"
    ROBOTS_DENIED = "robots_denied"
    HTTP_ERROR = "http_error"
    TIMEOUT = "timeout"


@dataclass
class FetchOutcome:
    url: str
    status: FetchStatus
    page: PageText | None = None
    links: list[tuple[str, str]] = field(default_factory=list)
    code: int | None = None

    @property
    def succeeded(self) -> bool:
        return self.status in (FetchStatus.OK, FetchStatus.CACHED)

    @property
    def made_request(self) -> bool:
        return self.status in (FetchStatus.OK, FetchStatus.HTTP_ERROR, FetchStatus.TIMEOUT)


@dataclass
class CrawlBudget:
    max_pages: int
    pages_used: int = 0
    per_domain_delay: float = DEFAULT_DELAY
    max_concurrency: int = DEFAULT_CONCURRENCY
    count_cache_hits: bool = False

    def __post_init__(self):
        if self.max_pages < 0 or self.max_concurrency < 1:
            raise ValueError("invalid crawl budget")

    @property
    def remaining(self) -> int:
        return self.max_pages - self.pages_used

    @property
    def exhausted(self) -> bool:
        return self.remaining <= 0


class Politeness:
    """Per-domain request spacing.

    With ``virtual=True`` no sleeping happens: a simulated clock jumps to the
    earliest permitted start, and every start time is recorded so the
    spacing contract can be checked afterwards.
    """

    def __init__(self, delay: float = DEFAULT_DELAY, virtual: bool = False,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.delay = delay
        self.virtual = virtual
        self._clock = clock
        self._sleep = sleep
        self._now = 0.0
        self._next: dict[str, float] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self.starts: list[tuple[str, float]] = []

    def _lock_for(self, domain: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(domain, threading.Lock())

    def acquire(self, domain: str) -> float:
        """Block (or advance virtual time) until ``domain`` may be hit; return start time."""
        with self._lock_for(domain):
            if self.virtual:
                start = max(self._now, self._next.get(domain, float("-inf")))
                self._now = start
            else:
                wait = self._next.get(domain, float("-inf")) - self._clock()
                if wait > 0:
                    self._sleep(wait)
                start = self._clock()
            self._next[domain] = start + self.delay
            with self._guard:
                self.starts.append((domain, start))
            return start

    def violations(self) -> list[tuple[str, float, float]]:
        last: dict[str, float] = {}
        bad = []
        for domain, t in self.starts:
            if domain in last and t - last[domain] < self.delay - 1e-9:
                bad.append((domain, last[domain], t))
            last[domain] = t
        return bad


class Backend(Protocol):
    def fetch(self, url: str, iteration: int = 1) -> FetchOutcome: ...


def _link_pairs(raw: Iterable) -> list[tuple[str, str]]:
    out = []
    for link in raw:
        if isinstance(link, str):
            out.append((link, ""))
        else:
            out.append((link["href"], link.get("anchor", "")))
    return out


@dataclass
class SimPage:
    url: str
    text: str
    links: list[tuple[str, str]]
    kind: str = "page"


class SimulatedWeb:
    """In-memory web graph read from the simulated-web JSON format."""

    def __init__(self, pages: Iterable[SimPage], robots: dict[str, str] | None = None):
        self.pages = {normalize_url(p.url): p for p in pages}
        self.robots: dict[str, urllib.robotparser.RobotFileParser] = {}
        for host, text in (robots or {}).items():
            rp = urllib.robotparser.RobotFileParser()
            rp.parse(text.splitlines())
            self.robots[host.lower()] = rp

    @classmethod
    def from_dict(cls, data: dict) -> "SimulatedWeb":
        pages = [SimPage(p["url"], p.get("text", ""), _link_pairs(p.get("links", [])),
                         p.get("kind", "page")) for p in data["pages"]]
        return cls(pages, data.get("robots"))

    @classmethod
    def load(cls, path: str | Path) -> "SimulatedWeb":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def allowed(self, url: str) -> bool:
        rp = self.robots.get(host_of(url))
        return True if rp is None else rp.can_fetch("*", url)


class SimulatedBackend:
    def __init__(self, web: SimulatedWeb, politeness: Politeness | None = None):
        self.web = web
        self.politeness = politeness or Politeness(virtual=True)
        self.requests: list[str] = []

    def fetch(self, url: str, iteration: int = 1) -> FetchOutcome:
        if not self.web.allowed(url):
            return FetchOutcome(url, FetchStatus.ROBOTS_DENIED)
        self.politeness.acquire(host_of(url))
        self.requests.append(url)
        page = self.web.pages.get(normalize_url(url))
        if page is None:
            return FetchOutcome(url, FetchStatus.HTTP_ERROR, code=404)
        links = [(h, a) for h, a in page.links]
        return FetchOutcome(url, FetchStatus.OK, PageText(url, page.text, links, iteration), links)


class _HTMLText(HTMLParser):
    def __init__(self):
        super().__init__()
        self.parts: list[str] = []
        self.links: list[tuple[str, str]] = []
        self._href: str | None = None
        self._anchor: list[str] = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip += 1
        elif tag == "a":
            self._href = dict(attrs).get("href")
            self._anchor = []
        elif tag in ("p", "br", "li", "div", "tr", "h1", "h2", "h3"):
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip:
            self._skip -= 1
        elif tag == "a" and self._href is not None:
            self.links.append((self._href, " ".join("".join(self._anchor).split())))
            self._href = None

    def handle_data(self, data):
        if self._skip:
            return
        self.parts.append(data)
        if self._href is not None:
            self._anchor.append(data)


def parse_html(html: str) -> tuple[str, list[tuple[str, str]]]:
    p = _HTMLText()
    p.feed(html)
    text = "\n".join(" ".join(line.split()) for line in "".join(p.parts).splitlines())
    return text.strip(), p.links


class LiveBackend:
    """HTTP backend honouring robots.txt and per-domain spacing."""

    def __init__(self, client=None, politeness: Politeness | None = None,
                 user_agent: str = "covcrawl/0.1", timeout: float = 20.0):
        import httpx

        self._httpx = httpx
        self.client = client or httpx.Client(timeout=timeout, follow_redirects=True,
                                             headers={"User-Agent": user_agent})
        self.politeness = politeness or Politeness()
        self.user_agent = user_agent
        self._robots: dict[str, urllib.robotparser.RobotFileParser | None] = {}
        self._robots_lock = threading.Lock()

    def _robots_for(self, url: str):
        parts = urlsplit(url)
        base = f"{parts.scheme}://{parts.netloc}"
        with self._robots_lock:
            if base in self._robots:
                return self._robots[base]
        rp = None
        try:
            self.politeness.acquire(host_of(url))
            resp = self.client.get(base + "/robots.txt")
            if resp.status_code == 200:
                rp = urllib.robotparser.RobotFileParser()
                rp.parse(resp.text.splitlines())
        except self._httpx.HTTPError:
            rp = None
        with self._robots_lock:
            self._robots[base] = rp
        return rp

    def fetch(self, url: str, iteration: int = 1) -> FetchOutcome:
        rp = self._robots_for(url)
        if rp is not None and not rp.can_fetch(self.user_agent, url):
            return FetchOutcome(url, FetchStatus.ROBOTS_DENIED)
        self.politeness.acquire(host_of(url))
        try:
            resp = self.client.get(url)
        except self._httpx.TimeoutException:
            return FetchOutcome(url, FetchStatus.TIMEOUT)
        except self._httpx.HTTPError:
            return FetchOutcome(url, FetchStatus.HTTP_ERROR, code=None)
        if resp.status_code >= 400:
            return FetchOutcome(url, FetchStatus.HTTP_ERROR, code=resp.status_code)
        if "html" in resp.headers.get("content-type", "html"):
            text, links = parse_html(resp.text)
        else:
            text, links = resp.text, []
        return FetchOutcome(url, FetchStatus.OK, PageText(url, text, links, iteration), links)


class PageCache:
    """On-disk page cache with TTL; hits are returned as ``CACHED`` outcomes."""

    def __init__(self, directory: str | Path, ttl: timedelta = PAGE_CACHE_TTL,
                 clock: Callable[[], float] = time.time):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.ttl = ttl.total_seconds()
        self.clock = clock

    def _path(self, url: str) -> Path:
        return self.directory / (hashlib.sha256(url.encode()).hexdigest() + ".json")

    def get(self, url: str, iteration: int = 1) -> FetchOutcome | None:
        path = self._path(url)
        try:
            rec = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        if self.clock() - rec.get("stored", 0) > self.ttl:
            return None
        links = [tuple(x) for x in rec["links"]]
        return FetchOutcome(url, FetchStatus.CACHED, PageText(url, rec["text"], links, iteration), links)

    def put(self, outcome: FetchOutcome) -> None:
        if outcome.status is not FetchStatus.OK:
            return
        rec = {"url": outcome.url, "stored": self.clock(), "text": outcome.page.text,
               "links": [list(x) for x in outcome.links]}
        self._path(outcome.url).write_text(json.dumps(rec), encoding="utf-8")


class Fetcher:
    """Backend plus optional page cache; fetches batches concurrently."""

    def __init__(self, backend: Backend, cache: PageCache | None = None,
                 max_concurrency: int = DEFAULT_CONCURRENCY):
        self.backend = backend
        self.cache = cache
        self.max_concurrency = max_concurrency

    def fetch(self, url: str, iteration: int = 1) -> FetchOutcome:
        if self.cache is not None:
            hit = self.cache.get(url, iteration)
            if hit is not None:
                return hit
        outcome = self.backend.fetch(url, iteration)
        if self.cache is not None:
            self.cache.put(outcome)
        return outcome

    def fetch_many(self, urls: list[str], iteration: int = 1) -> list[FetchOutcome]:
        if len(urls) <= 1 or self.max_concurrency == 1 or isinstance(self.backend, SimulatedBackend):
            return [self.fetch(u, iteration) for u in urls]
        with ThreadPoolExecutor(max_workers=min(self.max_concurrency, len(urls))) as pool:
            return list(pool.map(lambda u: self.fetch(u, iteration), urls))


def fetch(url: str, backend: Backend, iteration: int = 1) -> FetchOutcome:
    return backend.fetch(url, iteration)


# -- seeds ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Seed:
    url: str
    source_type: str = "company"

    def __post_init__(self):
        if self.source_type not in SOURCE_TYPE_RANK:
            raise ValueError(f"unknown source_type {self.source_type!r}")


def load_seeds(path: str | Path) -> list[Seed]:
    seeds = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                seeds.append(Seed(rec["url"], rec.get("source_type", "company")))
    return seeds


def write_seeds(seeds: Iterable[Seed], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for s in seeds:
            fh.write(json.dumps({"url": s.url, "source_type": s.source_type}) + "\n")


# -- crawl loop -------------------------------------------------------------------------

@dataclass
class IterationCrawl:
    pages: list[PageText]
    outcomes: list[FetchOutcome]
    requests: int


class Crawler:
    """Owns the frontier and budget; runs one budgeted crawl iteration at a time.

    ``score_link(parent_page, url, anchor, parent_yield, iteration)`` returns the
    FrontierItem for an outlink; strategies without one use FIFO order.
    """

    def __init__(self, strategy: CrawlStrategy, fetcher: Fetcher, budget: CrawlBudget,
                 frontier: Frontier | None = None):
        self.strategy = CrawlStrategy(strategy)
        self.fetcher = fetcher
        self.budget = budget
        fifo = self.strategy is not CrawlStrategy.FOCUSED
        self.frontier = frontier if frontier is not None else Frontier(fifo=fifo)
        self.fetched: set[str] = set()
        self.outcomes: list[FetchOutcome] = []
        self.score_link: Callable[..., FrontierItem] | None = None

    def add_seeds(self, seeds: Iterable[Seed], iteration: int = 1) -> None:
        for s in seeds:
            url = normalize_url(s.url)
            if url is None:
                continue
            prio = 0.0
            if self.strategy is CrawlStrategy.FOCUSED:
                prio = _SEED_PRIORITY - SOURCE_TYPE_RANK[s.source_type]
            self.frontier.push(FrontierItem(url, priority=prio, origin=Origin.SEED,
                                            discovered_iteration=iteration,
                                            source_type=s.source_type))

    def _outlink_item(self, page: PageText, href: str, anchor: str, yield_: int,
                      iteration: int) -> FrontierItem | None:
        url = normalize_url(href, page.url)
        if url is None:
            return None
        if self.score_link is not None and not self.frontier.fifo:
            item = self.score_link(page, url, anchor, yield_, iteration)
        else:
            item = FrontierItem(url, origin=Origin.OUTLINK, discovered_iteration=iteration,
                                anchor=anchor)
            if self.strategy is CrawlStrategy.FOCUSED:
                item.priority = float(yield_)
        item.parent = page.url
        return item

    def run_iteration(self, iteration: int, page_cap: int | None = None,
                      page_yield: Callable[[PageText], int] | None = None) -> IterationCrawl:
        cap = self.budget.remaining if page_cap is None else min(page_cap, self.budget.remaining)
        pages: list[PageText] = []
        outcomes: list[FetchOutcome] = []
        used = 0
        while used < cap and len(self.frontier):
            batch = []
            while len(batch) < min(self.budget.max_concurrency, cap - used) and len(self.frontier):
                item = self.frontier.pop()
                if item.url not in self.fetched:
                    batch.append(item)
            for item, outcome in zip(batch, self.fetcher.fetch_many([b.url for b in batch], iteration)):
                self.fetched.add(item.url)
                outcomes.append(outcome)
                charge = outcome.made_request or (outcome.status is FetchStatus.CACHED
                                                  and self.budget.count_cache_hits)
                if charge:
                    used += 1
                    self.budget.pages_used += 1
                if not outcome.succeeded:
                    log.info("fetch %s -> %s %s", item.url, outcome.status.value, outcome.code or "")
                    continue
                pages.append(outcome.page)
                yield_ = page_yield(outcome.page) if page_yield else 0
                for href, anchor in outcome.links:
                    child = self._outlink_item(outcome.page, href, anchor, yield_, iteration)
                    if child is not None and child.url not in self.fetched:
                        self.frontier.push(child)
        self.outcomes.extend(outcomes)
        return IterationCrawl(pages, outcomes, used)


def run_iteration(strategy: CrawlStrategy, frontier: Frontier, budget: CrawlBudget,
                  fetcher: Fetcher | Backend, iteration: int = 1,
                  page_cap: int | None = None) -> tuple[list[PageText], Frontier, CrawlBudget]:
    """Functional wrapper around :class:`Crawler` for one iteration."""
    if not isinstance(fetcher, Fetcher):
        fetcher = Fetcher(fetcher, max_concurrency=budget.max_concurrency)
    crawler = Crawler(strategy, fetcher, budget, frontier)
    result = crawler.run_iteration(iteration, page_cap)
    return result.pages, crawler.frontier, budget
