"""DistMult embeddings for suggesting missing supplies_to edges.

Score: s(h, r, t) = sum_i e_h[i] * w_r[i] * e_t[i]. Training minimises mean
binary cross-entropy with logits over the positive triples and one
tail-corrupted negative per positive, resampled every epoch, using
full-batch Adam.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .kg import KnowledgeGraph, RelationType

RELATIONS = list(RelationType)
REL_INDEX = {r: i for i, r in enumerate(RELATIONS)}


@dataclass
class TrainConfig:
    dim: int = 100
    epochs: int = 50
    lr: float = 0.01
    init_range: float = 0.1
    optimizer: str = "adam"  # or "sgd"
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class EmbeddingModel:
    entity_ids: list[int]
    entity_vectors: np.ndarray  # (n_entities, dim)
    relation_vectors: np.ndarray  # (n_relations, dim)
    losses: list[float] = field(default_factory=list)
    config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        self.row = {eid: i for i, eid in enumerate(self.entity_ids)}

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")

    def vector(self, eid: int) -> np.ndarray:
        return self.entity_vectors[self.row[eid]]

    def score(self, head: int, relation: RelationType, tail: int) -> float:
        return float(np.sum(self.vector(head) * self.relation_vectors[REL_INDEX[relation]]
                            * self.vector(tail)))

    def export(self, destination: str | Path, graph: KnowledgeGraph | None = None) -> None:
        with Path(destination).open("w", encoding="utf-8") as fh:
            for eid, vec in zip(self.entity_ids, self.entity_vectors):
                name = graph.entities[eid].name if graph is not None else str(eid)
                fh.write(json.dumps({"kind": "entity", "name": name,
                                     "vector": [float(x) for x in vec]}) + "\n")
            for rel, vec in zip(RELATIONS, self.relation_vectors):
                fh.write(json.dumps({"kind": "relation", "name": rel.value,
                                     "vector": [float(x) for x in vec]}) + "\n")


class TrainingError(ValueError):
    pass


def scores(E: np.ndarray, R: np.ndarray, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij,ij->i", E[h], R[r], E[t])


def loss_and_grad(E: np.ndarray, R: np.ndarray, h: np.ndarray, r: np.ndarray, t: np.ndarray,
                  y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean BCE-with-logits over the given triples and its exact gradient."""
    s = scores(E, R, h, r, t)
    loss = float(np.mean(np.logaddexp(0.0, s) - y * s))
    g = (1.0 / (1.0 + np.exp(-s)) - y) / len(s)
    gE = np.zeros_like(E)
    gR = np.zeros_like(R)
    np.add.at(gE, h, g[:, None] * R[r] * E[t])
    np.add.at(gE, t, g[:, None] * R[r] * E[h])
    np.add.at(gR, r, g[:, None] * E[h] * E[t])
    return loss, gE, gR


def _triples(graph: KnowledgeGraph, row: dict[int, int]) -> np.ndarray:
    seen = set()
    out = []
    for rel in graph.relations:
        key = (row[rel.source_id], REL_INDEX[rel.relation_type], row[rel.target_id])
        if key not in seen:
            seen.add(key)
            out.append(key)
    return np.array(out, dtype=np.int64).reshape(-1, 3)


def train(graph: KnowledgeGraph, seed: int = 0, config: TrainConfig | None = None) -> EmbeddingModel:
    config = config or TrainConfig()
    if not graph.relations:
        raise TrainingError("cannot train on a graph without relations")
    ids = sorted(graph.entities)
    row = {eid: i for i, eid in enumerate(ids)}
    triples = _triples(graph, row)
    rng = np.random.default_rng(seed)
    a = config.init_range
    E = rng.uniform(-a, a, (len(ids), config.dim))
    R = rng.uniform(-a, a, (len(RELATIONS), config.dim))

    h, r, t = triples.T
    n_pos = len(triples)
    hh = np.concatenate([h, h])
    rr = np.concatenate([r, r])
    y = np.concatenate([np.ones(n_pos), np.zeros(n_pos)])
    m = [np.zeros_like(E), np.zeros_like(R)]
    v = [np.zeros_like(E), np.zeros_like(R)]
    b1, b2 = config.betas
    losses = []
    for epoch in range(1, config.epochs + 1):
        t_neg = rng.integers(0, len(ids), n_pos)
        loss, gE, gR = loss_and_grad(E, R, hh, rr, np.concatenate([t, t_neg]), y)
        losses.append(loss)
        for k, (P, G) in enumerate(((E, gE), (R, gR))):
            if config.optimizer == "sgd":
                P -= config.lr * G
                continue
            m[k] = b1 * m[k] + (1 - b1) * G
            v[k] = b2 * v[k] + (1 - b2) * G * G
            m_hat = m[k] / (1 - b1 ** epoch)
            v_hat = v[k] / (1 - b2 ** epoch)
            P -= config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    if not losses:
        # no updates: report the loss of the initial parameters on one sampled negative set
        t_neg = rng.integers(0, len(ids), n_pos)
        losses.append(loss_and_grad(E, R, hh, rr, np.concatenate([t, t_neg]), y)[0])
    return EmbeddingModel(ids, E, R, losses, config)


@dataclass(frozen=True)
class PredictedLink:
    head: int
    tail: int
    head_name: str
    tail_name: str
    score: float
    rank: int
    relation: RelationType = RelationType.SUPPLIES_TO


def predict_top_k(model: EmbeddingModel, graph: KnowledgeGraph, k: int = 20) -> list[PredictedLink]:
    """Highest-scoring absent supplies_to edges between distinct companies."""
    companies = sorted((e for e in graph.companies() if e.id in model.row),
                       key=lambda e: (e.name, e.id))
    if len(companies) < 2:
        return []
    idx = np.array([model.row[e.id] for e in companies])
    C = model.entity_vectors[idx]
    w = model.relation_vectors[REL_INDEX[RelationType.SUPPLIES_TO]]
    S = (C * w) @ C.T
    pos = {c.id: i for i, c in enumerate(companies)}
    mask = np.ones_like(S, dtype=bool)
    np.fill_diagonal(mask, False)
    for rel in graph.relations_of_type(RelationType.SUPPLIES_TO):
        if rel.source_id in pos and rel.target_id in pos:
            mask[pos[rel.source_id], pos[rel.target_id]] = False
    hi, ti = np.nonzero(mask)
    vals = S[hi, ti]
    # companies are name-sorted, so (head, tail) index order is the name tie-break
    order = np.lexsort((ti, hi, -vals))[:k]
    return [PredictedLink(companies[hi[o]].id, companies[ti[o]].id, companies[hi[o]].name,
                          companies[ti[o]].name, float(vals[o]), rank + 1)
            for rank, o in enumerate(order)]


# -- retroactive evaluation -----------------------------------------------------------

@dataclass(frozen=True)
class RetroEvalRow:
    iteration: int
    n_entities: int
    loss: float
    n_predictions: int
    link_confirmation_rate: float
    neighborhood_growth_rate: float


def _supplies_keys(graph: KnowledgeGraph) -> set[tuple[str, str]]:
    return {(graph.entities[r.source_id].canonical_name, graph.entities[r.target_id].canonical_name)
            for r in graph.relations_of_type(RelationType.SUPPLIES_TO)}


def _degree_by_key(graph: KnowledgeGraph) -> dict[tuple, int]:
    return {graph.entities[eid].key: d for eid, d in graph.degrees().items()}


def retro_eval(graphs: Sequence[KnowledgeGraph], seed: int = 0, k: int = 20,
               config: TrainConfig | None = None) -> list[RetroEvalRow]:
    """Train on each G_t, predict top-k, and score against later snapshots."""
    if len(graphs) < 2:
        raise ValueError("retroactive evaluation needs at least two snapshots")
    rows = []
    for t in range(len(graphs) - 1):
        g = graphs[t]
        if not g.relations:
            rows.append(RetroEvalRow(t + 1, len(g), float("nan"), 0, 0.0, 0.0))
            continue
        model = train(g, seed=seed, config=config)
        preds = predict_top_k(model, g, k)
        future: set[tuple[str, str]] = set()
        for later in graphs[t + 1:]:
            future |= _supplies_keys(later)
        confirmed = sum((g.entities[p.head].canonical_name, g.entities[p.tail].canonical_name) in future
                        for p in preds)
        involved = {g.entities[e].key for p in preds for e in (p.head, p.tail)}
        before, after = _degree_by_key(g), _degree_by_key(graphs[t + 1])
        grew = sum(after.get(key, 0) > before.get(key, 0) for key in involved)
        rows.append(RetroEvalRow(
            t + 1, len(g), model.final_loss, len(preds),
            confirmed / len(preds) if preds else 0.0,
            grew / len(involved) if involved else 0.0))
    return rows

