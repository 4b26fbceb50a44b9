"""Random and planted dynamic graphs for checks and demos."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_data import DynamicGraph, EdgeList, normalize_snapshots
from .model import Encoder, EncoderConfig, ModelParams, init_params, predict_batch
from .tensor_core import SparseSnapshots


@dataclass
class Instance:
    """A small random problem for gradient and oracle checks."""

    a_norm: SparseSnapshots
    cfg: EncoderConfig
    params: ModelParams
    obs: np.ndarray
    targets: np.ndarray


def random_adjacency(rng: np.random.Generator, n: int, t_slots: int, p: float = 0.35) -> np.ndarray:
    a = (rng.random((n, n, t_slots)) < p).astype(np.float64)
    for t in range(t_slots):
        np.fill_diagonal(a[:, :, t], 0.0)
    return a


def random_instance(seed: int, n: int = 6, fdim: int = 4, t_slots: int = 5, layers: int = 2,
                    n_obs: int = 12, band: int = 3, m_variant: str = "M1",
                    variant: str = "tlgcn", target_scale: float = 2.0) -> Instance:
    rng = np.random.default_rng(seed)
    a = random_adjacency(rng, n, t_slots)
    a_norm = normalize_snapshots(SparseSnapshots.from_dense(a))
    cfg = EncoderConfig.build(t_slots, layers, fdim, band, m_variant)
    params = init_params(n, cfg, seed + 1, variant)
    # nonzero bias so the head_b gradient is not degenerate
    params.head_b = float(rng.normal())
    obs = np.stack([rng.integers(0, n, n_obs), rng.integers(0, n, n_obs),
                    rng.integers(0, t_slots, n_obs)], axis=1)
    targets = rng.normal(0.0, target_scale, n_obs)
    return Instance(a_norm, cfg, params, obs, targets)


def planted_graph(n: int = 50, t_slots: int = 10, edges_per_slot: int = 300, fdim: int = 16,
                  layers: int = 2, band: int = 5, m_variant: str = "M1", noise: float = 0.1,
                  signal: float = 3.0, seed: int = 0) -> DynamicGraph:
    """Targets from a hidden linear head over a hidden feature tensor.

    The hidden features are propagated by the TLGCN encoder over the
    graph's own normalised adjacency; ``noise`` is the standard deviation
    of the additive Gaussian noise on each target.
    """
    rng = np.random.default_rng(seed)
    slots, src, dst = [], [], []
    for t in range(t_slots):
        seen = set()
        while len(seen) < edges_per_slot:
            i, j = (int(v) for v in rng.integers(0, n, 2))
            if i != j:
                seen.add((i, j))
        for i, j in sorted(seen):
            slots.append(t)
            src.append(i)
            dst.append(j)
    obs_t = np.asarray(slots, dtype=np.int64)
    obs_i = np.asarray(src, dtype=np.int64)
    obs_j = np.asarray(dst, dtype=np.int64)
    adjacency = SparseSnapshots.from_triplets(n, t_slots, obs_t, obs_i, obs_j)

    cfg = EncoderConfig.build(t_slots, layers, fdim, band, m_variant)
    hidden = ModelParams(x=rng.normal(0.0, 1.0, (n, fdim, t_slots)),
                         head_w=rng.normal(0.0, 1.0, 2 * fdim), head_b=float(rng.normal()))
    h = Encoder(normalize_snapshots(adjacency), cfg).forward(hidden)
    obs = np.stack([obs_i, obs_j, obs_t], axis=1)
    clean = predict_batch(h, obs, hidden)
    clean = (clean - clean.mean()) / clean.std() * signal + hidden.head_b
    y = clean + rng.normal(0.0, noise, len(clean))
    return DynamicGraph(n=n, t_slots=t_slots, adjacency=adjacency, obs_i=obs_i, obs_j=obs_j,
                        obs_t=obs_t, obs_y=y, node_ids=np.arange(n),
                        meta={"synthetic": True, "seed": seed, "noise": noise})


def graph_to_edges(g: DynamicGraph) -> EdgeList:
    """Edge list whose timestamps are the slot indices of ``g``."""
    return EdgeList(src=g.obs_i.copy(), dst=g.obs_j.copy(), weight=g.obs_y.copy(),
                    timestamp=g.obs_t.astype(np.float64), node_ids=np.arange(g.n))


def write_edge_csv(edges: EdgeList, path) -> None:
    with open(path, "w") as fh:
        fh.write("src,dst,weight,timestamp\n")
        for e in edges:
            fh.write(f"{edges.node_ids[e.src]},{edges.node_ids[e.dst]},{e.weight!r},{int(e.timestamp)}\n")
