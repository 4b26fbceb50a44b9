"""Objective, hand-written gradients, Adam and the training loop."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .graph_data import DynamicGraph, SplitSet, mask_adjacency_to_train, normalize_snapshots
from .metrics import mae, rmse
from .model import (
    Encoder,
    EncoderConfig,
    ModelParams,
    Tape,
    init_params,
    predict_batch,
)
from .tensor_core import InvalidArgument, SparseSnapshots

log = logging.getLogger(__name__)

LR_GRID = (0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05)
L2_GRID = (0.00001, 0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    l2: float = 1e-4
    beta: float = 1.0
    max_epochs: int = 300
    patience: int = 20
    adam_betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidArgument("learning rate must be positive")
        if self.l2 < 0:
            raise InvalidArgument("l2 coefficient must be non-negative")
        if not self.beta > 0:
            raise InvalidArgument("smooth-L1 beta must be positive")
        if self.max_epochs < 1 or self.patience < 1:
            raise InvalidArgument("max_epochs and patience must be >= 1")
        if self.patience > self.max_epochs:
            raise InvalidArgument("patience cannot exceed max_epochs")

    def as_dict(self) -> dict:
        return {"lr": self.lr, "l2": self.l2, "beta": self.beta, "max_epochs": self.max_epochs,
                "patience": self.patience, "adam_betas": list(self.adam_betas), "eps": self.eps,
                "seed": self.seed}


def smooth_l1(pred, target, beta: float = 1.0):
    """Quadratic ``d^2 / (2 beta)`` below ``beta``, linear ``d - beta/2`` above."""
    d = np.abs(np.asarray(target, dtype=np.float64) - np.asarray(pred, dtype=np.float64))
    out = np.where(d < beta, d * d / (2.0 * beta), d - 0.5 * beta)
    return float(out) if out.ndim == 0 else out


def smooth_l1_grad(pred, target, beta: float = 1.0):
    """Derivative with respect to ``pred``."""
    r = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return np.clip(r / beta, -1.0, 1.0)


@dataclass
class GradientSet:
    x: np.ndarray
    head_w: np.ndarray
    head_b: float
    layer_weights: list[np.ndarray] | None = None

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"x": self.x, "head_w": self.head_w, "head_b": np.asarray(self.head_b, dtype=np.float64)}
        for l, w in enumerate(self.layer_weights or ()):
            out[f"w{l}"] = w
        return out

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "GradientSet":
        ws = []
        while f"w{len(ws)}" in arrays:
            ws.append(arrays[f"w{len(ws)}"])
        head_b = float(np.asarray(arrays["head_b"]).reshape(()))
        return cls(arrays["x"], arrays["head_w"], head_b, ws or None)


class Objective:
    """Smooth-L1 over a fixed observation set plus ``l2 * ||X||^2``."""

    def __init__(self, encoder: Encoder, obs, targets, tc: TrainConfig):
        obs = np.asarray(obs, dtype=np.int64).reshape(-1, 3)
        if len(obs) == 0:
            raise InvalidArgument("objective needs at least one observation")
        self.encoder = encoder
        self.obs = obs
        self.targets = np.asarray(targets, dtype=np.float64)
        if len(self.targets) != len(obs):
            raise InvalidArgument("observations and targets differ in length")
        self.tc = tc

    def loss(self, params: ModelParams) -> float:
        preds = predict_batch(self.encoder.forward(params), self.obs, params)
        return self._value(params, preds)

    def _value(self, params: ModelParams, preds: np.ndarray) -> float:
        data = float(np.sum(smooth_l1(preds, self.targets, self.tc.beta)))
        return data + self.tc.l2 * float(np.sum(params.x * params.x))

    def loss_and_grad(self, params: ModelParams) -> tuple[float, GradientSet]:
        tape = Tape()
        ht = self.encoder.forward_tm(params, tape)
        f = ht.shape[2]
        oi, oj, ot = self.obs[:, 0], self.obs[:, 1], self.obs[:, 2]
        hi, hj = ht[ot, oi], ht[ot, oj]
        preds = hi @ params.head_w[:f] + hj @ params.head_w[f:] + params.head_b
        loss = self._value(params, preds)

        r = smooth_l1_grad(preds, self.targets, self.tc.beta)
        d_w = np.concatenate([r @ hi, r @ hj])
        d_b = float(np.sum(r))
        d_ht = np.zeros_like(ht)
        np.add.at(d_ht, (ot, oi), np.outer(r, params.head_w[:f]))
        np.add.at(d_ht, (ot, oj), np.outer(r, params.head_w[f:]))

        d_x, d_ws = self.encoder.backward_tm(params, tape, d_ht)
        d_x += 2.0 * self.tc.l2 * params.x
        return loss, GradientSet(d_x, d_w, d_b, d_ws)


def _objective(params, a_norm, cfg, obs, targets, tc, encoder=None) -> Objective:
    enc = encoder or Encoder(a_norm, cfg, params.variant)
    return Objective(enc, obs, targets, tc)


def loss_total(params: ModelParams, a_norm: SparseSnapshots, cfg: EncoderConfig, obs, targets,
               tc: TrainConfig, encoder: Encoder | None = None) -> float:
    return _objective(params, a_norm, cfg, obs, targets, tc, encoder).loss(params)


def backward(params: ModelParams, a_norm: SparseSnapshots, cfg: EncoderConfig, obs, targets,
             tc: TrainConfig, encoder: Encoder | None = None) -> GradientSet:
    return _objective(params, a_norm, cfg, obs, targets, tc, encoder).loss_and_grad(params)[1]


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def grad_check_report(params: ModelParams, a_norm: SparseSnapshots, cfg: EncoderConfig, obs,
                      targets, tc: TrainConfig, step: float = 1e-5, grads: GradientSet | None = None,
                      max_coords: int = 10_000, seed: int = 0,
                      encoder: Encoder | None = None) -> dict[str, float]:
    """Max relative error per parameter family against central differences."""
    if not step > 0:
        raise InvalidArgument("finite-difference step must be positive")
    obj = _objective(params, a_norm, cfg, obs, targets, tc, encoder)
    if grads is None:
        grads = obj.loss_and_grad(params)[1]
    analytic = grads.arrays()
    base = {k: v.copy() for k, v in params.arrays().items()}
    sizes = {k: v.size for k, v in base.items()}
    coords = [(k, c) for k in base for c in range(sizes[k])]
    if len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(coords), size=max_coords, replace=False))
        coords = [coords[p] for p in pick]

    worst = {k: 0.0 for k in base}
    for name, c in coords:
        arrays = {k: v.copy() for k, v in base.items()}
        flat = arrays[name].reshape(-1)
        x0 = flat[c]
        flat[c] = x0 + step
        up = obj.loss(ModelParams.from_arrays(arrays, params.variant))
        flat[c] = x0 - step
        down = obj.loss(ModelParams.from_arrays(arrays, params.variant))
        numeric = (up - down) / (2.0 * step)
        err = float(relative_error(analytic[name].reshape(-1)[c], numeric))
        worst[name] = max(worst[name], err)
    return worst


def grad_check(params, a_norm, cfg, obs, targets, tc, step: float = 1e-5, **kwargs) -> float:
    return max(grad_check_report(params, a_norm, cfg, obs, targets, tc, step, **kwargs).values())


def relu_margin(encoder: Encoder, params: ModelParams) -> float:
    """Smallest ``|z|`` over nonzero pre-activations, ``inf`` without any.

    Exact zeros come from rows with no incoming signal; they stay zero under
    small perturbations, so only nonzero entries can cross the kink.
    """
    vals = [np.abs(z[z != 0]).min() for z in encoder.preactivations(params) if np.any(z != 0)]
    return float(min(vals)) if vals else float("inf")


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(params: ModelParams, grads: GradientSet, state: AdamState,
              tc: TrainConfig) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state."""
    b1, b2 = tc.adam_betas
    p_arr, g_arr = params.arrays(), grads.arrays()
    if p_arr.keys() != g_arr.keys():
        raise InvalidArgument("gradient set does not match parameters")
    t = state.step + 1
    bc1, bc2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    new_p, new_m, new_v = {}, {}, {}
    for k, p in p_arr.items():
        g = np.asarray(g_arr[k], dtype=np.float64)
        if g.shape != p.shape:
            raise InvalidArgument(f"gradient for {k} has shape {g.shape}, expected {p.shape}")
        m = b1 * state.m.get(k, 0.0) + (1.0 - b1) * g
        v = b2 * state.v.get(k, 0.0) + (1.0 - b2) * (g * g)
        new_p[k] = p - tc.lr * (m / bc1) / (np.sqrt(v / bc2) + tc.eps)
        new_m[k], new_v[k] = m, v
    return ModelParams.from_arrays(new_p, params.variant), AdamState(new_m, new_v, t)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_mae: float
    val_rmse: float
    wall_time: float


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochRecord]
    best_epoch: int
    initial_val_mae: float
    initial_val_rmse: float
    stopped_early: bool
    encoder: Encoder = field(repr=False)

    @property
    def best_val_mae(self) -> float:
        return min(r.val_mae for r in self.history)


def build_encoder(g: DynamicGraph, split: SplitSet, cfg: EncoderConfig, variant: str) -> Encoder:
    """Encoder over the train-only, normalised adjacency."""
    masked = mask_adjacency_to_train(g, split)
    return Encoder(normalize_snapshots(masked.adjacency), cfg, variant)


def train(g: DynamicGraph, split: SplitSet, cfg: EncoderConfig, tc: TrainConfig,
          variant: str = "tlgcn", callback: Callable[[EpochRecord], None] | None = None) -> TrainResult:
    """Full-batch Adam on the training observations with early stopping.

    One epoch is one gradient step. Validation MAE is measured after each
    step; training stops after ``max_epochs`` or ``patience`` epochs without
    a strict improvement. The parameters of the best epoch are returned.
    """
    encoder = build_encoder(g, split, cfg, variant)
    obj = Objective(encoder, g.observations(split.train), g.targets(split.train), tc)
    val_obs, val_y = g.observations(split.validation), g.targets(split.validation)

    params = init_params(g.n, cfg, tc.seed, variant)
    h0 = encoder.forward(params)
    p0 = predict_batch(h0, val_obs, params)
    init_mae, init_rmse = mae(p0, val_y), rmse(p0, val_y)

    state = AdamState()
    history: list[EpochRecord] = []
    best, best_params, best_epoch, wait = np.inf, params, 0, 0
    stopped = False
    start = time.perf_counter()
    for epoch in range(1, tc.max_epochs + 1):
        loss, grads = obj.loss_and_grad(params)
        params, state = adam_step(params, grads, state, tc)
        preds = predict_batch(encoder.forward(params), val_obs, params)
        rec = EpochRecord(epoch, loss, mae(preds, val_y), rmse(preds, val_y),
                          time.perf_counter() - start)
        history.append(rec)
        if callback:
            callback(rec)
        if rec.val_mae < best:
            best, best_params, best_epoch, wait = rec.val_mae, params, epoch, 0
        else:
            wait += 1
            if wait >= tc.patience:
                stopped = True
                break
    log.info("variant=%s best epoch %d val MAE %.6f", variant, best_epoch, best)
    return TrainResult(best_params, history, best_epoch, init_mae, init_rmse, stopped, encoder)


@dataclass
class GridResult:
    lr: float
    l2: float
    result: TrainResult


def _grid_point(job) -> TrainResult:
    g, split, cfg, tc, variant = job
    return train(g, split, cfg, tc, variant)


def grid_search(g: DynamicGraph, split: SplitSet, cfg: EncoderConfig, tc: TrainConfig,
                variant: str = "tlgcn", lrs=LR_GRID, l2s=L2_GRID,
                jobs: int = 1) -> tuple[GridResult, list[GridResult]]:
    """Train every (lr, l2) pair and pick the lowest best-epoch validation MAE.

    With ``jobs > 1`` the runs are spread over worker processes; each run is
    independent, so the results do not depend on ``jobs``. Ties go to the
    earlier grid point.
    """
    pairs = [(lr, l2) for lr in lrs for l2 in l2s]
    work = [(g, split, cfg, replace(tc, lr=lr, l2=l2), variant) for lr, l2 in pairs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_grid_point, work))
    else:
        results = [_grid_point(w) for w in work]
    runs = []
    for (lr, l2), res in zip(pairs, results):
        log.info("grid lr=%g l2=%g -> val MAE %.6f", lr, l2, res.best_val_mae)
        runs.append(GridResult(lr, l2, res))
    best = min(runs, key=lambda r: r.result.best_val_mae)
    return best, runs
