"""MAE / RMSE and split evaluation reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph_data import DynamicGraph, normalize_snapshots
from .model import Encoder, EncoderConfig, ModelParams, predict_batch
from .tensor_core import InvalidArgument


def _residuals(preds, targets) -> np.ndarray:
    p = np.asarray(preds, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if len(p) != len(t):
        raise InvalidArgument(f"length mismatch: {len(p)} predictions, {len(t)} targets")
    if len(p) == 0:
        raise InvalidArgument("metrics need at least one prediction")
    return t - p


def _scaled(preds, targets) -> tuple[float, np.ndarray]:
    """``(s, |r| / s)`` with ``s = max |r|``.

    Both metrics are computed on the scaled residuals: squares cannot under-
    or overflow, and equal magnitudes give exactly ``mae == rmse == s``.
    """
    r = np.abs(_residuals(preds, targets))
    s = float(r.max())
    if s == 0 or not np.isfinite(s):
        return s, np.ones_like(r)
    return s, r / s


def mae(preds, targets) -> float:
    s, q = _scaled(preds, targets)
    return float(s * np.mean(q))


def rmse(preds, targets) -> float:
    s, q = _scaled(preds, targets)
    return float(s * np.sqrt(np.mean(q * q)))


@dataclass
class EvalReport:
    split: str
    mae: float
    rmse: float
    count: int
    per_slot: list[tuple[int, float, float, int]] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"split: {self.split}", f"count: {self.count}",
                 f"mae: {self.mae!r}", f"rmse: {self.rmse!r}"]
        for t, m, r, c in self.per_slot:
            lines.append(f"slot.{t}: mae={m!r} rmse={r!r} count={c}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_slot"] = [list(row) for row in self.per_slot]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        kv, slots = {}, []
        for line in text.splitlines():
            key, _, val = line.partition(": ")
            if key.startswith("slot."):
                parts = dict(p.split("=") for p in val.split())
                slots.append((int(key[5:]), float(parts["mae"]), float(parts["rmse"]),
                              int(parts["count"])))
            elif key:
                kv[key] = val
        return cls(kv["split"], float(kv["mae"]), float(kv["rmse"]), int(kv["count"]), slots)


def report(preds, targets, slots=None, split: str = "") -> EvalReport:
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    per_slot = []
    if slots is not None:
        slots = np.asarray(slots)
        for t in np.unique(slots):
            sel = slots == t
            per_slot.append((int(t), mae(preds[sel], targets[sel]),
                             rmse(preds[sel], targets[sel]), int(sel.sum())))
    return EvalReport(split, mae(preds, targets), rmse(preds, targets), len(preds), per_slot)


def evaluate(params: ModelParams, g: DynamicGraph, idx, cfg: EncoderConfig,
             split: str = "", encoder: Encoder | None = None) -> EvalReport:
    """Metrics of ``params`` on the observations ``idx`` of ``g``.

    The encoder propagates over ``g.adjacency``; pass the train-masked graph
    to keep held-out edges out of the propagation operator.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        raise InvalidArgument("cannot evaluate on an empty index set")
    enc = encoder or Encoder(normalize_snapshots(g.adjacency), cfg, params.variant)
    h = enc.forward(params)
    preds = predict_batch(h, g.observations(idx), params)
    return report(preds, g.targets(idx), g.obs_t[idx], split)
