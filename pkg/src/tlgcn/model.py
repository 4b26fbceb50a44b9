"""TLGCN encoder, ablation encoders and the edge-weight head.

One propagation layer of the lightweight encoder is

    H <- (A_norm x3 M) facewise (H x3 M)

with no weight matrix and no activation. The ablations switch off the
temporal transform (``wo_stip``), put back per-layer weights and an
activation (``wo_l``), or both (``wo_stip_l``, a per-slot GCN).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .containers import read_npz, write_npz
from .tensor_core import (
    InvalidArgument,
    SparseSnapshots,
    TransformMatrix,
    facewise_product_sparse_tm,
    from_time_major,
    m_transform_sparse,
    m_transform_tm,
    make_transform,
    time_major,
)

VARIANTS = ("tlgcn", "wo_stip", "wo_l", "wo_stip_l")

# variant -> (temporal transform on, lightweight)
_FLAGS = {
    "tlgcn": (True, True),
    "wo_stip": (False, True),
    "wo_l": (True, False),
    "wo_stip_l": (False, False),
}

ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(np.float64)),
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
}


class InvalidState(RuntimeError):
    pass


class ConfigMismatch(ValueError):
    def __init__(self, field_name: str, expected, found):
        self.field = field_name
        super().__init__(f"config mismatch on {field_name}: expected {expected}, found {found}")


def normalize_variant(name: str) -> str:
    key = name.strip().lower().replace("-", "_").replace("/", "_").replace(" ", "_")
    key = {"w_o_stip": "wo_stip", "w_o_l": "wo_l", "w_o_stip_l": "wo_stip_l"}.get(key, key)
    if key not in VARIANTS:
        raise InvalidArgument(f"unknown variant {name!r}; expected one of {VARIANTS}")
    return key


@dataclass(frozen=True)
class EncoderConfig:
    layers: int
    fdim: int
    m: TransformMatrix

    def __post_init__(self):
        if self.layers < 1:
            raise InvalidArgument("layers must be >= 1")
        if self.fdim < 1:
            raise InvalidArgument("fdim must be >= 1")

    @classmethod
    def build(cls, t_slots: int, layers: int = 2, fdim: int = 16, band: int = 5,
              m_variant: str = "M1") -> "EncoderConfig":
        return cls(layers, fdim, make_transform(m_variant, t_slots, band))

    @property
    def t_slots(self) -> int:
        return self.m.t_slots

    @property
    def bandwidth(self) -> int | None:
        return self.m.bandwidth

    @property
    def m_variant(self) -> str:
        return self.m.variant

    def as_dict(self) -> dict:
        return {"layers": self.layers, "fdim": self.fdim, "t_slots": self.t_slots,
                "band": self.bandwidth, "m_variant": self.m_variant}


@dataclass
class ModelParams:
    x: np.ndarray
    head_w: np.ndarray
    head_b: float
    variant: str = "tlgcn"
    layer_weights: list[np.ndarray] | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def fdim(self) -> int:
        return self.x.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        """Named parameter arrays; ``head_b`` as a 0-d array."""
        out = {"x": self.x, "head_w": self.head_w, "head_b": np.asarray(self.head_b, dtype=np.float64)}
        for l, w in enumerate(self.layer_weights or ()):
            out[f"w{l}"] = w
        return out

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], variant: str) -> "ModelParams":
        ws = []
        while f"w{len(ws)}" in arrays:
            ws.append(np.array(arrays[f"w{len(ws)}"], dtype=np.float64))
        return cls(x=np.array(arrays["x"], dtype=np.float64),
                   head_w=np.array(arrays["head_w"], dtype=np.float64),
                   head_b=float(np.asarray(arrays["head_b"]).reshape(())), variant=variant,
                   layer_weights=ws or None)

    def copy(self) -> "ModelParams":
        return ModelParams.from_arrays({k: v.copy() for k, v in self.arrays().items()}, self.variant)

    def count(self) -> int:
        return sum(int(np.size(a)) for a in self.arrays().values())


def _xavier(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(n: int, cfg: EncoderConfig, seed: int, variant: str = "tlgcn") -> ModelParams:
    """Xavier-uniform features (fan_in = N, fan_out = F), head and layer weights.

    The bias starts at zero. Layer weights ``F x F x T`` are only drawn for
    variants that keep a feature transform.
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    variant = normalize_variant(variant)
    rng = np.random.default_rng(seed)
    f, t = cfg.fdim, cfg.t_slots
    x = _xavier(rng, (n, f, t), n, f)
    head_w = _xavier(rng, 2 * f, 2 * f, 1)
    weights = None
    if not _FLAGS[variant][1]:
        weights = [_xavier(rng, (f, f, t), f, f) for _ in range(cfg.layers)]
    return ModelParams(x=x, head_w=head_w, head_b=0.0, variant=variant, layer_weights=weights)


def parameter_count(n: int, cfg: EncoderConfig, variant: str) -> int:
    f, t = cfg.fdim, cfg.t_slots
    total = n * f * t + 2 * f + 1
    if not _FLAGS[normalize_variant(variant)][1]:
        total += cfg.layers * f * f * t
    return total


@dataclass
class Tape:
    """Intermediates kept by :meth:`Encoder.forward` for the backward pass."""

    layers: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)


class Encoder:
    """Propagation operator bound to one normalised adjacency stack.

    ``A_norm x3 M`` is formed once here and reused by every layer and every
    call.
    """

    def __init__(self, a_norm: SparseSnapshots, cfg: EncoderConfig, variant: str = "tlgcn",
                 activation: str = "relu"):
        if a_norm.t_slots != cfg.t_slots:
            raise InvalidArgument(
                f"adjacency has {a_norm.t_slots} slots, config has {cfg.t_slots}")
        self.cfg = cfg
        self.variant = normalize_variant(variant)
        self.stip, self.light = _FLAGS[self.variant]
        if activation not in ACTIVATIONS:
            raise InvalidArgument(f"unknown activation {activation!r}")
        self.activation = activation
        self.m = cfg.m if self.stip else None
        self.mt = cfg.m.transpose() if self.stip else None
        self.prop = m_transform_sparse(a_norm, cfg.m) if self.stip else a_norm
        self.prop_t = self.prop.transpose()

    @property
    def n(self) -> int:
        return self.prop.n

    def _time(self, ht: np.ndarray) -> np.ndarray:
        return m_transform_tm(ht, self.m) if self.stip else ht

    def _time_adjoint(self, gt: np.ndarray) -> np.ndarray:
        return m_transform_tm(gt, self.mt) if self.stip else gt

    def _check(self, params: ModelParams) -> None:
        if params.x.shape != (self.n, self.cfg.fdim, self.cfg.t_slots):
            raise InvalidArgument(
                f"feature tensor {params.x.shape} does not match "
                f"({self.n}, {self.cfg.fdim}, {self.cfg.t_slots})")
        if not self.light:
            ws = params.layer_weights
            if ws is None or len(ws) != self.cfg.layers:
                raise InvalidState(f"variant {self.variant} needs {self.cfg.layers} layer weight tensors")

    def forward(self, params: ModelParams, tape: Tape | None = None) -> np.ndarray:
        """``H^(L)`` as ``N x F x T``."""
        return from_time_major(self.forward_tm(params, tape))

    def forward_tm(self, params: ModelParams, tape: Tape | None = None) -> np.ndarray:
        """``H^(L)`` in time-major ``T x N x F`` layout."""
        self._check(params)
        act = ACTIVATIONS[self.activation][0]
        h = time_major(params.x)
        for l in range(self.cfg.layers):
            p = facewise_product_sparse_tm(self.prop, self._time(h))
            if self.light:
                h = p
                continue
            w_hat = self._time(time_major(params.layer_weights[l]))
            z = np.matmul(p, w_hat)
            if tape is not None:
                tape.layers.append((p, w_hat, z))
            h = act(z)
        return h

    def backward(self, params: ModelParams, tape: Tape,
                 grad_h: np.ndarray) -> tuple[np.ndarray, list[np.ndarray] | None]:
        """Pull ``dL/dH`` back to ``dL/dX`` and per-layer ``dL/dW``."""
        return self.backward_tm(params, tape, time_major(grad_h))

    def backward_tm(self, params: ModelParams, tape: Tape,
                    g: np.ndarray) -> tuple[np.ndarray, list[np.ndarray] | None]:
        """As :meth:`backward` with a time-major ``dL/dH``; results are ``N x F x T``."""
        dact = ACTIVATIONS[self.activation][1]
        grad_w: list[np.ndarray] = []
        for l in reversed(range(self.cfg.layers)):
            if not self.light:
                p, w_hat, z = tape.layers[l]
                dz = g * dact(z)
                grad_w.append(from_time_major(self._time_adjoint(np.matmul(p.transpose(0, 2, 1), dz))))
                g = np.matmul(dz, w_hat.transpose(0, 2, 1))
            g = self._time_adjoint(facewise_product_sparse_tm(self.prop_t, g))
        return from_time_major(g), (grad_w[::-1] if not self.light else None)

    def preactivations(self, params: ModelParams) -> list[np.ndarray]:
        """Pre-activation tensors per weighted layer, time-major."""
        tape = Tape()
        self.forward(params, tape)
        return [z for _, _, z in tape.layers]


def encode(params: ModelParams, a_norm: SparseSnapshots, cfg: EncoderConfig,
           activation: str = "relu") -> np.ndarray:
    """Final embedding ``H^(L)`` of shape ``N x F x T``."""
    return Encoder(a_norm, cfg, params.variant, activation).forward(params)


def encode_ablation(params: ModelParams, a_norm: SparseSnapshots, cfg: EncoderConfig,
                    activation: str = "relu") -> np.ndarray:
    if params.variant == "tlgcn":
        raise InvalidArgument("encode_ablation expects an ablation variant")
    if not _FLAGS[params.variant][1] and params.layer_weights is None:
        raise InvalidState(f"variant {params.variant} needs layer weights")
    return encode(params, a_norm, cfg, activation)


def _check_obs(h: np.ndarray, obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.int64).reshape(-1, 3)
    n, _, t = h.shape
    if len(obs) and (obs.min() < 0 or obs[:, :2].max() >= n or obs[:, 2].max() >= t):
        raise InvalidArgument("observation index out of range")
    return obs


def predict_batch(h: np.ndarray, obs, params: ModelParams) -> np.ndarray:
    """``head_w . (h_it || h_jt) + head_b`` for each ``(i, j, t)`` row of ``obs``."""
    obs = _check_obs(h, obs)
    f = h.shape[1]
    hi = h[obs[:, 0], :, obs[:, 2]]
    hj = h[obs[:, 1], :, obs[:, 2]]
    return hi @ params.head_w[:f] + hj @ params.head_w[f:] + params.head_b


def predict_edge(h: np.ndarray, i: int, j: int, t: int, params: ModelParams) -> float:
    return float(predict_batch(h, [(i, j, t)], params)[0])


def forward_batch(params: ModelParams, a_norm: SparseSnapshots, cfg: EncoderConfig,
                  obs: Sequence, encoder: Encoder | None = None) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.int64).reshape(-1, 3)
    if len(obs) == 0:
        return np.zeros(0)
    enc = encoder or Encoder(a_norm, cfg, params.variant)
    return predict_batch(enc.forward(params), obs, params)


def save_checkpoint(path, params: ModelParams, cfg: EncoderConfig, extra: dict | None = None) -> None:
    meta = {"variant": params.variant, "n": params.n, **cfg.as_dict()}
    if extra:
        meta.update(extra)
    write_npz(path, params.arrays(), meta)


def load_checkpoint(path) -> tuple[ModelParams, EncoderConfig, dict]:
    arrays, meta = read_npz(path)
    params = ModelParams.from_arrays(arrays, meta["variant"])
    cfg = EncoderConfig.build(meta["t_slots"], meta["layers"], meta["fdim"], meta["band"],
                              meta["m_variant"])
    return params, cfg, meta
