"""Learned factored literal listener: an MLP from spec encodings to rule
probabilities, trained against the exact enumerated marginals.

The network is a plain two-hidden-layer perceptron (256 units each,
rectified-linear) over a flattened 7x7x6 binary spec encoding, with one
masked softmax head per nonterminal. Training minimizes the summed
per-factor cross-entropy against the factored literal listener on specs
sampled from the literal speaker. Backpropagation is written out by hand
so gradients can be checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import dsl
from .dsl import Utterance
from .factored import FactoredDistribution, factored_literal, iter_factored_prefixes
from .space import ProgramSpace
from .speakers import SpeakerConfig, speak_literal

INPUT_DIM = dsl.GRID_SIZE * dsl.GRID_SIZE * 6
CHECKPOINT_VERSION = 1


def _flat_bits(u: Utterance) -> tuple[int, int]:
    base = (u.x * dsl.GRID_SIZE + u.y) * 6
    return base + u.obj, base + 3 + u.colour


def encode(spec: Sequence[Utterance]) -> np.ndarray:
    """Flatten a spec to the 294-long binary input vector.

    Cell (x, y) occupies six consecutive entries at ``(x*7 + y) * 6``:
    three object channels then three colour channels; a reveal sets one
    bit in each group. The encoding is a set representation: reveal
    order does not affect it.
    """
    v = np.zeros(INPUT_DIM, dtype=np.float64)
    for u in spec:
        a, b = _flat_bits(u)
        v[a] = 1.0
        v[b] = 1.0
    return v


def encode_batch(specs: Sequence[Sequence[Utterance]]) -> np.ndarray:
    return np.stack([encode(s) for s in specs])


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    spec_len_range: tuple[int, int] = (2, 25)
    steps: int = 20_000
    pool_size: int = 10_000
    learning_rate: float = 1e-2
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.spec_len_range
        if not (1 <= lo <= hi <= dsl.GRID_SIZE * dsl.GRID_SIZE):
            raise ValueError(f"bad spec_len_range {self.spec_len_range}")
        if min(self.batch_size, self.steps, self.pool_size) < 1:
            raise ValueError("batch_size, steps and pool_size must be positive")


class ListenerNet:
    """input -> 256 -> 256 -> one masked softmax head per nonterminal."""

    def __init__(
        self,
        arities: Sequence[int] = dsl.ARITIES,
        input_dim: int = INPUT_DIM,
        hidden: int = 256,
        seed: int = 0,
        init_scale: float = 0.05,
    ):
        self.arities = tuple(int(a) for a in arities)
        self.input_dim = input_dim
        self.hidden = hidden
        self.n_factors = len(self.arities)
        self.max_arity = max(self.arities)
        out_dim = self.n_factors * self.max_arity
        self.mask = np.zeros((self.n_factors, self.max_arity), dtype=bool)
        for i, a in enumerate(self.arities):
            self.mask[i, :a] = True

        rng = np.random.default_rng(seed)
        self.W1 = rng.uniform(-init_scale, init_scale, (input_dim, hidden))
        self.b1 = np.zeros(hidden)
        self.W2 = rng.uniform(-init_scale, init_scale, (hidden, hidden))
        self.b2 = np.zeros(hidden)
        self.W3 = rng.uniform(-init_scale, init_scale, (hidden, out_dim))
        self.b3 = np.zeros(out_dim)

    PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def _forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        h1 = np.maximum(x @ self.W1 + self.b1, 0.0)
        h2 = np.maximum(h1 @ self.W2 + self.b2, 0.0)
        z = (h2 @ self.W3 + self.b3).reshape(-1, self.n_factors, self.max_arity)
        return h1, h2, z, self._log_softmax(z)

    def _log_softmax(self, z: np.ndarray) -> np.ndarray:
        z = np.where(self.mask, z, -np.inf)
        zmax = z.max(axis=-1, keepdims=True)
        ez = np.exp(z - zmax)
        return np.where(self.mask, z - zmax - np.log(ez.sum(axis=-1, keepdims=True)), -np.inf)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Rule probabilities, shape ``(batch, n_factors, max_arity)``;
        masked slots carry exactly zero."""
        _, _, _, logp = self._forward(np.atleast_2d(x))
        p = np.zeros_like(logp)
        p[:, self.mask] = np.exp(logp[:, self.mask])
        return p

    def predict(self, spec: Sequence[Utterance]) -> FactoredDistribution:
        p = self.forward(encode(spec))[0]
        return FactoredDistribution([p[i, :a] for i, a in enumerate(self.arities)], normalize=True)

    def loss(self, spec: Sequence[Utterance], target: FactoredDistribution) -> float:
        t = target.as_matrix(self.max_arity)[None]
        _, _, _, logp = self._forward(encode(spec)[None])
        return float(-(t[t > 0] * logp[t > 0]).sum())

    def loss_and_grads(
        self, x: np.ndarray, targets: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Summed cross-entropy over the batch and its parameter gradients.

        ``targets`` has shape ``(batch, n_factors, max_arity)`` with each
        valid factor row summing to one.
        """
        x = np.atleast_2d(x)
        h1, h2, z, logp = self._forward(x)
        loss = float(-(targets[targets > 0] * logp[targets > 0]).sum())

        p = np.zeros_like(logp)
        p[:, self.mask] = np.exp(logp[:, self.mask])
        dz = (p - targets).reshape(x.shape[0], -1)
        grads = {
            "W3": h2.T @ dz,
            "b3": dz.sum(axis=0),
        }
        dh2 = dz @ self.W3.T
        dh2[h2 <= 0.0] = 0.0
        grads["W2"] = h1.T @ dh2
        grads["b2"] = dh2.sum(axis=0)
        dh1 = dh2 @ self.W2.T
        dh1[h1 <= 0.0] = 0.0
        grads["W1"] = x.T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        return loss, grads

    def apply_gradients(self, grads: dict[str, np.ndarray], lr: float) -> None:
        for name in self.PARAM_NAMES:
            getattr(self, name)[...] -= lr * grads[name]

    # -- persistence -----------------------------------------------------

    def save(self, path: str, config: TrainConfig | None = None) -> None:
        header = {
            "version": CHECKPOINT_VERSION,
            "arities": list(self.arities),
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "train_config": asdict(config) if config else None,
        }
        arrays = {name: getattr(self, name) for name in self.PARAM_NAMES}
        with open(path, "wb") as fh:
            np.savez(fh, header=json.dumps(header), **arrays)

    @classmethod
    def load(cls, path: str) -> "ListenerNet":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {header['version']}")
            net = cls(header["arities"], header["input_dim"], header["hidden"])
            for name in cls.PARAM_NAMES:
                getattr(net, name)[...] = data[name]
        return net


def train(
    space: ProgramSpace,
    cfg: TrainConfig = TrainConfig(),
    net: ListenerNet | None = None,
    log_every: int = 0,
) -> tuple[ListenerNet, np.ndarray]:
    """Train a listener net on literal-speaker specs; returns (net, per-step loss).

    Each step samples ``batch_size`` programs from a fixed random pool,
    draws one literal-speaker spec per program with a length uniform in
    ``spec_len_range``, and takes one gradient step on the summed
    cross-entropy against the exact enumerated marginals. Deterministic
    given the seed.
    """
    rng = np.random.default_rng(cfg.seed)
    pool = rng.choice(
        space.n_programs, size=cfg.pool_size, replace=cfg.pool_size > space.n_programs
    )
    if net is None:
        net = ListenerNet(space.arities, seed=cfg.seed)
    lo, hi = cfg.spec_len_range
    history = np.empty(cfg.steps)
    for step in range(cfg.steps):
        idx = pool[rng.integers(0, pool.size, cfg.batch_size)]
        lens = rng.integers(lo, hi + 1, cfg.batch_size)
        seeds = rng.integers(0, 2**31, cfg.batch_size)
        specs = [
            speak_literal(space, space.choices_of(i), SpeakerConfig("literal", int(n), int(s)))
            for i, n, s in zip(idx, lens, seeds)
        ]
        targets = np.stack(
            [factored_literal(space, s).as_matrix(net.max_arity) for s in specs]
        )
        loss, grads = net.loss_and_grads(encode_batch(specs), targets)
        net.apply_gradients(grads, cfg.learning_rate)
        history[step] = loss / cfg.batch_size
        if log_every and (step + 1) % log_every == 0:
            recent = history[max(0, step - log_every + 1) : step + 1].mean()
            print(f"step {step + 1}/{cfg.steps}  loss {recent:.4f}")
    return net, history


def evaluate_cross_entropy(
    net: ListenerNet,
    specs: Sequence[Sequence[Utterance]],
    targets: Sequence[FactoredDistribution],
) -> np.ndarray:
    """Mean per-factor cross-entropy of the net's predictions over ``specs``."""
    x = encode_batch(specs)
    _, _, _, logp = net._forward(x)
    t = np.stack([d.as_matrix(net.max_arity) for d in targets])
    ce = -np.where(t > 0, t * np.where(np.isfinite(logp), logp, 0.0), 0.0)
    return ce.sum(axis=2).mean(axis=0)


def uniform_cross_entropy(arities: Sequence[int]) -> np.ndarray:
    """Per-factor cross-entropy of the uniform predictor (log arity)."""
    return np.log(np.asarray(arities, dtype=np.float64))


def neural_pragmatic(
    net: ListenerNet,
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
    clamp: float = 1e-9,
) -> FactoredDistribution:
    """Pragmatic posterior with the learned net supplying every literal term.

    Same recursion as the enumerated factored pragmatic listener; the
    net's probabilities are clamped below at ``clamp`` so the product
    over reveals never hits a spurious zero.
    """
    if len(spec) == 0:
        return FactoredDistribution.uniform(space.arities)
    return neural_prefix_posteriors(net, space, spec, exclude_revealed, clamp)[-1]


def neural_prefix_posteriors(
    net: ListenerNet,
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
    clamp: float = 1e-9,
) -> list[FactoredDistribution]:
    return list(iter_neural_prefixes(net, space, spec, exclude_revealed, clamp))


def iter_neural_prefixes(
    net: ListenerNet,
    space: ProgramSpace,
    spec: Sequence[Utterance],
    exclude_revealed: bool | None = None,
    clamp: float = 1e-9,
):
    if net.input_dim != INPUT_DIM or net.arities != tuple(space.arities):
        raise ValueError("net shape does not match this program space")
    bits = np.asarray([_flat_bits(u) for u in space.alphabet])

    def rule_probs(prefix_indices: list[int], cand_idx: np.ndarray) -> np.ndarray:
        base = np.zeros(INPUT_DIM)
        for ui in prefix_indices:
            base[bits[ui]] = 1.0
        x = np.repeat(base[None], cand_idx.size, axis=0)
        rows = np.arange(cand_idx.size)
        x[rows, bits[cand_idx, 0]] = 1.0
        x[rows, bits[cand_idx, 1]] = 1.0
        p = np.maximum(net.forward(x), clamp)
        flat = np.empty((cand_idx.size, space.n_slots))
        for i, a in enumerate(space.arities):
            flat[:, space.slot_offsets[i] : space.slot_offsets[i + 1]] = p[:, i, :a]
        return flat

    return iter_factored_prefixes(space, spec, exclude_revealed, rule_probs)
