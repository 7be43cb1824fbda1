"""Model hyperparameters and the flat parameter store.

Parameters live in an ordered dict of named float64 blocks.  The
declaration order defined here is a contract: serialization, the Adam
state and the gradient checker all walk blocks in this order, so two
models built from the same config and seed are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ARCH_ONE_SHOT = "one_shot"
ARCH_RECURRENT = "recurrent"

# Visit hours are bucketed into 24 one-hour slots, see data.hour_bucket.
NUM_TIME_BUCKETS = 24


@dataclass
class ModelConfig:
    """Architecture and optimizer settings.

    Defaults match the reference experimental setup: 32-dim embeddings,
    two encoder layers with two heads, Adam at 1e-3 for 50 epochs and a
    repetition penalty weight of 1.0.
    """

    arch: str = ARCH_ONE_SHOT
    embed_dim: int = 32
    num_layers: int = 2
    num_heads: int = 2
    hidden_dim: int = 64
    alpha: float = 1.0
    learning_rate: float = 1e-3
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.arch not in (ARCH_ONE_SHOT, ARCH_RECURRENT):
            raise ValueError(f"unknown arch {self.arch!r}")
        if self.embed_dim <= 0:
            raise ValueError("embed_dim must be positive")
        if self.arch == ARCH_ONE_SHOT and self.embed_dim % self.num_heads != 0:
            raise ValueError(
                f"embed_dim {self.embed_dim} not divisible by num_heads {self.num_heads}"
            )
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


@dataclass
class ModelParams:
    """All trainable blocks for one model instance.

    `blocks` is insertion-ordered and must stay in declaration order;
    `k` is the POI vocabulary size and `m_max` the longest trip length
    the position table covers.
    """

    config: ModelConfig
    k: int
    m_max: int
    blocks: dict[str, np.ndarray] = field(default_factory=dict)

    def block_names(self) -> list[str]:
        return list(self.blocks.keys())

    def num_parameters(self) -> int:
        return int(sum(b.size for b in self.blocks.values()))


def block_shapes(config: ModelConfig, k: int, m_max: int) -> dict[str, tuple[int, ...]]:
    """Declaration-ordered mapping of block name to shape for one arch."""
    d = config.embed_dim
    shapes: dict[str, tuple[int, ...]] = {
        "poi_embeddings": (k, d),
        "time_embeddings": (NUM_TIME_BUCKETS, d),
        "position_embeddings": (m_max, d),
    }
    if config.arch == ARCH_ONE_SHOT:
        shapes["mask_embedding"] = (d,)
        for layer in range(config.num_layers):
            prefix = f"layer{layer}."
            shapes[prefix + "ln1_gamma"] = (d,)
            shapes[prefix + "ln1_beta"] = (d,)
            shapes[prefix + "attn_wq"] = (d, d)
            shapes[prefix + "attn_wk"] = (d, d)
            shapes[prefix + "attn_wv"] = (d, d)
            shapes[prefix + "attn_wo"] = (d, d)
            shapes[prefix + "ln2_gamma"] = (d,)
            shapes[prefix + "ln2_beta"] = (d,)
            shapes[prefix + "ffn_w1"] = (d, config.hidden_dim)
            shapes[prefix + "ffn_b1"] = (config.hidden_dim,)
            shapes[prefix + "ffn_w2"] = (config.hidden_dim, d)
            shapes[prefix + "ffn_b2"] = (d,)
        shapes["final_ln_gamma"] = (d,)
        shapes["final_ln_beta"] = (d,)
    else:
        # The query vector concatenates start, end and length-position
        # embeddings, hence the 3d input to the state projection.
        shapes["query_w"] = (3 * d, d)
        shapes["query_b"] = (d,)
        shapes["input_w"] = (d, d)
        shapes["state_w"] = (d, d)
        shapes["state_b"] = (d,)
    shapes["head"] = (d, k)
    return shapes


def init_params(config: ModelConfig, k: int, m_max: int) -> ModelParams:
    """Seeded initialization, deterministic for a fixed config.

    Weight matrices and embeddings draw from N(0, 1/embed_dim); biases
    start at zero and layer-norm scales at one.  Blocks are drawn in
    declaration order so the stream of random numbers is reproducible.
    """
    if k <= 0:
        raise ValueError("vocabulary size k must be positive")
    if m_max <= 0:
        raise ValueError("m_max must be positive")
    rng = np.random.default_rng(config.seed)
    scale = 1.0 / np.sqrt(config.embed_dim)
    blocks: dict[str, np.ndarray] = {}
    for name, shape in block_shapes(config, k, m_max).items():
        base = name.split(".")[-1]
        if base.endswith("_gamma"):
            blocks[name] = np.ones(shape, dtype=np.float64)
        elif base.endswith("_beta") or base.endswith("_b") or base.startswith("ffn_b"):
            blocks[name] = np.zeros(shape, dtype=np.float64)
        else:
            blocks[name] = rng.standard_normal(shape) * scale
    return ModelParams(config=config, k=k, m_max=m_max, blocks=blocks)


def zero_like_blocks(params: ModelParams) -> dict[str, np.ndarray]:
    """Zero gradient accumulators matching a parameter store."""
    return {name: np.zeros_like(block) for name, block in params.blocks.items()}
