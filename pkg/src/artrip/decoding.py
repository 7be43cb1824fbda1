"""Trip decoding: turn per-position scores into a concrete itinerary.

Endpoints are never sampled, they come straight from the query.  The
interior positions are filled one at a time using a pluggable selection
strategy.  Ties and sampling are fully deterministic for a fixed seed:
greedy breaks ties toward the lowest index, and both truncation
strategies sort candidates with a stable order before renormalizing.

The adaptive strategy widens or narrows exploration per position based
on the confidence vector: positions where most POIs were never
observed (high confidence that guidance knows little) get a higher
softmax temperature before nucleus truncation, or a larger nucleus
directly in threshold mode.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from artrip.data import Query
from artrip.guidance import ConfidenceVector, GuidanceMatrix, apply_guidance
from artrip.model.params import ARCH_ONE_SHOT, ModelParams
from artrip.model.one_shot import forward_one_shot
from artrip.model.recurrent import forward_recurrent_step, init_recurrent_state

STRATEGIES = ("greedy", "top_k", "top_p", "adaptive")
ADAPTIVE_MODES = ("temperature", "threshold")

# numeric slack when testing cumulative probability against the nucleus
# threshold, so an exact boundary is not lost to rounding
_CUM_TOL = 1e-12


@dataclass
class DecodeConfig:
    """Selection strategy settings; `seed` drives all sampling."""

    strategy: str = "greedy"
    top_k: int = 5
    top_p: float = 0.8
    lam: float = 1.0
    adaptive_mode: str = "temperature"
    no_repeat_mask: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.adaptive_mode not in ADAPTIVE_MODES:
            raise ValueError(f"unknown adaptive mode {self.adaptive_mode!r}")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


@dataclass(frozen=True)
class Trip:
    """A generated itinerary as vocabulary indices."""

    pois: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.pois)


def softmax(row: np.ndarray) -> np.ndarray:
    shifted = row - row.max()
    e = np.exp(shifted)
    return e / e.sum()


def greedy_pick(row: np.ndarray) -> int:
    """Highest score wins; ties go to the lowest index (np.argmax order)."""
    return int(np.argmax(row))


def _stable_desc_order(probs: np.ndarray) -> np.ndarray:
    return np.argsort(-probs, kind="stable")


def _sample(probs: np.ndarray, candidates: np.ndarray, rng, trace) -> int:
    sel = probs[candidates]
    sel = sel / sel.sum()
    choice = int(rng.choice(candidates, p=sel))
    if trace is not None:
        trace.append((tuple(int(c) for c in candidates), choice))
    return choice


def top_k_sample(row: np.ndarray, k: int, rng, trace=None) -> int:
    """Sample among the k highest-probability POIs, renormalized."""
    probs = softmax(row)
    order = _stable_desc_order(probs)
    return _sample(probs, order[: min(k, len(order))], rng, trace)


def nucleus_candidates(probs: np.ndarray, p: float) -> np.ndarray:
    """Smallest stable-ordered prefix whose mass reaches p."""
    order = _stable_desc_order(probs)
    cum = np.cumsum(probs[order])
    cut = int(np.searchsorted(cum, p - _CUM_TOL)) + 1
    return order[:cut]


def top_p_sample(row: np.ndarray, p: float, rng, trace=None) -> int:
    probs = softmax(row)
    return _sample(probs, nucleus_candidates(probs, p), rng, trace)


def adaptive_sample(
    row: np.ndarray,
    confidence: float,
    cfg: DecodeConfig,
    rng,
    trace=None,
) -> int:
    """Confidence-aware nucleus sampling.

    temperature mode: scores are divided by tau = 1 + lam * (1 - c)
    before the usual top-p truncation, so low-confidence positions get
    flatter distributions and wider effective candidate sets.
    threshold mode: the nucleus mass itself is widened toward 1 as
    confidence drops, p_j = 1 - c * (1 - p).
    """
    if cfg.adaptive_mode == "temperature":
        tau = 1.0 + cfg.lam * (1.0 - confidence)
        return top_p_sample(row / tau, cfg.top_p, rng, trace)
    p_j = 1.0 - confidence * (1.0 - cfg.top_p)
    return top_p_sample(row, p_j, rng, trace)


def mask_repeats(row: np.ndarray, used: set[int], position: int) -> np.ndarray:
    """Score already-visited POIs at -inf; release the mask if it empties the row."""
    out = row.copy()
    out[list(used)] = -np.inf
    if not np.isfinite(out).any():
        warnings.warn(
            f"no-repeat mask exhausted the vocabulary at position {position}; releasing it",
            RuntimeWarning,
            stacklevel=2,
        )
        return row.copy()
    return out


def _select(row: np.ndarray, position: int, conf: ConfidenceVector, cfg: DecodeConfig, rng, trace):
    if cfg.strategy == "greedy":
        choice = greedy_pick(row)
        if trace is not None:
            trace.append(((choice,), choice))
        return choice
    if cfg.strategy == "top_k":
        return top_k_sample(row, cfg.top_k, rng, trace)
    if cfg.strategy == "top_p":
        return top_p_sample(row, cfg.top_p, rng, trace)
    return adaptive_sample(row, conf.at(position), cfg, rng, trace)


def decode_trip(
    query: Query,
    params: ModelParams,
    pm: GuidanceMatrix,
    conf: ConfidenceVector,
    cfg: DecodeConfig,
    trace: list | None = None,
) -> Trip:
    """Generate a length-n trip for a query.

    Pass a zero guidance matrix to decode unguided.  With the no-repeat
    mask on, every already-emitted POI (both endpoints included) scores
    -inf until the mask would empty a row, at which point it is
    released with a warning.  `trace`, if given, collects
    (candidate_ids, chosen_id) per interior position.
    """
    if query.n < 2:
        raise ValueError("trips need at least the two endpoint positions")
    rng = np.random.default_rng(cfg.seed)
    pois = [query.p_s]
    used = {query.p_s, query.p_e}
    if params.config.arch == ARCH_ONE_SHOT:
        guided = apply_guidance(forward_one_shot(query, params), pm)
        for position in range(2, query.n):
            row = guided[position - 1]
            if cfg.no_repeat_mask:
                row = mask_repeats(row, used, position)
            choice = _select(row, position, conf, cfg, rng, trace)
            pois.append(choice)
            used.add(choice)
    else:
        state = init_recurrent_state(query, params)
        prev = query.p_s
        for position in range(2, query.n):
            raw, state = forward_recurrent_step(state, prev, params)
            row = apply_guidance(raw[None, :], pm, first_position=position)[0]
            if cfg.no_repeat_mask:
                row = mask_repeats(row, used, position)
            choice = _select(row, position, conf, cfg, rng, trace)
            pois.append(choice)
            used.add(choice)
            prev = choice
    pois.append(query.p_e)
    return Trip(pois=tuple(pois))


def query_seed(base_seed: int, ordinal: int) -> int:
    """Stable per-query seed; XOR keeps distinct queries on distinct streams."""
    return base_seed ^ ordinal


def decode_config_for_query(cfg: DecodeConfig, base_seed: int, ordinal: int) -> DecodeConfig:
    return replace(cfg, seed=query_seed(base_seed, ordinal))
