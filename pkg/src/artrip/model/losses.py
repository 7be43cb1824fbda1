"""Training losses: per-position cross entropy plus a repetition penalty.

The repetition ("drift") term pushes the score rows of different trip
positions apart.  For each pair of positions it maps the cosine of the
two rows to a pseudo-probability Pr = (cos + 1) / 2 and charges
-log(1 - Pr), summed over all ordered gaps without normalization, so
rows that point the same way (which decode to the same POI) are
penalized hard.
"""

from __future__ import annotations

import warnings

import numpy as np

# keeps -log(1 - Pr) finite when two rows are exactly (anti-)parallel
PROB_EPS = 1e-6


def recommendation_loss(rows: np.ndarray, targets) -> float:
    """Mean cross entropy of score rows against target POI indices."""
    loss, _ = recommendation_loss_grad(rows, targets)
    return loss


def recommendation_loss_grad(rows: np.ndarray, targets) -> tuple[float, np.ndarray]:
    targets = np.asarray(targets, dtype=np.int64)
    m = rows.shape[0]
    if m == 0 or m != targets.shape[0]:
        raise ValueError("rows and targets must be non-empty and aligned")
    shifted = rows - rows.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    denom = exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(denom)
    loss = float(-log_probs[np.arange(m), targets].mean())
    drows = exp / denom
    drows[np.arange(m), targets] -= 1.0
    drows /= m
    return loss, drows


def drift_loss(rows: np.ndarray) -> float:
    """Pairwise repetition penalty over all position pairs."""
    loss, _ = drift_loss_grad(rows)
    return loss


def drift_loss_grad(rows: np.ndarray) -> tuple[float, np.ndarray]:
    m = rows.shape[0]
    grads = np.zeros_like(rows)
    if m < 2:
        return 0.0, grads
    norms = np.linalg.norm(rows, axis=1)
    valid = norms > 0.0
    if not valid.all():
        warnings.warn(
            "zero-norm score row in drift loss; pair correlation fixed at 0.5",
            RuntimeWarning,
            stacklevel=2,
        )
    unit = np.zeros_like(rows)
    unit[valid] = rows[valid] / norms[valid, None]
    cos = unit @ unit.T
    pr_raw = (cos + 1.0) / 2.0
    pr = np.clip(pr_raw, PROB_EPS, 1.0 - PROB_EPS)
    pair = np.triu(np.ones((m, m), dtype=bool), k=1)
    pair_valid = pair & np.outer(valid, valid)
    pair_invalid = pair & ~np.outer(valid, valid)
    loss = float(-np.log(1.0 - pr[pair_valid]).sum() + pair_invalid.sum() * np.log(2.0))
    # clamped pairs carry no gradient
    live = pair_valid & (pr_raw > PROB_EPS) & (pr_raw < 1.0 - PROB_EPS)
    weight = np.zeros((m, m), dtype=np.float64)
    weight[live] = 0.5 / (1.0 - pr[live])
    weight = weight + weight.T
    dunit = weight @ unit
    proj = (dunit * unit).sum(axis=1, keepdims=True)
    grads[valid] = (dunit[valid] - proj[valid] * unit[valid]) / norms[valid, None]
    return loss, grads


def total_loss(rows: np.ndarray, targets, alpha: float) -> float:
    loss, _ = total_loss_grad(rows, targets, alpha)
    return loss


def total_loss_grad(rows: np.ndarray, targets, alpha: float) -> tuple[float, np.ndarray]:
    """Cross entropy plus alpha times the repetition penalty.

    With alpha == 0 the penalty is skipped entirely, which is how the
    drifting mechanism is ablated.
    """
    loss, drows = recommendation_loss_grad(rows, targets)
    if alpha != 0.0:
        rep, drep = drift_loss_grad(rows)
        loss += alpha * rep
        drows = drows + alpha * drep
    return loss, drows
