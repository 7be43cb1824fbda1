"""Finite-difference verification of the hand-written gradients.

Central differences with a fixed step are compared entry by entry
against the analytic gradients of the full training loss (guided
scores, cross entropy plus weighted repetition penalty).  The relative
error uses a floored denominator so near-zero entries do not blow up
the ratio.  A corruption hook exists as a negative control: a check
run with a deliberately damaged block must fail, otherwise the checker
itself is broken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from artrip.data import Trajectory
from artrip.guidance import GuidanceMatrix
from artrip.model.params import ModelParams
from artrip.model.train import _trajectory_loss_grads

FD_STEP = 1e-4
REL_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    tol: float
    max_rel_error: float
    worst_block: str
    per_block: dict[str, float]
    passed: bool


def grad_check(
    traj: Trajectory,
    params: ModelParams,
    pm: GuidanceMatrix,
    alpha: float,
    tol: float = 1e-4,
    step: float = FD_STEP,
    corrupt_block: str | None = None,
) -> GradCheckReport:
    """Compare analytic and numeric gradients over every block.

    Setting `corrupt_block` shifts that block's analytic gradient by a
    constant before the comparison; the resulting report must come back
    failed for the check to count as trustworthy.
    """
    _, analytic = _trajectory_loss_grads(traj, params, pm, alpha)
    if corrupt_block is not None:
        if corrupt_block not in analytic:
            raise KeyError(f"unknown block {corrupt_block!r}")
        analytic[corrupt_block] = analytic[corrupt_block] + 0.5
    per_block: dict[str, float] = {}
    worst_block = ""
    max_rel = 0.0
    for name, block in params.blocks.items():
        flat = block.ravel()
        ana = analytic[name].ravel()
        block_max = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = _trajectory_loss_grads(traj, params, pm, alpha)
            flat[i] = orig - step
            down, _ = _trajectory_loss_grads(traj, params, pm, alpha)
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            rel = abs(ana[i] - numeric) / max(abs(ana[i]), abs(numeric), REL_FLOOR)
            if rel > block_max:
                block_max = rel
        per_block[name] = block_max
        if block_max >= max_rel:
            max_rel = block_max
            worst_block = name
    return GradCheckReport(
        tol=tol,
        max_rel_error=max_rel,
        worst_block=worst_block,
        per_block=per_block,
        passed=max_rel <= tol,
    )
