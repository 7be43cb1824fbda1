"""Adam training loop shared by both architectures.

One optimizer step per trajectory, visiting the corpus in a fresh
seeded shuffle each epoch.  Scores are guided before the loss is taken,
so the guidance matrix shapes gradients too; training with a zero
guidance matrix is exactly the unguided model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from artrip.data import Trajectory, make_query
from artrip.guidance import GuidanceMatrix, guidance_columns
from artrip.model import one_shot, recurrent
from artrip.model.losses import total_loss_grad
from artrip.model.params import ARCH_ONE_SHOT, ModelConfig, ModelParams, init_params

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainResult:
    params: ModelParams
    epoch_losses: list[float]


class _AdamState:
    def __init__(self, params: ModelParams):
        self.m = {name: np.zeros_like(b) for name, b in params.blocks.items()}
        self.v = {name: np.zeros_like(b) for name, b in params.blocks.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray], lr: float):
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for name, block in params.blocks.items():
            g = grads[name]
            self.m[name] = ADAM_BETA1 * self.m[name] + (1.0 - ADAM_BETA1) * g
            self.v[name] = ADAM_BETA2 * self.v[name] + (1.0 - ADAM_BETA2) * g * g
            mhat = self.m[name] / bc1
            vhat = self.v[name] / bc2
            block -= lr * mhat / (np.sqrt(vhat) + ADAM_EPS)


def _trajectory_loss_grads(traj: Trajectory, params: ModelParams, pm: GuidanceMatrix, alpha: float):
    """Loss and parameter gradients for one trajectory."""
    query = make_query(traj)
    if params.config.arch == ARCH_ONE_SHOT:
        rows, cache = one_shot.forward_with_cache(query, params)
        first_position = 1
        targets = traj.pois
    else:
        rows, cache = recurrent.forward_teacher(query, traj.pois, params)
        first_position = 2
        targets = traj.pois[1:]
    factor = 1.0 + guidance_columns(pm, first_position, rows.shape[0])
    loss, dguided = total_loss_grad(rows * factor, targets, alpha)
    if not np.isfinite(loss):
        # let the caller abort; backprop on a non-finite loss is garbage
        return loss, None
    drows = dguided * factor
    if params.config.arch == ARCH_ONE_SHOT:
        grads = one_shot.backward(params, cache, drows)
    else:
        grads = recurrent.backward(params, cache, drows)
    return loss, grads


def train(trajectories: list[Trajectory], pm: GuidanceMatrix, config: ModelConfig) -> TrainResult:
    """Fit a model on a trajectory corpus.

    Vocabulary size and the position horizon are taken from the
    guidance matrix, which ties the model tables to the same training
    split the matrix was built from.  Raises RuntimeError as soon as a
    non-finite loss shows up.
    """
    if not trajectories:
        raise ValueError("empty training corpus")
    params = init_params(config, pm.k, pm.m_max)
    adam = _AdamState(params)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(trajectories))
        total = 0.0
        for idx in order:
            loss, grads = _trajectory_loss_grads(
                trajectories[idx], params, pm, config.alpha
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, trajectory {idx}"
                )
            adam.step(params, grads, config.learning_rate)
            total += loss
        epoch_losses.append(float(total / len(trajectories)))
    return TrainResult(params=params, epoch_losses=epoch_losses)
