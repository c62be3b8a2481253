"""Comparison policies: flat-GP MW, flat GP-UCB, and causal-optimism argmax.

The flat model ignores graph structure and regresses reward directly on the
concatenated (agent values, adversary values) vector; GP-UCB additionally
ignores the adversary; the causal-optimism baseline uses the full
counterfactual oracle but scores against a fixed default adversary play.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .gp import ConfidenceModel, GpPosterior
from .mw import MwState, mw_update, clip01
from .oracle import ucb_candidates_vector, zero_noise


@dataclass
class FlatGpModel:
    """Single GP over embedded action coordinates.

    ``action_inputs`` holds the agent half of the input for every action in
    the finite set; ``adversary_dim`` coordinates are appended per query
    (zero for the adversary-blind variant).
    """

    gp: GpPosterior
    action_inputs: np.ndarray  # (|A|, d_agent)
    adversary_dim: int = 0

    def __post_init__(self):
        expect = self.action_inputs.shape[1] + self.adversary_dim
        if self.gp.kernel.dim != expect:
            raise ValueError(
                f"kernel dim {self.gp.kernel.dim} != agent {self.action_inputs.shape[1]}"
                f" + adversary {self.adversary_dim}"
            )

    def observe(self, agent_values: np.ndarray, adversary_values: Sequence[float],
                reward: float) -> "FlatGpModel":
        x = np.concatenate([np.asarray(agent_values, dtype=np.float64).ravel(),
                            np.asarray(adversary_values, dtype=np.float64).ravel()])
        return replace(self, gp=self.gp.update(x, reward))

    def scores(self, adversary_values: Sequence[float], beta: float) -> np.ndarray:
        """mu + beta * sigma for every action at the given adversary play."""
        adv = np.asarray(adversary_values, dtype=np.float64).ravel()
        if adv.shape[0] != self.adversary_dim:
            raise ValueError("adversary value length mismatch")
        b = self.action_inputs.shape[0]
        queries = np.hstack([self.action_inputs, np.tile(adv, (b, 1))]) if adv.size \
            else self.action_inputs
        mu, std = self.gp.mean_std(queries)
        return mu + beta * std


def gpmw_round(state: MwState, model: FlatGpModel,
               observed_adversary: Sequence[float], beta: float) -> MwState:
    """Closed-form optimistic scores against the observed adversary values,
    clipped to [0, 1], then the multiplicative update."""
    return mw_update(state, clip01(model.scores(observed_adversary, beta)))


def gpucb_round(model: FlatGpModel, beta: float) -> int:
    """Greedy optimistic action from the adversary-blind model; ties take the
    lowest index."""
    if model.adversary_dim != 0:
        raise ValueError("gpucb_round expects an adversary-blind model")
    return int(np.argmax(model.scores((), beta)))


def mcbo_round(confidence: ConfidenceModel, env_action_set: np.ndarray,
               noise_samples: int = 1, sign_grid: bool = True) -> int:
    """Causal optimism with no adversary adaptation: argmax of the oracle
    against the default (index-0) adversary play."""
    env_action_set = np.asarray(env_action_set, dtype=np.int64)
    adv_fixed = tuple([0] * confidence.graph.node_count)
    scores = ucb_candidates_vector(confidence, env_action_set, adv_fixed,
                                   zero_noise(confidence, max(noise_samples, 1)),
                                   sign_grid=sign_grid)
    return int(np.argmax(scores))
