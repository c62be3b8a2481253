"""One multiplicative-weights learner per intervenable node.

Each agent treats the other agents' realized actions as part of the
environment when scoring its own alternatives, so a round costs the sum of
the per-node action counts rather than their product. Also hosts the
diminishing-returns checker and the game-curvature estimate that justify the
decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridTooLarge, ZeroBaseGradient
from .gp import ConfidenceModel
from .mw import MwState, mw_sample, mw_update, clip01
from .oracle import ucb_candidates_vector, zero_noise, draw_noise


class CounterfactualScorer:
    """Vectorized per-action optimistic scores with an evaluation counter."""

    def __init__(self, confidence: ConfidenceModel, noise_samples: int = 1,
                 noise_specs=None, rng_seed: int = 0, sign_grid: bool = True):
        self.confidence = confidence
        self.sign_grid = sign_grid
        if noise_specs is None:
            self.noise = zero_noise(confidence, max(noise_samples, 1))
        else:
            rng = np.random.default_rng(np.random.SeedSequence((rng_seed, 0x6E)))
            self.noise = draw_noise(noise_specs, max(noise_samples, 1), rng)
        self.calls = 0

    def score(self, agent_profiles: np.ndarray,
              observed_adversary: Sequence[int]) -> np.ndarray:
        agent_profiles = np.asarray(agent_profiles, dtype=np.int64)
        self.calls += agent_profiles.shape[0]
        return ucb_candidates_vector(self.confidence, agent_profiles,
                                     observed_adversary, self.noise,
                                     sign_grid=self.sign_grid)


@dataclass
class AgentBank:
    """One weight vector per agent-intervenable node."""

    nodes: tuple[int, ...]
    states: dict[int, MwState]
    node_count: int

    @classmethod
    def uniform(cls, graph, learning_rate: float) -> "AgentBank":
        nodes = graph.agent_nodes()
        states = {i: MwState.uniform(graph.agent_action_sizes[i], learning_rate)
                  for i in nodes}
        return cls(nodes=nodes, states=states, node_count=graph.node_count)

    def sample_joint(self, rng_seed: int) -> tuple[int, ...]:
        """Per-node draws with seeds derived from (rng_seed, node)."""
        joint = [0] * self.node_count
        for i in self.nodes:
            seq = np.random.SeedSequence((rng_seed, i))
            joint[i] = mw_sample(self.states[i], seq)
        return tuple(joint)


def dcbo_round(bank: AgentBank, confidence: ConfidenceModel,
               observed_adversary: Sequence[int], rng_seed: int,
               realized_joint: tuple[int, ...] | None = None,
               scorer: CounterfactualScorer | None = None,
               ) -> tuple[tuple[int, ...], AgentBank]:
    """Sample each agent's action, then give every agent counterfactual
    feedback at the realized play of the others and update its weights.

    ``realized_joint`` lets the caller pass the action it already executed
    (recomputable from the same seed); ``scorer`` carries the evaluation
    counter across rounds.
    """
    joint = bank.sample_joint(rng_seed) if realized_joint is None else realized_joint
    if scorer is None:
        scorer = CounterfactualScorer(confidence)
    else:
        scorer.confidence = confidence
    new_states: dict[int, MwState] = {}
    for i in bank.nodes:
        k = bank.states[i].num_actions
        profiles = np.tile(np.asarray(joint, dtype=np.int64), (k, 1))
        profiles[:, i] = np.arange(k)
        scores = scorer.score(profiles, observed_adversary)
        new_states[i] = mw_update(bank.states[i], clip01(scores))
    return joint, AgentBank(nodes=bank.nodes, states=new_states,
                            node_count=bank.node_count)


# ---------------------------------------------------------------------------
# reward-structure diagnostics
# ---------------------------------------------------------------------------

@dataclass
class SubmodularityReport:
    grid_points: int
    pairs_checked: int
    increments_checked: int
    dr_violations: int
    monotone_violations: int
    worst_dr_gap: float
    worst_monotone_gap: float
    examples: list = field(default_factory=list)  # up to 10 (x, y, dim, k, gap)

    @property
    def is_dr_submodular(self) -> bool:
        return self.dr_violations == 0

    @property
    def is_monotone(self) -> bool:
        return self.monotone_violations == 0


def check_dr_submodular(reward_oracle: Callable[[np.ndarray], float],
                        grid: Sequence[Sequence[float]],
                        tolerance: float = 1e-9,
                        max_pairs: int = 200_000) -> SubmodularityReport:
    """Test diminishing returns and monotonicity on a coordinate grid.

    For every comparable pair x <= y, coordinate i, and increment k that keeps
    both shifted points on the grid, checks
    f(x + k e_i) - f(x) >= f(y + k e_i) - f(y) - tolerance.
    """
    axes = [np.asarray(g, dtype=np.float64) for g in grid]
    for ax in axes:
        if np.any(np.diff(ax) <= 0):
            raise ValueError("grid axes must be strictly increasing")
    sizes = [len(ax) for ax in axes]
    total = int(np.prod(sizes))
    if total * total > max_pairs * 4:
        raise GridTooLarge(f"{total} grid points give too many pairs")
    mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    idx_mesh = np.stack(
        [m.ravel() for m in np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")],
        axis=1,
    )
    fvals = np.array([float(reward_oracle(p)) for p in mesh])

    leq = np.all(mesh[:, None, :] <= mesh[None, :, :] + 1e-12, axis=2)
    pairs = np.argwhere(leq & ~np.eye(total, dtype=bool))
    if pairs.shape[0] > max_pairs:
        raise GridTooLarge(f"{pairs.shape[0]} comparable pairs exceed the limit")

    mono_gaps = fvals[pairs[:, 0]] - fvals[pairs[:, 1]]
    monotone_violations = int(np.sum(mono_gaps > tolerance))
    worst_mono = float(np.max(mono_gaps, initial=0.0))

    # flat index strides for shifting one coordinate by grid steps
    strides = np.ones(len(sizes), dtype=np.int64)
    for d in range(len(sizes) - 2, -1, -1):
        strides[d] = strides[d + 1] * sizes[d + 1]

    dr_violations = 0
    increments = 0
    worst_dr = 0.0
    examples: list = []
    for d, ax in enumerate(axes):
        for steps in range(1, sizes[d]):
            ok = (idx_mesh[pairs[:, 0], d] + steps < sizes[d]) & (
                idx_mesh[pairs[:, 1], d] + steps < sizes[d]
            )
            # equal-value increments only (uniform axes always qualify)
            kx = ax[np.minimum(idx_mesh[pairs[:, 0], d] + steps, sizes[d] - 1)] - ax[
                idx_mesh[pairs[:, 0], d]]
            ky = ax[np.minimum(idx_mesh[pairs[:, 1], d] + steps, sizes[d] - 1)] - ax[
                idx_mesh[pairs[:, 1], d]]
            ok &= np.abs(kx - ky) < 1e-12
            if not ok.any():
                continue
            sel = pairs[ok]
            shift = steps * strides[d]
            gain_x = fvals[sel[:, 0] + shift] - fvals[sel[:, 0]]
            gain_y = fvals[sel[:, 1] + shift] - fvals[sel[:, 1]]
            gaps = gain_y - gain_x
            increments += sel.shape[0]
            bad = gaps > tolerance
            dr_violations += int(bad.sum())
            if bad.any():
                worst_dr = max(worst_dr, float(gaps[bad].max()))
                for row, gap in zip(sel[bad][:2], gaps[bad][:2]):
                    if len(examples) < 10:
                        examples.append((mesh[row[0]].tolist(), mesh[row[1]].tolist(),
                                         d, float(kx[ok][0]), float(gap)))
    return SubmodularityReport(
        grid_points=total,
        pairs_checked=pairs.shape[0],
        increments_checked=increments,
        dr_violations=dr_violations,
        monotone_violations=monotone_violations,
        worst_dr_gap=worst_dr,
        worst_monotone_gap=worst_mono,
        examples=examples,
    )


def curvature_estimate(reward_oracle: Callable[[np.ndarray, object], float],
                       adversary_sequence: Sequence, a_max: float, dims: int,
                       fd_step: float = 1e-5) -> tuple[float, float]:
    """Average and worst-case game curvature from central-difference gradients.

    The oracle must accept the out-of-box probe point 2*a_max*(1,...,1); use a
    monotone extension of the reward if that point falls outside its domain.
    """
    zero = np.zeros(dims)
    top = np.full(dims, 2.0 * a_max)

    def grad(point: np.ndarray, adv) -> np.ndarray:
        g = np.empty(dims)
        for i in range(dims):
            e = np.zeros(dims)
            e[i] = fd_step
            g[i] = (reward_oracle(point + e, adv) - reward_oracle(point - e, adv)) / (
                2.0 * fd_step
            )
        return g

    g0 = np.array([grad(zero, adv) for adv in adversary_sequence])
    g2 = np.array([grad(top, adv) for adv in adversary_sequence])
    if np.any(np.abs(g0) < 1e-10):
        raise ZeroBaseGradient("gradient at the origin vanishes on some coordinate")
    c_wc = 1.0 - float(np.min(g2 / g0))
    sums0 = g0.sum(axis=0)
    if np.any(np.abs(sums0) < 1e-10):
        raise ZeroBaseGradient("summed base gradient vanishes on some coordinate")
    c_avg = 1.0 - float(np.min(g2.sum(axis=0) / sums0))
    clamp = lambda c: min(1.0, max(0.0, c))
    return clamp(c_avg), clamp(c_wc)
