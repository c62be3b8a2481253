"""Causal graph, ground-truth structural model, and one-round simulation.

A system is a DAG over scalar nodes; the last node is the reward. Each node
takes its parents' values plus one discrete agent action index and one
discrete adversary action index. Decoding indices to continuous values is the
environment's job: mechanisms here are opaque callables built by the envs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    DanglingParent,
    InvalidProfile,
    InvalidTopoOrder,
    RewardHasChildren,
)

# (parent_values, agent_action_index, adversary_action_index) -> node value.
# Env-built mechanisms also accept equal-length arrays and broadcast.
Mechanism = Callable[[np.ndarray, int, int], float]


@dataclass(frozen=True)
class CausalGraph:
    """DAG over scalar nodes with per-node discrete action-space sizes.

    The last node in index order is the reward and must have no children.
    A size of 1 marks a node that the corresponding player cannot act on.
    """

    parents: tuple[tuple[int, ...], ...]
    agent_action_sizes: tuple[int, ...]
    adversary_action_sizes: tuple[int, ...]
    topo_order: tuple[int, ...]

    @property
    def node_count(self) -> int:
        return len(self.parents)

    @property
    def reward_node(self) -> int:
        return self.node_count - 1

    def agent_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.agent_action_sizes) if k > 1)

    def adversary_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.adversary_action_sizes) if k > 1)

    def ancestors(self, node: int) -> set[int]:
        out: set[int] = set()
        stack = list(self.parents[node])
        while stack:
            p = stack.pop()
            if p not in out:
                out.add(p)
                stack.extend(self.parents[p])
        return out


def chain_graph(n: int, agent_sizes: Sequence[int] | None = None,
                adversary_sizes: Sequence[int] | None = None) -> CausalGraph:
    """Convenience constructor for a path 0 -> 1 -> ... -> n-1."""
    parents = tuple(() if i == 0 else (i - 1,) for i in range(n))
    ones = tuple([1] * n)
    return CausalGraph(
        parents=parents,
        agent_action_sizes=tuple(agent_sizes) if agent_sizes else ones,
        adversary_action_sizes=tuple(adversary_sizes) if adversary_sizes else ones,
        topo_order=tuple(range(n)),
    )


def validate_graph(graph: CausalGraph) -> None:
    """Raise the first violated structural invariant; return None when valid."""
    n = graph.node_count
    if not (len(graph.agent_action_sizes) == len(graph.adversary_action_sizes)
            == len(graph.topo_order) == n):
        raise InvalidTopoOrder("field lengths disagree with node count")
    for i, pa in enumerate(graph.parents):
        for p in pa:
            if not (0 <= p < n):
                raise DanglingParent(f"node {i} lists parent {p} outside [0, {n})")
            if p == i:
                raise CycleDetected(f"node {i} is its own parent")
    # Kahn's algorithm detects cycles.
    indeg = [len(pa) for pa in graph.parents]
    children: list[list[int]] = [[] for _ in range(n)]
    for i, pa in enumerate(graph.parents):
        for p in pa:
            children[p].append(i)
    queue = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if seen != n:
        raise CycleDetected("parent lists contain a cycle")
    if children[graph.reward_node]:
        raise RewardHasChildren(
            f"reward node {graph.reward_node} has children {children[graph.reward_node]}"
        )
    if sorted(graph.topo_order) != list(range(n)):
        raise InvalidTopoOrder("topo_order is not a permutation of the nodes")
    pos = {v: k for k, v in enumerate(graph.topo_order)}
    for i, pa in enumerate(graph.parents):
        for p in pa:
            if pos[p] >= pos[i]:
                raise InvalidTopoOrder(f"parent {p} does not precede node {i}")


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean bounded node noise: none, truncated Gaussian, or uniform.

    Samples always lie in [-1, 1]; ``scale`` is the std (truncnorm) or the
    half-width (uniform).
    """

    kind: str = "none"  # none | truncnorm | uniform
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "truncnorm", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "uniform" and not 0.0 <= self.scale <= 1.0:
            raise ValueError("uniform noise half-width must be in [0, 1]")

    @property
    def is_zero(self) -> bool:
        return self.kind == "none" or self.scale == 0.0

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        if self.is_zero:
            return np.zeros(size)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size)
        draws = rng.normal(0.0, self.scale, size)
        bad = np.abs(draws) > 1.0
        while bad.any():  # rejection keeps the distribution truncated, mean zero
            draws[bad] = rng.normal(0.0, self.scale, int(bad.sum()))
            bad = np.abs(draws) > 1.0
        return draws


@dataclass(frozen=True)
class GroundTruthScm:
    """The simulator's hidden truth: mechanisms plus per-node noise."""

    graph: CausalGraph
    mechanisms: tuple[Mechanism, ...]
    noise: tuple[NoiseSpec, ...] = ()

    def __post_init__(self):
        if not self.noise:
            object.__setattr__(
                self, "noise", tuple(NoiseSpec() for _ in range(self.graph.node_count))
            )
        if len(self.mechanisms) != self.graph.node_count:
            raise ValueError("one mechanism per node required")
        if len(self.noise) != self.graph.node_count:
            raise ValueError("one noise spec per node required")

    @property
    def is_noiseless(self) -> bool:
        return all(sp.is_zero for sp in self.noise)


@dataclass(frozen=True)
class ActionProfile:
    """Per-node discrete action indices for both players."""

    agent: tuple[int, ...]
    adversary: tuple[int, ...]


@dataclass(frozen=True)
class RoundRecord:
    round: int
    profile: ActionProfile
    node_values: np.ndarray
    reward: float


def _check_profile(graph: CausalGraph, profile: ActionProfile) -> None:
    if len(profile.agent) != graph.node_count or len(profile.adversary) != graph.node_count:
        raise InvalidProfile("profile length does not match node count")
    for i in range(graph.node_count):
        if not 0 <= profile.agent[i] < graph.agent_action_sizes[i]:
            raise InvalidProfile(f"agent index {profile.agent[i]} out of range at node {i}")
        if not 0 <= profile.adversary[i] < graph.adversary_action_sizes[i]:
            raise InvalidProfile(
                f"adversary index {profile.adversary[i]} out of range at node {i}"
            )


def _evaluate(scm: GroundTruthScm, profile: ActionProfile, noise: np.ndarray) -> np.ndarray:
    values = np.zeros(scm.graph.node_count)
    for i in scm.graph.topo_order:
        z = values[list(scm.graph.parents[i])]
        values[i] = scm.mechanisms[i](z, profile.agent[i], profile.adversary[i]) + noise[i]
    return values


def simulate_round(scm: GroundTruthScm, profile: ActionProfile, rng_seed: int,
                   round_index: int = 0) -> RoundRecord:
    """Evaluate one joint intervention; deterministic given the seed.

    Noise is drawn for every node up front (in node-index order) so that the
    realized noise does not depend on action values.
    """
    _check_profile(scm.graph, profile)
    rng = np.random.default_rng(rng_seed)
    noise = np.array([sp.sample(rng, 1)[0] for sp in scm.noise])
    values = _evaluate(scm, profile, noise)
    return RoundRecord(
        round=round_index,
        profile=profile,
        node_values=values,
        reward=float(values[scm.graph.reward_node]),
    )


def expected_reward(scm: GroundTruthScm, profile: ActionProfile,
                    num_noise_samples: int = 64, rng_seed: int = 0) -> float:
    """E[reward | actions] over the node noise; exact when noiseless."""
    _check_profile(scm.graph, profile)
    if scm.is_noiseless:
        zero = np.zeros(scm.graph.node_count)
        return float(_evaluate(scm, profile, zero)[scm.graph.reward_node])
    if num_noise_samples < 1:
        raise ValueError("num_noise_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    total = 0.0
    for _ in range(num_noise_samples):
        noise = np.array([sp.sample(rng, 1)[0] for sp in scm.noise])
        total += _evaluate(scm, profile, noise)[scm.graph.reward_node]
    return total / num_noise_samples


# ---------------------------------------------------------------------------
# declarative graph configs
# ---------------------------------------------------------------------------

def _affine_mechanism(spec: dict, agent_values, adversary_values):
    weights = np.asarray(spec.get("weights", ()), dtype=np.float64)
    bias = float(spec.get("bias", 0.0))
    wa = float(spec.get("agent_weight", 0.0))
    wd = float(spec.get("adversary_weight", 0.0))

    def mech(z, a, d):
        out = bias + (weights @ z if weights.size else 0.0)
        if wa:
            out = out + wa * agent_values[np.asarray(a)]
        if wd:
            out = out + wd * adversary_values[np.asarray(d)]
        return out

    return mech


def _product_mechanism(spec: dict, agent_values, adversary_values):
    scale = float(spec.get("scale", 1.0))
    use_agent = bool(spec.get("agent_factor", False))
    use_adv = bool(spec.get("adversary_factor", False))

    def mech(z, a, d):
        out = np.prod(z, axis=0) * scale if z.shape[0] else np.asarray(scale,
                                                                       dtype=float)
        if use_agent:
            out = out * agent_values[np.asarray(a)]
        if use_adv:
            out = out * adversary_values[np.asarray(d)]
        return out

    return mech


_MECHANISMS = {"affine": _affine_mechanism, "product": _product_mechanism}


def scm_from_config(config: dict) -> GroundTruthScm:
    """Build a validated ground-truth system from a declarative config.

    Schema: {"nodes": [ {"parents": [ints], "agent_values": [floats]?,
    "adversary_values": [floats]?, "mechanism": {"id": "affine"|"product",
    ...params}, "noise": {"kind": ..., "scale": ...}? }, ... ]} with nodes in
    topological order and the last node the reward. Action-space sizes are
    the lengths of the value lists (default 1); "affine" takes per-parent
    "weights", "bias", "agent_weight", "adversary_weight"; "product" takes
    "scale" and boolean "agent_factor"/"adversary_factor".
    """
    nodes = config["nodes"]
    parents = tuple(tuple(sorted(nd.get("parents", ()))) for nd in nodes)
    agent_sizes, adv_sizes, mechanisms, noise = [], [], [], []
    for nd in nodes:
        a_vals = np.asarray(nd.get("agent_values", [0.0]), dtype=np.float64)
        d_vals = np.asarray(nd.get("adversary_values", [0.0]), dtype=np.float64)
        agent_sizes.append(len(a_vals))
        adv_sizes.append(len(d_vals))
        mspec = dict(nd["mechanism"])
        builder = _MECHANISMS.get(mspec.pop("id"))
        if builder is None:
            raise ValueError(f"unknown mechanism id in {nd['mechanism']}")
        mechanisms.append(builder(mspec, a_vals, d_vals))
        nspec = nd.get("noise", {})
        noise.append(NoiseSpec(kind=nspec.get("kind", "none"),
                               scale=float(nspec.get("scale", 0.0))))
    graph = CausalGraph(parents=parents, agent_action_sizes=tuple(agent_sizes),
                        adversary_action_sizes=tuple(adv_sizes),
                        topo_order=tuple(range(len(nodes))))
    validate_graph(graph)
    return GroundTruthScm(graph=graph, mechanisms=tuple(mechanisms),
                          noise=tuple(noise))


def evaluate_batch(scm: GroundTruthScm, agent_idx: np.ndarray,
                   adversary_idx: np.ndarray) -> np.ndarray:
    """Vectorized noiseless node evaluation for (B, node_count) index arrays.

    Requires mechanisms that broadcast over arrays (all bundled envs do);
    used to build exact expected-reward tables.
    """
    if not scm.is_noiseless:
        raise ValueError("batch evaluation is defined for noiseless systems")
    b = agent_idx.shape[0]
    values = np.zeros((scm.graph.node_count, b))
    for i in scm.graph.topo_order:
        pa = list(scm.graph.parents[i])
        z = values[pa] if pa else np.zeros((0, b))
        values[i] = scm.mechanisms[i](z, agent_idx[:, i], adversary_idx[:, i])
    return values.T
