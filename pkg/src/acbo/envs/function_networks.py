"""The eight adversarial function-network benchmarks.

Four base networks (drop-wave, alpine cascade, rosenbrock chain, ackley)
each appear in two adversarial flavors: "penny" (a sign-carrying multiplier
on one node, matching-pennies style) and "perturb" (additive corruption of
some agent actions). Every action slot - agent or adversary - is a root
graph node with a known index-to-value map, so downstream mechanisms see
continuous parent values and nodes with several or shared action inputs need
no special casing.

All node observations are min-max normalized to [0, 1] using bounds sampled
offline over the continuous action boxes (seed and sample count recorded
below, 5% margin); the registry freezes those constants so they do not
depend on the grid size K.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import IndexOutOfRange, UnknownEnvironment
from ..gp import ConfidenceModel, GpPosterior, Kernel
from ..graph import (
    ActionProfile,
    CausalGraph,
    GroundTruthScm,
    NoiseSpec,
    evaluate_batch,
    validate_graph,
)

ENV_NAMES = (
    "dropwave_penny",
    "dropwave_perturb",
    "alpine_penny",
    "alpine_perturb",
    "rosenbrock_penny",
    "rosenbrock_perturb",
    "ackley_penny",
    "ackley_perturb",
)

CALIBRATION_SEED = 20240409
CALIBRATION_SAMPLES = 200_000
BOUND_MARGIN = 0.05


# ---------------------------------------------------------------------------
# discrete-to-continuous action maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionMap:
    """Affine embedding of a K-point grid into a continuous interval.

    Penny kinds shrink the grid by epsilon on each side so the image strides
    the interval without ever containing 0 (the odd variant shifts the grid
    half a step off-center for the same reason).
    """

    size: int
    c1: float
    c2: float
    kind: str = "agent_or_perturb"  # agent_or_perturb | penny_even | penny_odd
    epsilon: float = 0.05

    def __post_init__(self):
        if self.kind not in ("agent_or_perturb", "penny_even", "penny_odd"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("size must be >= 1")

    @property
    def box(self) -> tuple[float, float]:
        lo = -0.5 * self.c1 + self.c2
        hi = 0.5 * self.c1 + self.c2
        return (min(lo, hi), max(lo, hi))

    def values(self) -> np.ndarray:
        return map_action(self, np.arange(self.size))


def penny_map(size: int, c1: float, c2: float, epsilon: float = 0.05) -> ActionMap:
    kind = "penny_even" if size % 2 == 0 else "penny_odd"
    return ActionMap(size=size, c1=c1, c2=c2, kind=kind, epsilon=epsilon)


def map_action(amap: ActionMap, discrete):
    """Map a discrete index (or array of indices) to its continuous value."""
    idx = np.asarray(discrete)
    if np.any(idx < 0) or np.any(idx >= amap.size):
        raise IndexOutOfRange(f"index outside [0, {amap.size})")
    denom = max(amap.size - 1, 1)
    if amap.kind == "agent_or_perturb":
        frac = idx / denom if amap.size > 1 else np.full_like(idx, 0.5, dtype=np.float64)
        out = (frac - 0.5) * amap.c1 + amap.c2
    elif amap.kind == "penny_even":
        frac = idx / denom
        out = (frac * (1.0 - 2.0 * amap.epsilon) + amap.epsilon - 0.5) * amap.c1 + amap.c2
    else:  # penny_odd
        frac = (idx + 0.5) / denom
        out = (frac * (1.0 - 2.0 * amap.epsilon) + amap.epsilon - 0.5) * amap.c1 + amap.c2
    if np.isscalar(discrete) or np.ndim(discrete) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# adversary behavior
# ---------------------------------------------------------------------------

@dataclass
class AdversaryPolicy:
    """Mixture of uniform play and an exact best response to the agent's mix."""

    random_prob: float = 0.2
    mode: str = "mixed_best_response"  # mixed_best_response | uniform_random | fixed
    response_samples: int = 512

    def __post_init__(self):
        if not 0.0 <= self.random_prob <= 1.0:
            raise ValueError("random_prob must be in [0, 1]")
        if self.mode not in ("mixed_best_response", "uniform_random", "fixed"):
            raise ValueError(f"unknown adversary mode {self.mode!r}")


# ---------------------------------------------------------------------------
# environment construction
# ---------------------------------------------------------------------------

@dataclass
class _Node:
    name: str
    parents: tuple[int, ...]  # sorted
    take: tuple[int, ...]  # sorted-order -> logical-order permutation
    raw_fn: Callable | None  # logical-order raw parent values -> raw value
    agent_map: ActionMap | None
    adversary_map: ActionMap | None
    bounds: tuple[float, float]


class _Builder:
    def __init__(self, name: str):
        self.name = name
        self.nodes: list[_Node] = []

    def agent_root(self, name: str, amap: ActionMap) -> int:
        self.nodes.append(_Node(name, (), (), None, amap, None, amap.box))
        return len(self.nodes) - 1

    def adversary_root(self, name: str, amap: ActionMap) -> int:
        self.nodes.append(_Node(name, (), (), None, None, amap, amap.box))
        return len(self.nodes) - 1

    def xnode(self, name: str, parents: Sequence[int], raw_fn: Callable,
              bounds: tuple[float, float]) -> int:
        ordered = tuple(sorted(parents))
        take = tuple(ordered.index(p) for p in parents)
        self.nodes.append(_Node(name, ordered, take, raw_fn, None, None, bounds))
        return len(self.nodes) - 1


def _affine(lo: float, hi: float):
    span = hi - lo
    if span <= 0:
        raise ValueError("degenerate bounds")
    encode = lambda v: (v - lo) / span
    decode = lambda u: u * span + lo
    return encode, decode


@dataclass
class EnvSpec:
    """A fully wired benchmark: graph, hidden truth, maps, and normalization."""

    name: str
    graph: CausalGraph
    scm: GroundTruthScm
    nodes: list[_Node]
    policy: AdversaryPolicy
    raw_reward: Callable  # (agent raw vector, adversary raw vector) -> raw reward
    calibration: tuple[int, int] = (CALIBRATION_SEED, CALIBRATION_SAMPLES)
    _cache: dict = field(default_factory=dict, repr=False)

    # -- structure ------------------------------------------------------------

    @property
    def agent_nodes(self) -> tuple[int, ...]:
        return self.graph.agent_nodes()

    @property
    def adversary_nodes(self) -> tuple[int, ...]:
        return self.graph.adversary_nodes()

    @property
    def unknown_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, nd in enumerate(self.nodes) if nd.raw_fn is not None)

    def node_bounds(self, i: int) -> tuple[float, float]:
        return self.nodes[i].bounds

    def encode(self, i: int, value):
        lo, hi = self.nodes[i].bounds
        return (value - lo) / (hi - lo)

    def decode(self, i: int, unit):
        lo, hi = self.nodes[i].bounds
        return unit * (hi - lo) + lo

    # -- joint action enumeration ----------------------------------------------

    def _tuples(self, nodes: tuple[int, ...], key: str) -> np.ndarray:
        if key not in self._cache:
            sizes = [self.graph.agent_action_sizes[i] if key == "agent"
                     else self.graph.adversary_action_sizes[i] for i in nodes]
            combos = np.array(list(itertools.product(*[range(s) for s in sizes])),
                              dtype=np.int64).reshape(-1, len(nodes))
            full = np.zeros((combos.shape[0], self.graph.node_count), dtype=np.int64)
            for col, node in enumerate(nodes):
                full[:, node] = combos[:, col]
            self._cache[key] = full
        return self._cache[key]

    @property
    def action_tuples(self) -> np.ndarray:
        """(|A|, node_count) agent joint index profiles, product order."""
        return self._tuples(self.agent_nodes, "agent")

    @property
    def adversary_tuples(self) -> np.ndarray:
        return self._tuples(self.adversary_nodes, "adversary")

    @property
    def num_actions(self) -> int:
        return self.action_tuples.shape[0]

    @property
    def num_adversary_actions(self) -> int:
        return self.adversary_tuples.shape[0]

    def profile(self, agent_index: int, adversary_index: int) -> ActionProfile:
        return ActionProfile(
            agent=tuple(int(v) for v in self.action_tuples[agent_index]),
            adversary=tuple(int(v) for v in self.adversary_tuples[adversary_index]),
        )

    # -- exact expected rewards -------------------------------------------------

    def reward_table(self) -> np.ndarray:
        """Exact normalized expected reward for every joint play, (|A|, |A'|)."""
        if "table" not in self._cache:
            acts = self.action_tuples
            advs = self.adversary_tuples
            table = np.empty((acts.shape[0], advs.shape[0]))
            for j in range(advs.shape[0]):
                adv = np.broadcast_to(advs[j], acts.shape)
                table[:, j] = evaluate_batch(self.scm, acts, adv)[:, self.graph.reward_node]
            self._cache["table"] = table
        return self._cache["table"]

    # -- embeddings for flat baselines -------------------------------------------

    @property
    def agent_value_matrix(self) -> np.ndarray:
        """Normalized root action values per joint agent action, (|A|, slots)."""
        if "agent_values" not in self._cache:
            cols = []
            for node in self.agent_nodes:
                vals = self.encode(node, self.nodes[node].agent_map.values())
                cols.append(vals[self.action_tuples[:, node]])
            self._cache["agent_values"] = np.stack(cols, axis=1)
        return self._cache["agent_values"]

    @property
    def adversary_value_matrix(self) -> np.ndarray:
        if "adv_values" not in self._cache:
            cols = []
            for node in self.adversary_nodes:
                vals = self.encode(node, self.nodes[node].adversary_map.values())
                cols.append(vals[self.adversary_tuples[:, node]])
            self._cache["adv_values"] = np.stack(cols, axis=1)
        return self._cache["adv_values"]

    # -- model side ---------------------------------------------------------------

    def known_evaluators(self) -> dict[int, Callable]:
        """Exact evaluators for the root nodes (index lookup of mapped values)."""
        out: dict[int, Callable] = {}
        for i, nd in enumerate(self.nodes):
            if nd.raw_fn is not None:
                continue
            if nd.agent_map is not None:
                lut = self.encode(i, nd.agent_map.values())
                out[i] = (lambda z, a, d, lut=lut: lut[np.asarray(a)])
            else:
                lut = self.encode(i, nd.adversary_map.values())
                out[i] = (lambda z, a, d, lut=lut: lut[np.asarray(d)])
        return out

    def empty_posteriors(self, lengthscale: float = 0.2,
                         noise_scale: float = 0.05) -> dict[int, GpPosterior]:
        out = {}
        for i in self.unknown_nodes:
            dim = len(self.graph.parents[i])
            out[i] = GpPosterior(kernel=Kernel(lengthscales=(lengthscale,) * dim),
                                 noise_scale=noise_scale)
        return out

    def confidence(self, gps: dict[int, GpPosterior], beta: float) -> ConfidenceModel:
        return ConfidenceModel(graph=self.graph, gps=gps, beta=beta,
                               known=self.known_evaluators())


def adversary_act(policy: AdversaryPolicy, env: EnvSpec, agent_weights,
                  rng: np.random.Generator) -> int:
    """Choose the adversary's joint action index for one round.

    ``agent_weights`` is the agent's mixed strategy over env.action_tuples
    (an int means a point mass). Best responses minimize the agent's exact
    expected reward, enumerating adversary joint actions; ties go to the
    lowest index.
    """
    n_adv = env.num_adversary_actions
    if policy.mode == "fixed":
        return 0
    if policy.mode == "uniform_random" or rng.random() < policy.random_prob:
        return int(rng.integers(n_adv))
    table = env.reward_table()
    if isinstance(agent_weights, (int, np.integer)):
        expected = table[int(agent_weights)]
    else:
        w = np.asarray(agent_weights, dtype=np.float64)
        if w.shape[0] != env.num_actions:
            raise ValueError("weight vector does not match the action set")
        if env.num_actions <= 4096:
            expected = w @ table
        else:
            draws = rng.choice(env.num_actions, size=policy.response_samples, p=w)
            expected = table[draws].mean(axis=0)
    return int(np.argmin(expected))


# ---------------------------------------------------------------------------
# the eight networks
# ---------------------------------------------------------------------------

def _dropwave_q(x):
    return np.cos(3.0 * x) / (2.0 + 0.5 * x * x)


def _alpine_g(v):
    return -np.sqrt(np.maximum(v, 0.0)) * np.sin(v)


def _rosen_g(u, v):
    return -100.0 * (v - u * u) ** 2 - (1.0 - u) ** 2 + 10.0


def _build(name: str, K: int, K_adv: int, bounds=None) -> tuple[_Builder, Callable]:
    """Wire nodes and return (builder, raw reward over continuous slot values)."""
    b = _Builder(name)
    if bounds is None:
        bounds = _BOUNDS[name]

    if name == "dropwave_penny":
        a0 = b.agent_root("a0", ActionMap(K, 2.0, 1.0))
        a1 = b.agent_root("a1", ActionMap(K, 2.0, 1.0))
        w = b.adversary_root("adv_y", penny_map(K_adv, 2.0, 0.0))
        x0 = b.xnode("x0", (a0, a1), lambda a, c: np.hypot(a, c), bounds["x0"])
        b.xnode("y", (x0, w), lambda x, v: _dropwave_q(x) * v, bounds["y"])

        def raw(agent, adv):
            return _dropwave_q(np.hypot(agent[0], agent[1])) * adv[0]

    elif name == "dropwave_perturb":
        a0 = b.agent_root("a0", ActionMap(K, 20.48, 0.0))
        a1 = b.agent_root("a1", ActionMap(K, 20.48, 0.0))
        w = b.adversary_root("adv0", ActionMap(K_adv, 2 * 10.24 / 5.0, 0.0))
        x0 = b.xnode("x0", (a0, a1, w),
                     lambda a, c, v: np.hypot(a - v, c), bounds["x0"])
        b.xnode("y", (x0,), _dropwave_q, bounds["y"])

        def raw(agent, adv):
            return _dropwave_q(np.hypot(agent[0] - adv[0], agent[1]))

    elif name == "alpine_penny":
        a0 = b.agent_root("a0", ActionMap(K, 10.0, 5.0))
        a1 = b.agent_root("a1", ActionMap(K, 10.0, 5.0))
        a3 = b.agent_root("a3", ActionMap(K, 10.0, 5.0))
        w2 = b.adversary_root("adv2", penny_map(K_adv, 10.0, 6.0))
        x0 = b.xnode("x0", (a0,), _alpine_g, bounds["x0"])
        x1 = b.xnode("x1", (a1, x0), lambda a, x: _alpine_g(a) * x, bounds["x1"])
        x2 = b.xnode("x2", (w2, x1), lambda v, x: _alpine_g(v) * x, bounds["x2"])
        b.xnode("y", (a3, x2), lambda a, x: _alpine_g(a) * x, bounds["y"])

        def raw(agent, adv):
            x = _alpine_g(agent[0])
            x = _alpine_g(agent[1]) * x
            x = _alpine_g(adv[0]) * x
            return _alpine_g(agent[2]) * x

    elif name == "alpine_perturb":
        amaps = [b.agent_root(f"a{i}", ActionMap(K, 10.0, 5.0)) for i in range(4)]
        wmaps = [b.adversary_root(f"adv{i}", ActionMap(K_adv, 2.0, 1.0)) for i in range(3)]
        x0 = b.xnode("x0", (amaps[0], wmaps[0]),
                     lambda a, v: _alpine_g(a + v), bounds["x0"])
        x1 = b.xnode("x1", (amaps[1], wmaps[1], x0),
                     lambda a, v, x: _alpine_g(a + v) * x, bounds["x1"])
        x2 = b.xnode("x2", (amaps[2], wmaps[2], x1),
                     lambda a, v, x: _alpine_g(a + v) * x, bounds["x2"])
        b.xnode("y", (amaps[3], x2), lambda a, x: _alpine_g(a) * x, bounds["y"])

        def raw(agent, adv):
            x = _alpine_g(agent[0] + adv[0])
            x = _alpine_g(agent[1] + adv[1]) * x
            x = _alpine_g(agent[2] + adv[2]) * x
            return _alpine_g(agent[3]) * x

    elif name == "rosenbrock_penny":
        amaps = [b.agent_root(f"a{i}", ActionMap(K, 1.0, 0.5)) for i in range(4)]
        w1 = b.adversary_root("adv1", penny_map(K_adv, 1.0, 0.5))
        wy = b.adversary_root("adv_y", penny_map(K_adv, 1.0, 0.5))
        x0 = b.xnode("x0", (amaps[0], amaps[1]), _rosen_g, bounds["x0"])
        x1 = b.xnode("x1", (amaps[1], amaps[2], w1, x0),
                     lambda u, v, w, x: (_rosen_g(u, v) + x) * w, bounds["x1"])
        b.xnode("y", (amaps[2], amaps[3], wy, x1),
                lambda u, v, w, x: (_rosen_g(u, v) + x) * w, bounds["y"])

        def raw(agent, adv):
            x = _rosen_g(agent[0], agent[1])
            x = (_rosen_g(agent[1], agent[2]) + x) * adv[0]
            return (_rosen_g(agent[2], agent[3]) + x) * adv[1]

    elif name == "rosenbrock_perturb":
        amaps = [b.agent_root(f"a{i}", ActionMap(K, 4.0, 0.0)) for i in range(4)]
        w0 = b.adversary_root("adv0", ActionMap(K_adv, 2.0, 0.0))
        w1 = b.adversary_root("adv1", ActionMap(K_adv, 2.0, 0.0))
        x0 = b.xnode("x0", (amaps[0], amaps[1], w0, w1),
                     lambda a, c, u, v: _rosen_g(a + u, c + v), bounds["x0"])
        x1 = b.xnode("x1", (amaps[1], amaps[2], w1, x0),
                     lambda a, c, v, x: _rosen_g(a + v, c) + x, bounds["x1"])
        b.xnode("y", (amaps[2], amaps[3], x1),
                lambda a, c, x: _rosen_g(a, c) + x, bounds["y"])

        def raw(agent, adv):
            x = _rosen_g(agent[0] + adv[0], agent[1] + adv[1])
            x = _rosen_g(agent[1] + adv[1], agent[2]) + x
            return _rosen_g(agent[2], agent[3]) + x

    elif name == "ackley_penny":
        amaps = [b.agent_root(f"a{i}", ActionMap(K, 4.0, 0.0)) for i in range(4)]
        wy = b.adversary_root("adv_y", penny_map(K_adv, 2.0, 0.0))
        x0 = b.xnode("x0", tuple(amaps),
                     lambda *a: 0.25 * sum(v * v for v in a), bounds["x0"])
        x1 = b.xnode("x1", tuple(amaps),
                     lambda *a: 0.25 * sum(np.cos(2 * np.pi * v) for v in a), bounds["x1"])
        b.xnode("y", (x0, x1, wy),
                lambda p, q, w: 20.0 * w * np.exp(-0.2 * np.sqrt(np.maximum(p, 0.0)))
                + np.exp(q), bounds["y"])

        def raw(agent, adv):
            p = 0.25 * sum(v * v for v in agent)
            q = 0.25 * sum(np.cos(2 * np.pi * v) for v in agent)
            return 20.0 * adv[0] * np.exp(-0.2 * np.sqrt(max(p, 0.0))) + np.exp(q)

    elif name == "ackley_perturb":
        amaps = [b.agent_root(f"a{i}", ActionMap(K, 4.0, 0.0)) for i in range(4)]
        w0 = b.adversary_root("adv0", ActionMap(K_adv, 2.0, 0.0))
        w1 = b.adversary_root("adv1", ActionMap(K_adv, 2.0, 0.0))

        def _sq(a0, a1, a2, a3, v0, v1):
            return 0.25 * ((a0 + v0) ** 2 + (a1 + v1) ** 2 + a2 * a2 + a3 * a3)

        def _cs(a0, a1, a2, a3, v0, v1):
            two_pi = 2 * np.pi
            return 0.25 * (np.cos(two_pi * (a0 + v0)) + np.cos(two_pi * (a1 + v1))
                           + np.cos(two_pi * a2) + np.cos(two_pi * a3))

        x0 = b.xnode("x0", (*amaps, w0, w1), _sq, bounds["x0"])
        x1 = b.xnode("x1", (*amaps, w0, w1), _cs, bounds["x1"])
        b.xnode("y", (x0, x1),
                lambda p, q: 20.0 * np.exp(-0.2 * np.sqrt(np.maximum(p, 0.0))) + np.exp(q),
                bounds["y"])

        def raw(agent, adv):
            p = _sq(*agent, *adv)
            q = _cs(*agent, *adv)
            return 20.0 * np.exp(-0.2 * np.sqrt(max(p, 0.0))) + np.exp(q)

    else:
        raise UnknownEnvironment(name)
    return b, raw


def make_env(name: str, K: int = 8, K_adv: int = 8,
             observation_noise: float = 0.0,
             policy: AdversaryPolicy | None = None) -> EnvSpec:
    """Build a registered environment at grid sizes K (agent) and K_adv."""
    if name not in ENV_NAMES:
        raise UnknownEnvironment(name)
    if K < 2 or K_adv < 2:
        raise ValueError("grid sizes must be >= 2")
    builder, raw = _build(name, K, K_adv)
    nodes = builder.nodes
    n = len(nodes)
    parents = tuple(nd.parents for nd in nodes)
    graph = CausalGraph(
        parents=parents,
        agent_action_sizes=tuple(nd.agent_map.size if nd.agent_map else 1 for nd in nodes),
        adversary_action_sizes=tuple(
            nd.adversary_map.size if nd.adversary_map else 1 for nd in nodes
        ),
        topo_order=tuple(range(n)),
    )
    validate_graph(graph)

    mechanisms = []
    noise = []
    for i, nd in enumerate(nodes):
        enc, _ = _affine(*nd.bounds)
        if nd.raw_fn is None:
            amap = nd.agent_map or nd.adversary_map
            lut = enc(amap.values())
            if nd.agent_map is not None:
                mechanisms.append(lambda z, a, d, lut=lut: lut[np.asarray(a)])
            else:
                mechanisms.append(lambda z, a, d, lut=lut: lut[np.asarray(d)])
            noise.append(NoiseSpec())
        else:
            decs = [_affine(*nodes[p].bounds)[1] for p in nd.parents]
            take = nd.take

            def mech(z, a, d, fn=nd.raw_fn, decs=decs, take=take, enc=enc):
                args = [decs[k](z[k]) for k in take]
                return enc(fn(*args))

            mechanisms.append(mech)
            noise.append(NoiseSpec("truncnorm", observation_noise)
                         if observation_noise > 0 else NoiseSpec())
    scm = GroundTruthScm(graph=graph, mechanisms=tuple(mechanisms), noise=tuple(noise))
    return EnvSpec(
        name=name,
        graph=graph,
        scm=scm,
        nodes=nodes,
        policy=policy or AdversaryPolicy(),
        raw_reward=raw,
    )


# ---------------------------------------------------------------------------
# offline bound calibration
# ---------------------------------------------------------------------------

def calibrate_bounds(name: str, samples: int = CALIBRATION_SAMPLES,
                     seed: int = CALIBRATION_SEED,
                     lattice: int = 5) -> dict[str, tuple[float, float]]:
    """Recompute the per-X-node raw min/max (with margin) by dense continuous
    sampling of the action boxes plus a full box-corner lattice (random draws
    alone miss the sharp valley corners of the rosenbrock cascade). The
    registry stores frozen outputs of this."""
    builder, _ = _build(name, 8, 8, bounds=_PLACEHOLDER)
    rng = np.random.default_rng(seed)
    nodes = builder.nodes
    roots = [i for i, nd in enumerate(nodes) if nd.raw_fn is None]
    axes = []
    for i in roots:
        nd = nodes[i]
        amap = nd.agent_map or nd.adversary_map
        lo, hi = amap.box
        axes.append(np.linspace(lo, hi, lattice))
    mesh = np.meshgrid(*axes, indexing="ij")
    draws: dict[int, np.ndarray] = {}
    for k, i in enumerate(roots):
        nd = nodes[i]
        amap = nd.agent_map or nd.adversary_map
        lo, hi = amap.box
        draws[i] = np.concatenate([rng.uniform(lo, hi, samples), mesh[k].ravel()])
    out = {}
    for i, nd in enumerate(nodes):
        if nd.raw_fn is None:
            continue
        args = [draws[nd.parents[k]] for k in nd.take]
        vals = nd.raw_fn(*args)
        lo, hi = float(np.min(vals)), float(np.max(vals))
        margin = BOUND_MARGIN * max(hi - lo, 1e-12)
        out[nd.name] = (lo - margin, hi + margin)
        draws[i] = vals
    return out


class _AnyBounds(dict):
    def __missing__(self, key):
        return (0.0, 1.0)


_PLACEHOLDER = _AnyBounds()

# Frozen normalization constants: min/max of each X node over 200k continuous
# uniform draws of every action box plus a 5-point box lattice, seed 20240409,
# then a 5% margin (regenerate with calibrate_bounds).
_BOUNDS: dict[str, dict[str, tuple[float, float]]] = {
    "dropwave_penny": {"x0": (-0.141421, 2.969848), "y": (-0.550000, 0.550000)},
    "dropwave_perturb": {"x0": (-0.799770, 16.795161), "y": (-0.440814, 0.544801)},
    "alpine_penny": {"x0": (-3.057676, 2.432315), "x1": (-6.830206, 8.585783),
                     "x2": (-24.491263, 28.164536), "y": (-72.197343, 66.233638)},
    "alpine_perturb": {"x0": (-3.114506, 3.625748), "x1": (-10.337775, 12.027188),
                       "x2": (-34.144142, 39.844941), "y": (-104.490434, 92.311319)},
    "rosenbrock_penny": {"x0": (-96.050000, 15.050000), "x1": (-191.050000, 30.050000),
                         "y": (-287.100000, 45.100000)},
    "rosenbrock_perturb": {"x0": (-15126.800000, 730.800000),
                           "x1": (-27838.600000, 1346.600000),
                           "y": (-31618.050000, 1537.050000)},
    "ackley_penny": {"x0": (-0.200000, 4.200000), "x1": (-1.095151, 1.099769),
                     "y": (-19.943312, 24.749786)},
    "ackley_perturb": {"x0": (-0.325000, 6.825000), "x1": (-1.096129, 1.099816),
                       "y": (12.939970, 23.183916)},
}
