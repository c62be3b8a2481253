"""Optimistic counterfactual reward estimates propagated through the graph.

Any plausible mechanism in the confidence tube can be written as
mean + beta * std * eta with eta mapping into [-1, 1]; maximizing expected
reward over plausible systems becomes a box-constrained search over the
per-node eta functions. The oracle always evaluates the canonical constants
{0, +1, -1} (so optimism over the plug-in mean is deterministic) and then
refines with random-restart projected gradient ascent, gradients taken by
central finite differences. A dense constant-eta grid search doubles as the
reference oracle for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import GraphTooLarge, NonFiniteObjective
from .gp import ConfidenceModel
from .graph import ActionProfile, NoiseSpec


# ---------------------------------------------------------------------------
# eta parameterizations
# ---------------------------------------------------------------------------

def _ff_init(rng: np.random.Generator, dim: int, width: int) -> dict[str, np.ndarray]:
    s1 = 1.0 / math.sqrt(max(dim, 1))
    s2 = 1.0 / math.sqrt(width)
    return {
        "w1": rng.normal(0.0, s1, (width, max(dim, 1))),
        "b1": rng.normal(0.0, 0.1, width),
        "w2": rng.normal(0.0, s2, (width, width)),
        "b2": rng.normal(0.0, 0.1, width),
        "w3": rng.normal(0.0, s2, width),
        "b3": rng.normal(0.0, 0.3, 1),
    }


@dataclass
class EtaFunction:
    """Per-node functions into [-1, 1]: constants, or a small tanh network."""

    kind: str  # constant | feedforward
    nodes: tuple[int, ...]
    params: dict[int, object]

    @classmethod
    def constant(cls, nodes: Sequence[int], value: float | Mapping[int, float]) -> "EtaFunction":
        if isinstance(value, Mapping):
            params = {i: float(value[i]) for i in nodes}
        else:
            params = {i: float(value) for i in nodes}
        return cls(kind="constant", nodes=tuple(nodes), params=params)

    @classmethod
    def random_constant(cls, nodes: Sequence[int], rng: np.random.Generator) -> "EtaFunction":
        return cls(kind="constant", nodes=tuple(nodes),
                   params={i: float(rng.uniform(-1, 1)) for i in nodes})

    @classmethod
    def random_feedforward(cls, nodes: Sequence[int], dims: Mapping[int, int],
                           width: int, rng: np.random.Generator) -> "EtaFunction":
        params = {i: _ff_init(rng, dims[i], width) for i in nodes}
        return cls(kind="feedforward", nodes=tuple(nodes), params=params)

    def value(self, node: int, queries: np.ndarray) -> np.ndarray:
        """Evaluate eta_node at a (rows, d) batch; output in [-1, 1]."""
        rows = queries.shape[0]
        if self.kind == "constant":
            v = min(1.0, max(-1.0, float(self.params[node])))
            return np.full(rows, v)
        p = self.params[node]
        if queries.shape[1] == 0:
            queries = np.zeros((rows, 1))
        h = np.tanh(queries @ p["w1"].T + p["b1"])
        h = np.tanh(h @ p["w2"].T + p["b2"])
        return np.tanh(h @ p["w3"] + p["b3"][0])

    # -- flat parameter vector, for finite-difference ascent ------------------

    def flatten(self) -> np.ndarray:
        if self.kind == "constant":
            return np.array([self.params[i] for i in self.nodes], dtype=np.float64)
        chunks = []
        for i in self.nodes:
            p = self.params[i]
            chunks.extend(p[k].ravel() for k in ("w1", "b1", "w2", "b2", "w3", "b3"))
        return np.concatenate(chunks)

    def with_flat(self, theta: np.ndarray) -> "EtaFunction":
        if self.kind == "constant":
            params = {i: float(theta[k]) for k, i in enumerate(self.nodes)}
            return EtaFunction(kind="constant", nodes=self.nodes, params=params)
        params: dict[int, object] = {}
        pos = 0
        for i in self.nodes:
            old = self.params[i]
            new = {}
            for k in ("w1", "b1", "w2", "b2", "w3", "b3"):
                size = old[k].size
                new[k] = theta[pos: pos + size].reshape(old[k].shape)
                pos += size
            params[i] = new
        return EtaFunction(kind="feedforward", nodes=self.nodes, params=params)


# ---------------------------------------------------------------------------
# propagation engine
# ---------------------------------------------------------------------------

def _action_key_groups(cm: ConfidenceModel, node: int, a_cols: np.ndarray,
                       d_cols: np.ndarray):
    """Group batch rows whose inputs at ``node`` must coincide.

    A node's value is a function of the action indices of its ancestors (for
    row-independent eta and zero noise), so rows sharing that integer key
    share the GP query. Returns (representatives, inverse) or None when the
    key would overflow.
    """
    graph = cm.graph
    anc = graph.ancestors(node) | {node}
    code = np.zeros(a_cols.shape[0], dtype=np.int64)
    mult = 1
    for j in sorted(anc):
        for sizes, cols in ((graph.agent_action_sizes, a_cols),
                            (graph.adversary_action_sizes, d_cols)):
            if sizes[j] > 1:
                if mult > (1 << 56) // sizes[j]:
                    return None
                code += cols[:, j] * mult
                mult *= sizes[j]
    _, rep, inv = np.unique(code, return_index=True, return_inverse=True)
    return rep, inv


def _propagate_engine(cm: ConfidenceModel, agent_idx: np.ndarray,
                      adv_idx: np.ndarray, eta, noise: np.ndarray,
                      dedup_cache: dict | None = None) -> np.ndarray:
    """Evaluate the tube-reparameterized system for a batch of action profiles.

    agent_idx/adv_idx: (B, n) index arrays. eta: EtaFunction, or a mapping
    node -> constant (scalar or per-action (B,) array). noise: (S, n) draws
    added to every node. Returns per-action noise-averaged reward, shape (B,).
    ``dedup_cache`` may be shared across calls with identical index matrices
    and zero noise (the per-round candidate sweep).
    """
    graph = cm.graph
    b, n = agent_idx.shape
    s = noise.shape[0]
    rows = b * s
    # Row layout: action-major, sample-minor.
    a_cols = np.repeat(agent_idx, s, axis=0)  # (rows, n)
    d_cols = np.repeat(adv_idx, s, axis=0)
    noise_rows = np.tile(noise, (b, 1))  # (rows, n)
    # integer-key dedup is sound only when rows with equal ancestor actions
    # are guaranteed identical values: row-independent eta and no noise
    eta_row_indep = isinstance(eta, EtaFunction) or all(
        np.ndim(v) == 0 for v in eta.values())
    can_key_dedup = eta_row_indep and (s == 1 and not noise.any())
    values = np.zeros((n, rows))
    for i in graph.topo_order:
        pa = list(graph.parents[i])
        z = values[pa] if pa else np.zeros((0, rows))
        if i in cm.known:
            v = np.asarray(cm.known[i](z, a_cols[:, i], d_cols[:, i]), dtype=np.float64)
            v = np.broadcast_to(v, (rows,)).copy()
        else:
            gp = cm.gps[i]
            queries = cm.node_input(i, z, a_cols[:, i], d_cols[:, i])
            if isinstance(eta, EtaFunction):
                e = eta.value(i, queries)
            else:
                const = eta.get(i, 0.0) if hasattr(eta, "get") else 0.0
                e = np.repeat(np.clip(np.broadcast_to(const, (b,)), -1.0, 1.0), s)
            # the tube width is only needed where eta is nonzero, and
            # root-driven nodes repeat few distinct inputs across the action
            # batch: solve each distinct row once
            need_std = bool(np.any(e != 0.0)) and cm.beta != 0.0
            groups = None
            if rows > 64 and can_key_dedup:
                if dedup_cache is not None and i in dedup_cache:
                    groups = dedup_cache[i]
                else:
                    groups = _action_key_groups(cm, i, a_cols, d_cols)
                    if groups is not None and groups[0].shape[0] > rows // 2:
                        groups = None
                    if dedup_cache is not None:
                        dedup_cache[i] = groups
            if groups is not None:
                rep, inverse = groups
                q = queries[rep]
                if need_std:
                    mu_u, std_u = gp.mean_std(q)
                    mu, std = mu_u[inverse], std_u[inverse]
                else:
                    mu, std = gp.mean_only(q)[inverse], 0.0
            elif need_std:
                mu, std = gp.mean_std(queries)
            else:
                mu, std = gp.mean_only(queries), 0.0
            v = mu + cm.beta * std * e
        if i in cm.caps:
            np.minimum(v, cm.caps[i], out=v)
        values[i] = v + noise_rows[:, i]
    return values[graph.reward_node].reshape(b, s).mean(axis=1)


def _as_index_matrix(profile_part: Sequence[int], n: int) -> np.ndarray:
    arr = np.asarray(profile_part, dtype=np.int64).reshape(1, n)
    return arr


def propagate(confidence: ConfidenceModel, eta: EtaFunction,
              profile: ActionProfile, noise_draws: np.ndarray) -> float:
    """Noise-averaged reward of the eta-selected plausible system at one profile."""
    n = confidence.graph.node_count
    noise_draws = np.atleast_2d(np.asarray(noise_draws, dtype=np.float64))
    if noise_draws.shape[1] != n:
        raise ValueError("noise_draws must have one column per node")
    out = _propagate_engine(
        confidence,
        _as_index_matrix(profile.agent, n),
        _as_index_matrix(profile.adversary, n),
        eta,
        noise_draws,
    )
    return float(out[0])


def zero_noise(confidence: ConfidenceModel, samples: int = 1) -> np.ndarray:
    return np.zeros((samples, confidence.graph.node_count))


def draw_noise(noise_specs: Sequence[NoiseSpec], samples: int,
               rng: np.random.Generator) -> np.ndarray:
    cols = [spec.sample(rng, samples) for spec in noise_specs]
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# the oracle
# ---------------------------------------------------------------------------

@dataclass
class UcbRequest:
    """One optimistic-estimate query plus the search budget for it."""

    confidence: ConfidenceModel
    agent_action: tuple[int, ...]
    adversary_action: tuple[int, ...]
    noise_samples: int = 1
    restarts: int = 5
    max_ascent_steps: int = 100
    step_size: float = 0.05
    step_decay: float = 0.99
    parameterization: str = "constant"  # constant | feedforward
    hidden_width: int = 16
    fd_step: float = 1e-4
    rng_seed: int = 0
    noise_specs: tuple[NoiseSpec, ...] | None = None  # None -> noiseless


def _candidate_etas(unknown: tuple[int, ...], reward: int,
                    sign_grid: bool, max_sign_nodes: int) -> list[dict[int, float]]:
    cands = [
        {i: 0.0 for i in unknown},
        {i: 1.0 for i in unknown},
        {i: -1.0 for i in unknown},
    ]
    upstream = [i for i in unknown if i != reward]
    if sign_grid and 0 < len(upstream) <= max_sign_nodes:
        for mask in range(2 ** len(upstream)):
            c = {reward: 1.0} if reward in unknown else {}
            for k, i in enumerate(upstream):
                c[i] = 1.0 if (mask >> k) & 1 else -1.0
            cands.append(c)
    return cands


def ucb_candidates_vector(cm: ConfidenceModel, agent_profiles: np.ndarray,
                          adv_profile: Sequence[int], noise: np.ndarray,
                          sign_grid: bool = True, max_sign_nodes: int = 3) -> np.ndarray:
    """Best candidate-eta propagation for every action row; shape (B,).

    The vectorized path used inside round loops: canonical constants plus the
    per-node boundary sign combinations, no per-action ascent.
    """
    n = cm.graph.node_count
    b = agent_profiles.shape[0]
    adv = np.broadcast_to(np.asarray(adv_profile, dtype=np.int64), (b, n))
    if cm.eta_plus_one:
        cands = [{i: 1.0 for i in cm.unknown_nodes}]
    else:
        cands = _candidate_etas(cm.unknown_nodes, cm.graph.reward_node,
                                sign_grid, max_sign_nodes)
    best = np.full(b, -np.inf)
    dedup_cache: dict = {}
    for c in cands:
        vals = _propagate_engine(cm, agent_profiles, adv, c, noise,
                                 dedup_cache=dedup_cache)
        np.maximum(best, vals, out=best)
    if not np.isfinite(best).all():
        raise NonFiniteObjective("candidate propagation produced non-finite values")
    return best


def _ascent(cm: ConfidenceModel, agent: np.ndarray, adv: np.ndarray,
            eta0: EtaFunction, noise: np.ndarray, steps: int, lr0: float,
            decay: float, h: float) -> float:
    """Projected gradient ascent on the flat eta parameters; returns best value.

    Steps that would lower the objective shrink the rate and retry
    (backtracking), so the budget is spent converging rather than
    oscillating.
    """
    theta = eta0.flatten()
    constant = eta0.kind == "constant"

    def objective(th: np.ndarray) -> float:
        val = _propagate_engine(cm, agent, adv, eta0.with_flat(th), noise)[0]
        if not np.isfinite(val):
            raise NonFiniteObjective("ascent objective is non-finite")
        return float(val)

    if constant:
        nodes = eta0.nodes

        def batch_objective(thetas: np.ndarray) -> np.ndarray:
            # One engine call evaluates every perturbed parameter vector.
            consts = {i: thetas[:, k] for k, i in enumerate(nodes)}
            rep = np.broadcast_to(agent, (thetas.shape[0], agent.shape[1]))
            rep_adv = np.broadcast_to(adv, (thetas.shape[0], adv.shape[1]))
            vals = _propagate_engine(cm, rep, rep_adv, consts, noise)
            if not np.isfinite(vals).all():
                raise NonFiniteObjective("ascent objective is non-finite")
            return vals

    def gradient(th: np.ndarray) -> tuple[float, np.ndarray]:
        if constant:
            probe = np.vstack([th] + [th + sgn * h * np.eye(len(th))[j]
                                      for j in range(len(th)) for sgn in (+1.0, -1.0)])
            vals = batch_objective(probe)
            return float(vals[0]), (vals[1::2] - vals[2::2]) / (2.0 * h)
        grad = np.empty_like(th)
        for j in range(len(th)):
            e = np.zeros_like(th)
            e[j] = h
            grad[j] = (objective(th + e) - objective(th - e)) / (2.0 * h)
        return objective(th), grad

    def project(th: np.ndarray) -> np.ndarray:
        return np.clip(th, -1.0, 1.0) if constant else th

    cur, grad = gradient(theta)
    best = cur
    lr = lr0
    for _ in range(steps):
        cand = project(theta + lr * grad)
        val = objective(cand)
        if val >= cur - 1e-14:
            theta, cur = cand, val
            cur, grad = gradient(theta)
            lr /= decay  # cautiously re-expand after a successful step
        else:
            lr *= 0.5
            if lr < 1e-6:
                break
        best = max(best, cur)
    return best


def ucb(request: UcbRequest) -> float:
    """Optimistic counterfactual estimate for one (action, adversary) pair.

    Deterministic given the request seed: the noise matrix is drawn once and
    shared by every candidate, restart, and ascent step, and restart j uses
    the same stream regardless of how many restarts follow it.
    """
    cm = request.confidence
    n = cm.graph.node_count
    if request.noise_specs is None:
        noise = np.zeros((max(request.noise_samples, 1), n))
    else:
        rng = np.random.default_rng(np.random.SeedSequence((request.rng_seed, 0x6E)))
        noise = draw_noise(request.noise_specs, max(request.noise_samples, 1), rng)
    agent = _as_index_matrix(request.agent_action, n)
    adv = _as_index_matrix(request.adversary_action, n)
    unknown = cm.unknown_nodes

    if cm.eta_plus_one or not unknown:
        val = _propagate_engine(cm, agent, adv, {i: 1.0 for i in unknown}, noise)[0]
        if not np.isfinite(val):
            raise NonFiniteObjective("propagation produced a non-finite value")
        return float(val)

    cands = _candidate_etas(unknown, cm.graph.reward_node, True, 3)
    cand_vals = [
        _propagate_engine(cm, agent, adv, c, noise)[0] for c in cands
    ]
    if not np.isfinite(cand_vals).all():
        raise NonFiniteObjective("candidate propagation produced non-finite values")
    best = float(max(cand_vals))
    if request.max_ascent_steps <= 0 or request.restarts <= 0:
        return best
    dims = {i: cm.input_dim(i) for i in unknown}
    # polish the incumbent candidate, then the random restarts
    starts = []
    if request.parameterization != "feedforward":
        starts.append(EtaFunction.constant(
            unknown, cands[int(np.argmax(cand_vals))]))
    for j in range(request.restarts):
        rng = np.random.default_rng(np.random.SeedSequence((request.rng_seed, j)))
        if request.parameterization == "feedforward":
            starts.append(EtaFunction.random_feedforward(
                unknown, dims, request.hidden_width, rng))
        else:
            starts.append(EtaFunction.random_constant(unknown, rng))
    for eta0 in starts:
        best = max(best, _ascent(cm, agent, adv, eta0, noise,
                                 request.max_ascent_steps, request.step_size,
                                 request.step_decay, request.fd_step))
    return best


def ucb_bruteforce(confidence: ConfidenceModel, profile: ActionProfile,
                   grid_resolution: int, noise_draws: np.ndarray) -> float:
    """Exhaustive constant-eta grid reference; exact within that family."""
    unknown = confidence.unknown_nodes
    if len(unknown) > 6:
        raise GraphTooLarge(f"{len(unknown)} unknown nodes exceed the brute-force cap of 6")
    if grid_resolution > 21:
        raise GraphTooLarge("grid_resolution exceeds the brute-force cap of 21")
    n = confidence.graph.node_count
    noise_draws = np.atleast_2d(np.asarray(noise_draws, dtype=np.float64))
    if not unknown:
        return propagate(confidence, EtaFunction.constant((), 0.0), profile, noise_draws)
    grid = np.linspace(-1.0, 1.0, grid_resolution)
    mesh = np.meshgrid(*[grid] * len(unknown), indexing="ij")
    combos = {node: m.ravel() for node, m in zip(unknown, mesh)}
    b = combos[unknown[0]].shape[0]
    agent = np.broadcast_to(_as_index_matrix(profile.agent, n), (b, n))
    adv = np.broadcast_to(_as_index_matrix(profile.adversary, n), (b, n))
    vals = _propagate_engine(confidence, agent, adv, combos, noise_draws)
    if not np.isfinite(vals).all():
        raise NonFiniteObjective("grid propagation produced non-finite values")
    return float(vals.max())
