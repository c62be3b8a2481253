"""Shared builders for small synthetic systems used across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from acbo.gp import ConfidenceModel, GpPosterior, Kernel
from acbo.graph import CausalGraph, GroundTruthScm, NoiseSpec


def make_chain_confidence(n_unknown: int, rng: np.random.Generator,
                          k_agent: int = 3, beta: float = 1.0,
                          n_data: int = 5, lengthscale: float = 0.7,
                          noise_scale: float = 0.05) -> ConfidenceModel:
    """Agent root feeding a chain of GP-modeled nodes; last node is reward.

    Node 0 is a known root whose index maps to linspace(0, 1, K); nodes
    1..n_unknown carry posteriors fit on random data in [0, 1].
    """
    n = 1 + n_unknown
    parents = ((),) + tuple((i - 1,) for i in range(1, n))
    graph = CausalGraph(
        parents=parents,
        agent_action_sizes=(k_agent,) + (1,) * n_unknown,
        adversary_action_sizes=(1,) * n,
        topo_order=tuple(range(n)),
    )
    lut = np.linspace(0.0, 1.0, k_agent)
    known = {0: lambda z, a, d: lut[np.asarray(a)]}
    gps = {}
    for i in range(1, n):
        gp = GpPosterior(kernel=Kernel(lengthscales=(lengthscale,)),
                         noise_scale=noise_scale)
        for _ in range(n_data):
            gp = gp.update(rng.uniform(0, 1, 1), rng.normal(0.4, 0.3))
        gps[i] = gp
    return ConfidenceModel(graph=graph, gps=gps, beta=beta, known=known)


def make_single_node_confidence(k_agent: int = 4, k_adv: int = 3,
                                beta: float = 1.5, n_data: int = 4,
                                seed: int = 0) -> ConfidenceModel:
    """One unknown reward node whose kernel sees the embedded (a, a') pair."""
    rng = np.random.default_rng(seed)
    graph = CausalGraph(parents=((),), agent_action_sizes=(k_agent,),
                        adversary_action_sizes=(k_adv,), topo_order=(0,))
    gp = GpPosterior(kernel=Kernel(lengthscales=(0.5, 0.5)), noise_scale=0.1)
    for _ in range(n_data):
        gp = gp.update(rng.uniform(0, 1, 2), rng.normal(0.5, 0.2))
    return ConfidenceModel(
        graph=graph, gps={0: gp}, beta=beta, known={},
        agent_embed={0: np.linspace(0, 1, k_agent)[:, None]},
        adversary_embed={0: np.linspace(0, 1, k_adv)[:, None]},
    )


def identity_chain_scm(n: int, k_root: int = 5) -> GroundTruthScm:
    """Noiseless chain whose root emits its action index / (K-1) and whose
    inner nodes copy their parent."""
    parents = ((),) + tuple((i - 1,) for i in range(1, n))
    graph = CausalGraph(
        parents=parents,
        agent_action_sizes=(k_root,) + (1,) * (n - 1),
        adversary_action_sizes=(1,) * n,
        topo_order=tuple(range(n)),
    )
    mechs = [lambda z, a, d: np.asarray(a) / (k_root - 1)]
    for _ in range(1, n):
        mechs.append(lambda z, a, d: z[0])
    return GroundTruthScm(graph=graph, mechanisms=tuple(mechs))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
