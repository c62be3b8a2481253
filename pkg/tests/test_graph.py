import numpy as np
import pytest

from acbo.errors import (
    CycleDetected,
    DanglingParent,
    InvalidProfile,
    InvalidTopoOrder,
    RewardHasChildren,
)
from acbo.graph import (
    ActionProfile,
    CausalGraph,
    GroundTruthScm,
    NoiseSpec,
    chain_graph,
    expected_reward,
    simulate_round,
    validate_graph,
)
from conftest import identity_chain_scm


def test_valid_chain_passes():
    validate_graph(chain_graph(3))


def test_two_cycle_detected():
    g = CausalGraph(parents=((1,), (0,), (1,)), agent_action_sizes=(1, 1, 1),
                    adversary_action_sizes=(1, 1, 1), topo_order=(0, 1, 2))
    with pytest.raises(CycleDetected):
        validate_graph(g)


def test_reward_with_children_rejected():
    g = CausalGraph(parents=((), (2,), (0,)), agent_action_sizes=(1, 1, 1),
                    adversary_action_sizes=(1, 1, 1), topo_order=(0, 2, 1))
    with pytest.raises(RewardHasChildren):
        validate_graph(g)


def test_dangling_parent_rejected():
    g = CausalGraph(parents=((), (7,)), agent_action_sizes=(1, 1),
                    adversary_action_sizes=(1, 1), topo_order=(0, 1))
    with pytest.raises(DanglingParent):
        validate_graph(g)


def test_bad_topo_order_rejected():
    g = CausalGraph(parents=((), (0,)), agent_action_sizes=(1, 1),
                    adversary_action_sizes=(1, 1), topo_order=(1, 0))
    with pytest.raises(InvalidTopoOrder):
        validate_graph(g)


def test_identity_chain_propagates_root_value():
    scm = identity_chain_scm(4, k_root=5)
    prof = ActionProfile(agent=(3, 0, 0, 0), adversary=(0, 0, 0, 0))
    rec = simulate_round(scm, prof, rng_seed=0)
    assert np.allclose(rec.node_values, 3 / 4)
    assert rec.reward == pytest.approx(3 / 4)


def test_same_seed_is_bit_identical():
    graph = chain_graph(3, agent_sizes=(4, 1, 1))
    mechs = (lambda z, a, d: float(a), lambda z, a, d: z[0] * 2,
             lambda z, a, d: z[0] + 1)
    noise = (NoiseSpec("uniform", 0.5),) * 3
    scm = GroundTruthScm(graph=graph, mechanisms=mechs, noise=noise)
    prof = ActionProfile(agent=(2, 0, 0), adversary=(0, 0, 0))
    r1 = simulate_round(scm, prof, rng_seed=99)
    r2 = simulate_round(scm, prof, rng_seed=99)
    assert np.array_equal(r1.node_values, r2.node_values)
    assert r1.reward == r2.reward


def test_invalid_profile_rejected():
    scm = identity_chain_scm(2, k_root=3)
    with pytest.raises(InvalidProfile):
        simulate_round(scm, ActionProfile(agent=(3, 0), adversary=(0, 0)), 0)
    with pytest.raises(InvalidProfile):
        simulate_round(scm, ActionProfile(agent=(0,), adversary=(0,)), 0)


def test_noise_bounded_in_unit_interval():
    rng = np.random.default_rng(5)
    for spec in (NoiseSpec("truncnorm", 0.8), NoiseSpec("uniform", 1.0)):
        draws = spec.sample(rng, 100_000)
        assert np.all(np.abs(draws) <= 1.0)
        assert abs(draws.mean()) < 0.02


def test_expected_reward_noiseless_equals_simulated():
    scm = identity_chain_scm(3, k_root=4)
    prof = ActionProfile(agent=(2, 0, 0), adversary=(0, 0, 0))
    rec = simulate_round(scm, prof, rng_seed=7)
    assert expected_reward(scm, prof) == pytest.approx(rec.reward)


def test_expected_reward_concentrates_with_samples():
    # additive zero-mean noise on the reward node: CLT-scale agreement
    graph = chain_graph(2, agent_sizes=(3, 1))
    mechs = (lambda z, a, d: float(a), lambda z, a, d: z[0])
    scale = 0.4
    noise = (NoiseSpec(), NoiseSpec("uniform", scale))
    scm = GroundTruthScm(graph=graph, mechanisms=mechs, noise=noise)
    prof = ActionProfile(agent=(1, 0), adversary=(0, 0))
    n = 4000
    est = expected_reward(scm, prof, num_noise_samples=n, rng_seed=3)
    assert abs(est - 1.0) <= 3.0 * scale / np.sqrt(n)


def test_scm_from_config_round_trip():
    from acbo.graph import scm_from_config

    config = {"nodes": [
        {"agent_values": [0.0, 0.5, 1.0], "mechanism": {"id": "affine",
                                                        "agent_weight": 1.0}},
        {"parents": [0], "mechanism": {"id": "affine", "weights": [2.0],
                                       "bias": 0.25},
         "noise": {"kind": "uniform", "scale": 0.1}},
        {"parents": [1], "adversary_values": [-1.0, 1.0],
         "mechanism": {"id": "product", "adversary_factor": True}},
    ]}
    scm = scm_from_config(config)
    assert scm.graph.agent_action_sizes == (3, 1, 1)
    assert scm.graph.adversary_action_sizes == (1, 1, 2)
    prof = ActionProfile(agent=(2, 0, 0), adversary=(0, 0, 1))
    val = expected_reward(scm, prof, num_noise_samples=4000, rng_seed=1)
    assert val == pytest.approx(2.0 * 1.0 + 0.25, abs=0.01)
    bad = {"nodes": [{"mechanism": {"id": "affine"}},
                     {"parents": [5], "mechanism": {"id": "affine"}}]}
    with pytest.raises(DanglingParent):
        scm_from_config(bad)


def test_ancestor_locality_under_fixed_seed():
    # two independent roots; flipping root 1 cannot move node 2 (child of 0)
    graph = CausalGraph(parents=((), (), (0,), (1, 2)),
                        agent_action_sizes=(3, 3, 1, 1),
                        adversary_action_sizes=(1, 1, 1, 1),
                        topo_order=(0, 1, 2, 3))
    mechs = (lambda z, a, d: float(a), lambda z, a, d: 2.0 * np.asarray(a),
             lambda z, a, d: z[0] + 1, lambda z, a, d: z[0] + z[1])
    scm = GroundTruthScm(graph=graph, mechanisms=mechs,
                         noise=(NoiseSpec("uniform", 0.3),) * 4)
    base = simulate_round(scm, ActionProfile((0, 0, 0, 0), (0,) * 4), rng_seed=11)
    moved = simulate_round(scm, ActionProfile((0, 2, 0, 0), (0,) * 4), rng_seed=11)
    assert moved.node_values[2] == base.node_values[2]
    assert moved.node_values[0] == base.node_values[0]
    assert moved.node_values[3] != base.node_values[3]
