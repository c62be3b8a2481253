import numpy as np
import pytest

from acbo.envs import function_networks as fnet
from acbo.errors import IndexOutOfRange, UnknownEnvironment
from acbo.graph import evaluate_batch, simulate_round, validate_graph


def test_agent_map_worked_examples():
    m = fnet.ActionMap(size=3, c1=2.0, c2=0.0)
    assert fnet.map_action(m, 1) == pytest.approx(0.0)
    assert fnet.map_action(m, 0) == pytest.approx(-1.0)  # -0.5*c1 + c2
    assert fnet.map_action(m, 2) == pytest.approx(1.0)  # +0.5*c1 + c2
    with pytest.raises(IndexOutOfRange):
        fnet.map_action(m, 3)


@pytest.mark.parametrize("k", list(range(2, 65)))
def test_penny_maps_never_emit_zero(k):
    # every penny map used by the registry: symmetric, shifted, and unit-box
    for c1, c2 in ((2.0, 0.0), (10.0, 6.0), (1.0, 0.5)):
        vals = fnet.penny_map(k, c1, c2).values()
        assert np.all(np.abs(vals) > 1e-9)


def test_penny_map_spans_both_signs_for_symmetric_box():
    vals = fnet.penny_map(8, 2.0, 0.0).values()
    assert vals.min() < -0.5 and vals.max() > 0.5
    assert np.all(np.abs(vals) > 0.05)


def test_unknown_environment_rejected():
    with pytest.raises(UnknownEnvironment):
        fnet.make_env("nope")


@pytest.mark.parametrize("name", fnet.ENV_NAMES)
def test_environment_graphs_validate(name):
    env = fnet.make_env(name, K=4, K_adv=4)
    validate_graph(env.graph)
    assert env.graph.reward_node == env.graph.node_count - 1
    assert len(env.agent_nodes) >= 1
    assert len(env.adversary_nodes) >= 1


@pytest.mark.parametrize("name", fnet.ENV_NAMES)
def test_normalized_rewards_land_in_unit_interval(name):
    env = fnet.make_env(name, K=6, K_adv=6)
    rng = np.random.default_rng(7)
    b = 10_000
    agent = np.zeros((b, env.graph.node_count), dtype=np.int64)
    adv = np.zeros((b, env.graph.node_count), dtype=np.int64)
    for node in env.agent_nodes:
        agent[:, node] = rng.integers(0, env.graph.agent_action_sizes[node], b)
    for node in env.adversary_nodes:
        adv[:, node] = rng.integers(0, env.graph.adversary_action_sizes[node], b)
    rewards = evaluate_batch(env.scm, agent, adv)[:, env.graph.reward_node]
    assert np.all(rewards >= 0.0) and np.all(rewards <= 1.0)


def test_dropwave_penny_matches_hand_computation():
    env = fnet.make_env("dropwave_penny", K=8, K_adv=8)
    # agent index (0, 0) maps to continuous (0, 0): X0 = 0, raw Y = 0.5 * adv
    for adv_idx in range(8):
        rec = simulate_round(env.scm, env.profile(0, adv_idx), rng_seed=0)
        adv_val = fnet.map_action(env.nodes[2].adversary_map, adv_idx)
        assert env.decode(3, rec.node_values[3]) == pytest.approx(0.0, abs=1e-12)
        assert env.decode(4, rec.reward) == pytest.approx(0.5 * adv_val, abs=1e-12)


def test_alpine_zero_action_zeroes_the_cascade():
    env = fnet.make_env("alpine_penny", K=3, K_adv=3)
    # agent slot value 0 at the root: -sqrt(0)*sin(0) = 0 -> product collapses
    prof = env.profile(0, 1)
    rec = simulate_round(env.scm, prof, rng_seed=0)
    assert env.decode(env.graph.reward_node, rec.reward) == pytest.approx(0.0, abs=1e-9)


def test_ackley_perturb_zero_actions_give_twenty_plus_e():
    env = fnet.make_env("ackley_perturb", K=5, K_adv=5)
    acts = env.action_tuples
    row = int(np.where((acts[:, :4] == 2).all(axis=1))[0][0])
    advs = env.adversary_tuples
    arow = int(np.where((advs[:, 4:6] == 2).all(axis=1))[0][0])
    rec = simulate_round(env.scm, env.profile(row, arow), rng_seed=0)
    assert env.decode(8, rec.reward) == pytest.approx(20.0 + np.e, abs=1e-9)


def test_perturb_adversary_box_is_one_fifth_of_agent():
    env = fnet.make_env("dropwave_perturb", K=4, K_adv=4)
    agent_box = env.nodes[0].agent_map.box
    adv_box = env.nodes[2].adversary_map.box
    assert adv_box[1] == pytest.approx(agent_box[1] / 5.0)


@pytest.mark.parametrize("name", fnet.ENV_NAMES)
def test_ancestor_locality_on_registered_graphs(name):
    env = fnet.make_env(name, K=3, K_adv=3)
    graph = env.graph
    base_prof = env.profile(0, 0)
    base = simulate_round(env.scm, base_prof, rng_seed=4)
    for j in graph.agent_nodes():
        agent = list(base_prof.agent)
        agent[j] = 1
        moved = simulate_round(
            env.scm, type(base_prof)(agent=tuple(agent), adversary=base_prof.adversary),
            rng_seed=4)
        for i in range(graph.node_count):
            if j not in graph.ancestors(i) and j != i:
                assert moved.node_values[i] == base.node_values[i]


def test_rosenbrock_penny_first_action_is_local_to_x0():
    # a_0 reaches the reward only through X0/X1: not a direct parent of either
    # X1 or Y, so fixing X1 screens it off
    env = fnet.make_env("rosenbrock_penny", K=3, K_adv=3)
    x1, y = 7, env.graph.reward_node
    assert 0 in env.graph.ancestors(y)
    assert 0 not in env.graph.parents[x1]
    assert 0 not in env.graph.parents[y]


def test_adversary_uniform_mode_frequencies():
    env = fnet.make_env("dropwave_penny", K=4, K_adv=8)
    policy = fnet.AdversaryPolicy(random_prob=1.0)
    rng = np.random.default_rng(0)
    counts = np.zeros(env.num_adversary_actions)
    n = 10_000
    w = np.full(env.num_actions, 1.0 / env.num_actions)
    for _ in range(n):
        counts[fnet.adversary_act(policy, env, w, rng)] += 1
    assert np.all(np.abs(counts / n - 1.0 / 8) <= 0.02)


def test_adversary_best_response_flips_sign_on_point_mass():
    env = fnet.make_env("dropwave_penny", K=8, K_adv=8)
    policy = fnet.AdversaryPolicy(random_prob=0.0)
    rng = np.random.default_rng(0)
    table = env.reward_table()
    for a_idx in (0, 17, 40):
        d = fnet.adversary_act(policy, env, a_idx, rng)
        assert table[a_idx, d] == pytest.approx(table[a_idx].min())


def test_adversary_fixed_mode_is_constant():
    env = fnet.make_env("dropwave_penny", K=4, K_adv=4)
    policy = fnet.AdversaryPolicy(mode="fixed")
    rng = np.random.default_rng(0)
    w = np.full(env.num_actions, 1.0 / env.num_actions)
    assert all(fnet.adversary_act(policy, env, w, rng) == 0 for _ in range(5))


def test_calibrated_bounds_are_reproducible():
    stored = fnet._BOUNDS["dropwave_penny"]
    fresh = fnet.calibrate_bounds("dropwave_penny")
    for key, (lo, hi) in fresh.items():
        assert stored[key][0] == pytest.approx(lo, abs=1e-6)
        assert stored[key][1] == pytest.approx(hi, abs=1e-6)
