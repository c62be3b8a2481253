import numpy as np
import pytest

from acbo.envs import sms
from acbo.errors import InvalidDepot, MalformedRow, MissingCovariate
from acbo.graph import ActionProfile, validate_graph
from acbo.oracle import ucb_bruteforce, ucb_candidates_vector, zero_noise


def tiny_config(**kw):
    depot_xy = np.array([[0.0, 0.0], [0.5, 0.0], [5.0, 5.0], [5.5, 5.0]])
    return sms.SmsConfig(depot_xy=depot_xy, regions=((0, 1), (2, 3)),
                         trucks=2, bikes_per_truck=1, **kw)


def day_from(trips):
    return sms.DemandDay(day=0, trips=np.array(trips, dtype=float).reshape(-1, 5),
                         covariates=np.array([0.5, 0.0, 0.5]))


def test_zero_demand_zero_trips():
    cfg = tiny_config()
    counts, total = sms.step_day(cfg, [0, 2], day_from(np.zeros((0, 5))))
    assert total == 0 and np.all(counts == 0)


def test_single_trip_served_and_bike_relocated():
    cfg = tiny_config()
    # starts near depot 0; ends near depot 3
    day = day_from([[0.1, 0.0, 5.4, 5.0, 9.0]])
    counts, total = sms.step_day(cfg, [0, 0], day)
    assert total == 1
    assert counts.tolist() == [1, 0]
    # second trip from the far side can now be served by the relocated bike
    day2 = day_from([[0.1, 0.0, 5.4, 5.0, 9.0], [5.4, 5.1, 0.0, 0.0, 10.0]])
    counts2, total2 = sms.step_day(cfg, [0, 0], day2)
    assert total2 == 2
    assert counts2.tolist() == [1, 1]


def test_simultaneous_trips_one_bike_input_order_wins():
    cfg = tiny_config()
    day = day_from([[0.1, 0.0, 5.4, 5.0, 7.0],
                    [0.0, 0.1, 5.4, 5.0, 7.0]])  # same timestamp
    counts, total = sms.step_day(cfg, [0, 0], day)
    # both trucks stack depot 0 with 1 bike each -> both trips served
    assert total == 2
    cfg1 = tiny_config()
    counts, total = sms.step_day(cfg1, [0, 2], day)
    assert total == 1  # single local bike: the first input row wins


def test_trip_outside_radius_unserved():
    cfg = tiny_config(service_radius=0.2)
    day = day_from([[1.5, 0.0, 5.0, 5.0, 1.0]])
    counts, total = sms.step_day(cfg, [0, 1], day)
    assert total == 0


def test_invalid_allocation_rejected():
    cfg = tiny_config()
    with pytest.raises(InvalidDepot):
        sms.step_day(cfg, [0, 9], day_from(np.zeros((0, 5))))
    with pytest.raises(InvalidDepot):
        sms.step_day(cfg, [0], day_from(np.zeros((0, 5))))


def test_region_counts_sum_to_total(rng):
    cfg = tiny_config()
    trips = np.column_stack([
        rng.uniform(-1, 6, (30, 2)), rng.uniform(-1, 6, (30, 2)),
        rng.uniform(0, 24, 30)])
    counts, total = sms.step_day(cfg, [0, 3], day_from(trips))
    assert counts.sum() == total
    assert total <= 30


# --- csv ingestion ----------------------------------------------------------

def _write_csvs(tmp_path, trip_rows, cov_rows):
    trips = tmp_path / "trips.csv"
    covs = tmp_path / "covs.csv"
    trips.write_text("day,start_x,start_y,end_x,end_y,timestamp\n"
                     + "\n".join(trip_rows) + ("\n" if trip_rows else ""))
    covs.write_text("day,temperature,rainfall\n" + "\n".join(cov_rows)
                    + ("\n" if cov_rows else ""))
    return str(trips), str(covs)


def test_empty_file_gives_empty_list(tmp_path):
    trips, covs = _write_csvs(tmp_path, [], [])
    assert sms.load_trip_csv(trips, covs) == []


def test_total_demand_normalizes_min_max(tmp_path):
    rows = ["0,0,0,1,1,5"] * 3 + ["1,0,0,1,1,5"] * 5
    trips, covs = _write_csvs(tmp_path, rows, ["0,10,0", "1,20,1"])
    days = sms.load_trip_csv(trips, covs)
    assert [d.covariates[2] for d in days] == [0.0, 1.0]
    assert [d.covariates[0] for d in days] == [0.0, 1.0]


def test_malformed_row_reports_line(tmp_path):
    rows = ["0,0,0,1,1,5", "0,oops,0,1,1,5"]
    trips, covs = _write_csvs(tmp_path, rows, ["0,10,0"])
    with pytest.raises(MalformedRow, match="line 3"):
        sms.load_trip_csv(trips, covs)


def test_missing_covariate_detected(tmp_path):
    trips, covs = _write_csvs(tmp_path, ["0,0,0,1,1,5", "1,0,0,1,1,5"], ["0,10,0"])
    with pytest.raises(MissingCovariate):
        sms.load_trip_csv(trips, covs)


def test_weekend_days_skipped(tmp_path):
    rows = [f"{d},0,0,1,1,5" for d in range(8)]
    covrows = [f"{d},10,0" for d in range(8)]
    trips, covs = _write_csvs(tmp_path, rows, covrows)
    days = sms.load_trip_csv(trips, covs, skip_weekends=True)
    assert [d.day for d in days] == [0, 1, 2, 3, 4, 7]


# --- synthetic demand --------------------------------------------------------

def test_synth_zero_intensity_is_empty():
    xy, regions, _ = sms.synth_layout(0, 8, 2)
    cfg = sms.SmsConfig(depot_xy=xy, regions=regions, trucks=2, bikes_per_truck=4)
    days = sms.synth_demand(3, 30, cfg, intensity=0.0)
    assert all(d.trips.shape[0] == 0 for d in days)


def test_synth_demand_deterministic():
    xy, regions, _ = sms.synth_layout(1, 8, 2)
    cfg = sms.SmsConfig(depot_xy=xy, regions=regions, trucks=2, bikes_per_truck=4)
    a = sms.synth_demand(9, 20, cfg)
    b = sms.synth_demand(9, 20, cfg)
    assert all(np.array_equal(x.trips, y.trips) for x, y in zip(a, b))
    assert all(np.array_equal(x.covariates, y.covariates) for x, y in zip(a, b))


def test_synth_demand_scales_with_intensity():
    xy, regions, _ = sms.synth_layout(1, 8, 2)
    cfg = sms.SmsConfig(depot_xy=xy, regions=regions, trucks=2, bikes_per_truck=4)
    lo = np.mean([d.trips.shape[0] for d in sms.synth_demand(5, 200, cfg, 1.0)])
    hi = np.mean([d.trips.shape[0] for d in sms.synth_demand(5, 200, cfg, 2.0)])
    assert abs(hi / lo - 2.0) <= 0.2


# --- region-sum confidence model ---------------------------------------------

def _toy_env(days=5):
    xy, regions, _ = sms.synth_layout(2, 6, 2)
    cfg = sms.SmsConfig(depot_xy=xy, regions=regions, trucks=2, bikes_per_truck=4)
    demand = sms.synth_demand(11, days, cfg)
    return sms.SmsEnv(config=cfg, days=demand)


def test_sms_graph_validates():
    env = _toy_env()
    validate_graph(env.graph)
    assert len(env.region_nodes) == 2
    assert env.graph.agent_action_sizes[env.truck_nodes[0]] == 6


def _score(env, gps, beta, allocation, day_idx=0):
    cm = sms.sms_confidence(env, gps, beta)
    joint = np.asarray(env.allocation_joint(allocation), dtype=np.int64)[None, :]
    return float(ucb_candidates_vector(cm, joint, env.day_adversary(day_idx),
                                       np.zeros((1, env.graph.node_count)))[0])


def test_confidence_beta_zero_is_cap_weighted_sum_of_means():
    env = _toy_env()
    gps = env.empty_posteriors()
    rng = np.random.default_rng(0)
    for node in env.region_nodes:
        for _ in range(4):
            d = len(env.graph.parents[node])
            gps[node] = gps[node].update(rng.uniform(0, 1, d), rng.uniform(0, 0.6))
    score = _score(env, gps, 0.0, [0, 3])
    fracs = sms.allocation_fracs(env.config, [0, 3])
    mus = []
    for r, node in enumerate(env.region_nodes):
        x = env.region_input(r, fracs, env.days[0].covariates)
        mu, _ = gps[node].mean_var(x[None, :])
        mus.append(mu[0])
    w = env.region_caps / env.region_caps.sum()
    assert score == pytest.approx(float(w @ np.asarray(mus)), abs=1e-12)


def test_confidence_empty_posterior_prior_is_clipped():
    env = _toy_env()
    gps = env.empty_posteriors()
    score = _score(env, gps, beta=2.0, allocation=[0, 3])
    # prior mu=0, sigma=1: each region scores min(1, 2.0) = 1
    assert score == pytest.approx(1.0, abs=1e-12)


def test_confidence_monotone_in_beta():
    env = _toy_env()
    gps = env.empty_posteriors()
    rng = np.random.default_rng(1)
    for node in env.region_nodes:
        d = len(env.graph.parents[node])
        for _ in range(6):
            gps[node] = gps[node].update(rng.uniform(0, 1, d), rng.uniform(0, 0.4))
    scores = [_score(env, gps, b, [1, 4]) for b in (0.0, 0.3, 0.8, 1.5)]
    assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))


def test_upper_edge_shortcut_matches_bruteforce_grid():
    # monotone known aggregator: pinning eta at +1 equals the grid max
    env = _toy_env()
    gps = env.empty_posteriors()
    rng = np.random.default_rng(3)
    for node in env.region_nodes:
        d = len(env.graph.parents[node])
        for _ in range(5):
            gps[node] = gps[node].update(rng.uniform(0, 1, d), rng.uniform(0, 0.3))
    beta = 0.4  # small enough that the per-region caps stay inactive
    cm_shortcut = sms.sms_confidence(env, gps, beta)
    from dataclasses import replace
    cm_full = replace(cm_shortcut, eta_plus_one=False, caps={})
    joint = env.allocation_joint([2, 5])
    adv = env.day_adversary(1)
    prof = ActionProfile(agent=joint, adversary=adv)
    noise = zero_noise(cm_full)
    grid = ucb_bruteforce(cm_full, prof, grid_resolution=21, noise_draws=noise)
    shortcut = float(ucb_candidates_vector(
        cm_shortcut, np.asarray(joint, dtype=np.int64)[None, :], adv, noise)[0])
    assert shortcut == pytest.approx(grid, abs=1e-6)
