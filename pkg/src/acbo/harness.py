"""Config-driven experiment runner: wires environments, algorithms, seeds,
and horizons; logs rounds; computes hindsight regret; emits CSV summaries.

Seeds run independently (set ACBO_THREADS>1 to fan them out over processes);
within a seed every per-action score is computed in one vectorized call.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import FlatGpModel, gpmw_round, gpucb_round, mcbo_round
from .distributed import AgentBank, CounterfactualScorer, dcbo_round
from .envs import function_networks as fnet
from .envs import sms as sms_mod
from .errors import ActionSpaceTooLarge, UnknownEnvironment
from .gp import BetaSchedule, GpPosterior, Kernel, beta_at, information_gain
from .graph import simulate_round
from .mw import MwState, cbo_mw_round, fixed_horizon_rate, mw_sample

ALGORITHMS = ("cbo_mw", "d_cbo_mw", "gp_mw", "d_gp_mw", "gp_ucb", "mcbo", "random")

CSV_HEADER = ("env,algorithm,seed,round,agent_action,adversary_action,"
              "reward,expected_reward,cum_reward,regret")


@dataclass
class ExperimentConfig:
    """One experiment: an environment, an algorithm, and its knobs."""

    env: dict
    algorithm: str
    horizon: int
    seeds: tuple[int, ...] = (0,)
    beta: float = 2.0
    beta_mode: str = "constant"  # constant | lemma1
    lengthscale: float = 0.2
    model_noise: float = 0.05
    tau_mode: str = "fixed_horizon"  # fixed_horizon | doubling_trick
    oracle: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.seeds = tuple(int(s) for s in self.seeds)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if isinstance(data.get("seeds"), str):
            lo, hi = data["seeds"].split("..")
            data["seeds"] = tuple(range(int(lo), int(hi) + 1))
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        text = Path(path).read_bytes()
        if str(path).endswith(".toml"):
            try:
                import tomllib  # py >= 3.11
            except ImportError:  # pragma: no cover
                import tomli as tomllib
            return cls.from_dict(tomllib.loads(text.decode()))
        return cls.from_dict(json.loads(text.decode()))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunLog:
    """Per-round trace of one seed plus its regret curve."""

    env: str
    algorithm: str
    seed: int
    agent_actions: np.ndarray  # flat joint index per round
    adversary_actions: np.ndarray
    rewards: np.ndarray  # realized (normalized for networks, raw trips for SMS)
    expected_rewards: np.ndarray
    regret: np.ndarray  # hindsight curve; NaN when the action space is too large

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    @property
    def cum_rewards(self) -> np.ndarray:
        return np.cumsum(self.rewards)


def make_environment(env_cfg: dict):
    """Instantiate the environment named in a config block."""
    cfg = dict(env_cfg)
    name = cfg.pop("name")
    if name in fnet.ENV_NAMES:
        return fnet.make_env(name, **cfg)
    if name == "sms_synthetic":
        layout_seed = cfg.pop("layout_seed", 7)
        demand_seed = cfg.pop("demand_seed", 1234)
        n_depots = cfg.pop("depots", 20)
        n_regions = cfg.pop("regions", 4)
        days = cfg.pop("days", 200)
        demand_kw = {k: cfg.pop(k) for k in ("intensity", "base_rates", "start_spread")
                     if k in cfg}
        xy, regions, _ = sms_mod.synth_layout(layout_seed, n_depots, n_regions)
        config = sms_mod.SmsConfig(depot_xy=xy, regions=regions,
                                   horizon_days=days, **cfg)
        demand = sms_mod.synth_demand(demand_seed, days, config, **demand_kw)
        return sms_mod.SmsEnv(config=config, days=demand)
    if name == "sms_csv":
        layout = json.loads(Path(cfg.pop("layout")).read_text())
        config = sms_mod.SmsConfig.from_depot_list(
            layout["depots"], layout["regions"],
            **{k: layout[k] for k in ("trucks", "bikes_per_truck", "service_radius")
               if k in layout})
        demand = sms_mod.load_trip_csv(cfg.pop("trips"), cfg.pop("covariates"),
                                       skip_weekends=cfg.pop("skip_weekends", True))
        return sms_mod.SmsEnv(config=config, days=demand)
    raise UnknownEnvironment(name)


# ---------------------------------------------------------------------------
# function-network loop
# ---------------------------------------------------------------------------

def _flat_index(env, joint: tuple[int, ...]) -> int:
    idx = 0
    for node in env.agent_nodes:
        idx = idx * env.graph.agent_action_sizes[node] + joint[node]
    return idx


class _NodeModels:
    """Per-node posteriors plus the running beta schedule."""

    def __init__(self, env, cfg: ExperimentConfig):
        self.env = env
        self.gps = env.empty_posteriors(lengthscale=cfg.lengthscale,
                                        noise_scale=cfg.model_noise)
        self.cfg = cfg
        m = len(env.unknown_nodes)
        self.schedule = BetaSchedule(
            kind=cfg.beta_mode, constant_value=cfg.beta, rkhs_bound=cfg.beta,
            node_count=max(m, 1), noise_scale=max(cfg.model_noise, 1e-3))

    def observe(self, record) -> None:
        for i in self.env.unknown_nodes:
            x = record.node_values[list(self.env.graph.parents[i])]
            self.gps[i] = self.gps[i].update(x, record.node_values[i])

    def beta(self, t: int) -> float:
        if self.schedule.kind == "constant":
            return self.schedule.constant_value
        gamma = 0.0
        for gp in self.gps.values():
            if gp.n:
                gamma = max(gamma, information_gain(gp.inputs, gp.kernel,
                                                    max(gp.noise_scale, 1e-3)))
        return beta_at(self.schedule, t, gamma)

    def confidence(self, t: int):
        return self.env.confidence(self.gps, self.beta(t))


def _init_rounds(env, rng: np.random.Generator) -> list:
    """2m+1 uniform joint profiles to seed the posteriors."""
    m = len(env.agent_nodes)
    rounds = []
    for _ in range(2 * m + 1):
        a = int(rng.integers(env.num_actions))
        d = int(rng.integers(env.num_adversary_actions))
        rounds.append((a, d))
    return rounds


_ALG_CODE = {name: k for k, name in enumerate(ALGORITHMS)}


def _run_network_seed(cfg: ExperimentConfig, seed: int) -> RunLog:
    env = make_environment(cfg.env)
    alg = cfg.algorithm
    table = env.reward_table()
    master = np.random.SeedSequence((_ALG_CODE[alg], seed))
    seeds = master.generate_state(4 * cfg.horizon + 8, dtype=np.uint64)
    rng_adv = np.random.default_rng(np.random.SeedSequence((seed, 0xADD)))
    rng_init = np.random.default_rng(np.random.SeedSequence((seed, 0x1217)))

    oracle_cfg = dict(cfg.oracle)
    sign_grid = oracle_cfg.get("sign_grid", True)
    noise_samples = oracle_cfg.get("noise_samples", 1)
    noise_specs = tuple(env.scm.noise) if not env.scm.is_noiseless else None

    models = _NodeModels(env, cfg) if alg in ("cbo_mw", "mcbo", "d_cbo_mw") else None
    flat = None
    if alg in ("gp_mw", "d_gp_mw"):
        d_in = env.agent_value_matrix.shape[1] + env.adversary_value_matrix.shape[1]
        flat = FlatGpModel(
            gp=GpPosterior(kernel=Kernel(lengthscales=(cfg.lengthscale,) * d_in),
                           noise_scale=cfg.model_noise),
            action_inputs=env.agent_value_matrix,
            adversary_dim=env.adversary_value_matrix.shape[1])
    elif alg == "gp_ucb":
        d_in = env.agent_value_matrix.shape[1]
        flat = FlatGpModel(
            gp=GpPosterior(kernel=Kernel(lengthscales=(cfg.lengthscale,) * d_in),
                           noise_scale=cfg.model_noise),
            action_inputs=env.agent_value_matrix)

    for a_idx, d_idx in _init_rounds(env, rng_init):
        rec = simulate_round(env.scm, env.profile(a_idx, d_idx),
                             rng_seed=int(rng_init.integers(2**32)))
        if models is not None:
            models.observe(rec)
        if flat is not None:
            adv_vals = env.adversary_value_matrix[d_idx] if flat.adversary_dim else ()
            flat = flat.observe(env.agent_value_matrix[a_idx], adv_vals, rec.reward)

    num_actions = env.num_actions
    tau = fixed_horizon_rate(num_actions, cfg.horizon)
    state = MwState.uniform(num_actions, tau)
    bank = None
    if alg in ("d_cbo_mw", "d_gp_mw"):
        bank = AgentBank.uniform(env.graph, fixed_horizon_rate(
            max(env.graph.agent_action_sizes), cfg.horizon))
    scorer = None

    rows = np.zeros((cfg.horizon, 4))
    for t in range(1, cfg.horizon + 1):
        if cfg.tau_mode == "doubling_trick" and alg in ("cbo_mw", "gp_mw") \
                and t > 1 and (t & (t - 1)) == 0:
            state = MwState.uniform(num_actions, fixed_horizon_rate(num_actions, t))
        seed_t = int(seeds[4 * t])
        # strategy visible to the adversary, then simultaneous play
        if alg in ("cbo_mw", "gp_mw"):
            strategy = state.weights
            a_idx = mw_sample(state, seed_t)
        elif alg in ("d_cbo_mw", "d_gp_mw"):
            joint = bank.sample_joint(seed_t)
            a_idx = _flat_index(env, joint)
            strategy = a_idx
        elif alg == "gp_ucb":
            a_idx = gpucb_round(flat, cfg.beta)
            strategy = a_idx
        elif alg == "mcbo":
            a_idx = mcbo_round(models.confidence(t), env.action_tuples,
                               sign_grid=sign_grid)
            strategy = a_idx
        else:  # random
            strategy = np.full(num_actions, 1.0 / num_actions)
            a_idx = int(rng_adv.integers(num_actions))
        d_idx = fnet.adversary_act(env.policy, env, strategy, rng_adv)

        rec = simulate_round(env.scm, env.profile(a_idx, d_idx), rng_seed=int(seeds[4 * t + 1]))
        if models is not None:
            models.observe(rec)
        if flat is not None and alg != "gp_ucb":
            flat = flat.observe(env.agent_value_matrix[a_idx],
                                env.adversary_value_matrix[d_idx], rec.reward)
        elif flat is not None:
            flat = flat.observe(env.agent_value_matrix[a_idx], (), rec.reward)

        adv_tuple = tuple(int(v) for v in env.adversary_tuples[d_idx])
        if alg == "cbo_mw":
            state, _ = cbo_mw_round(state, models.confidence(t), adv_tuple,
                                    env.action_tuples, noise_samples=noise_samples,
                                    noise_specs=noise_specs,
                                    rng_seed=seed_t, sign_grid=sign_grid)
        elif alg == "gp_mw":
            state = gpmw_round(state, flat, env.adversary_value_matrix[d_idx], cfg.beta)
        elif alg == "d_cbo_mw":
            cm = models.confidence(t)
            if scorer is None:
                scorer = CounterfactualScorer(cm, noise_samples=noise_samples,
                                              noise_specs=noise_specs,
                                              sign_grid=sign_grid)
            else:
                scorer.confidence = cm
            _, bank = dcbo_round(bank, cm, adv_tuple, seed_t,
                                 realized_joint=joint, scorer=scorer)
        elif alg == "d_gp_mw":
            bank = _network_dgpmw_update(bank, env, flat, joint, d_idx, cfg.beta)

        rows[t - 1] = (a_idx, d_idx, rec.reward, table[a_idx, d_idx])

    regret = _prefix_regret(table, rows[:, 0].astype(int), rows[:, 1].astype(int))
    return RunLog(env=env.name, algorithm=alg, seed=seed,
                  agent_actions=rows[:, 0].astype(int),
                  adversary_actions=rows[:, 1].astype(int),
                  rewards=rows[:, 2], expected_rewards=rows[:, 3], regret=regret)


def _network_dgpmw_update(bank: AgentBank, env, flat: FlatGpModel,
                          joint: tuple[int, ...], adversary_index: int,
                          beta: float) -> AgentBank:
    """Per-node closed-form optimistic feedback from the flat model."""
    from .mw import clip01, mw_update

    adv_vals = env.adversary_value_matrix[adversary_index]
    new_states = {}
    for node in bank.nodes:
        k = env.graph.agent_action_sizes[node]
        cols = []
        for other in env.agent_nodes:
            vals = env.encode(other, env.nodes[other].agent_map.values())
            if other == node:
                cols.append(vals[np.arange(k)])
            else:
                cols.append(np.full(k, vals[joint[other]]))
        queries = np.column_stack(cols + [np.tile(adv_vals, (k, 1))])
        mu, std = flat.gp.mean_std(queries)
        new_states[node] = mw_update(bank.states[node], clip01(mu + beta * std))
    return AgentBank(nodes=bank.nodes, states=new_states, node_count=bank.node_count)


def _prefix_regret(table: np.ndarray, agent_idx: np.ndarray,
                   adversary_idx: np.ndarray) -> np.ndarray:
    """R(t) against the prefix-optimal fixed action, for all prefixes."""
    cum = np.cumsum(table[:, adversary_idx], axis=1)  # (|A|, T)
    best = cum.max(axis=0)
    mine = np.cumsum(table[agent_idx, adversary_idx])
    return best - mine


def hindsight_regret(log: RunLog, env, max_enumerable: int = 100_000,
                     sampled_actions: int = 0,
                     rng_seed: int = 0) -> np.ndarray:
    """Recompute the regret curve of a logged run by exact enumeration.

    Raises ActionSpaceTooLarge beyond ``max_enumerable`` joint actions unless
    ``sampled_actions`` grants a sampled-max fallback (flagged by returning
    a curve built from the sampled subset only).
    """
    if hasattr(env, "reward_table"):
        if env.num_actions > max_enumerable:
            if not sampled_actions:
                raise ActionSpaceTooLarge(f"{env.num_actions} joint actions")
            rng = np.random.default_rng(rng_seed)
            subset = rng.choice(env.num_actions, size=sampled_actions, replace=False)
            table = env.reward_table()[subset]
            cum = np.cumsum(table[:, log.adversary_actions], axis=1)
            return cum.max(axis=0) - np.cumsum(log.expected_rewards)
        return _prefix_regret(env.reward_table(), log.agent_actions,
                              log.adversary_actions)
    raise ActionSpaceTooLarge("environment has no enumerable expected-reward table")


# ---------------------------------------------------------------------------
# SMS loop
# ---------------------------------------------------------------------------

RAND_WARMUP_DAYS = 10


def _run_sms_seed(cfg: ExperimentConfig, seed: int) -> RunLog:
    env_cfg = dict(cfg.env)
    if env_cfg.get("name") == "sms_synthetic":
        env_cfg["demand_seed"] = env_cfg.get("demand_seed", 1234) + seed
    env = make_environment(env_cfg)
    alg = cfg.algorithm
    if alg not in ("d_cbo_mw", "d_gp_mw", "random"):
        raise ValueError(f"{alg} is not runnable on the combinatorial SMS action space")
    config = env.config
    horizon = min(cfg.horizon, env.num_days)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5A5)))
    seeds = np.random.SeedSequence((seed, 0xD0)).generate_state(horizon + 1,
                                                                dtype=np.uint64)

    gps = env.empty_posteriors(lengthscale=cfg.lengthscale,
                               noise_scale=cfg.model_noise) \
        if alg == "d_cbo_mw" else None
    flat_gp = None
    if alg == "d_gp_mw":
        d_in = config.num_depots + 3
        flat_gp = GpPosterior(
            kernel=Kernel(lengthscales=(cfg.lengthscale,) * d_in),
            noise_scale=cfg.model_noise)
    tau = fixed_horizon_rate(config.num_depots, max(horizon - RAND_WARMUP_DAYS, 1))
    bank = AgentBank.uniform(env.graph, tau) if alg != "random" else None
    scorer = None

    caps = env.region_caps
    total_cap = caps.sum()
    rewards = np.zeros(horizon)
    agent_codes = np.zeros(horizon, dtype=np.int64)
    for t in range(horizon):
        day = env.days[t]
        if alg == "random" or t < RAND_WARMUP_DAYS:
            allocation = rng.integers(0, config.num_depots, config.trucks)
        else:
            joint = bank.sample_joint(int(seeds[t]))
            allocation = np.array([joint[n] for n in env.truck_nodes])
        counts, total = sms_mod.step_day(config, allocation, day)
        rewards[t] = total
        agent_codes[t] = int(np.ravel_multi_index(
            allocation, (config.num_depots,) * config.trucks))

        fracs = sms_mod.allocation_fracs(config, allocation)
        if alg == "d_cbo_mw":
            for r, node in enumerate(env.region_nodes):
                x = env.region_input(r, fracs, day.covariates)
                gps[node] = gps[node].update(x, counts[r] / caps[r])
        elif alg == "d_gp_mw":
            x = np.concatenate([fracs, day.covariates])
            flat_gp = flat_gp.update(x, total / total_cap)

        if alg != "random" and t >= RAND_WARMUP_DAYS:
            adv = env.day_adversary(t)
            joint_full = env.allocation_joint(allocation)
            if alg == "d_cbo_mw":
                cm = sms_mod.sms_confidence(env, gps, cfg.beta)
                if scorer is None:
                    scorer = CounterfactualScorer(cm)
                else:
                    scorer.confidence = cm
                _, bank = dcbo_round(bank, cm, adv, int(seeds[t]),
                                     realized_joint=joint_full, scorer=scorer)
            else:
                bank = _dgpmw_update(bank, env, flat_gp, fracs, day.covariates,
                                     allocation, cfg.beta)

    regret = np.full(horizon, np.nan)
    return RunLog(env=env_cfg.get("name", "sms"), algorithm=alg, seed=seed,
                  agent_actions=agent_codes,
                  adversary_actions=np.arange(horizon),
                  rewards=rewards, expected_rewards=rewards.copy(), regret=regret)


def _dgpmw_update(bank: AgentBank, env, flat_gp: GpPosterior, fracs: np.ndarray,
                  covariates: np.ndarray, allocation: np.ndarray,
                  beta: float) -> AgentBank:
    """Per-truck closed-form optimistic scores from the flat model."""
    from .mw import clip01, mw_update

    config = env.config
    share = config.bikes_per_truck / config.total_bikes
    new_states = {}
    for t, node in enumerate(env.truck_nodes):
        base = fracs.copy()
        base[allocation[t]] -= share
        queries = np.tile(np.concatenate([base, covariates]),
                          (config.num_depots, 1))
        queries[np.arange(config.num_depots), np.arange(config.num_depots)] += share
        mu, std = flat_gp.mean_std(queries)
        new_states[node] = mw_update(bank.states[node], clip01(mu + beta * std))
    return AgentBank(nodes=bank.nodes, states=new_states, node_count=bank.node_count)


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def _run_seed(cfg_dict: dict, seed: int) -> RunLog:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    if cfg.env.get("name") in fnet.ENV_NAMES:
        return _run_network_seed(cfg, seed)
    return _run_sms_seed(cfg, seed)


def run_experiment(config: ExperimentConfig) -> list[RunLog]:
    """Execute every configured seed; deterministic per (config, seed)."""
    workers = int(os.environ.get("ACBO_THREADS", "1"))
    cfg_dict = config.to_dict()
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_seed, itertools.repeat(cfg_dict),
                                 config.seeds))
    return [_run_seed(cfg_dict, s) for s in config.seeds]


def emit_csv(logs: list[RunLog], path: str) -> tuple[str, str]:
    """Write one row per (seed, round) plus a mean/stderr summary alongside."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER]
    for log in logs:
        cum = log.cum_rewards
        for t in range(log.horizon):
            lines.append(
                f"{log.env},{log.algorithm},{log.seed},{t + 1},"
                f"{log.agent_actions[t]},{log.adversary_actions[t]},"
                f"{log.rewards[t]:.10g},{log.expected_rewards[t]:.10g},"
                f"{cum[t]:.10g},{log.regret[t]:.10g}"
            )
    path.write_text("\n".join(lines) + "\n")

    summary_path = path.with_name(path.stem + "_summary.csv")
    horizon = min(log.horizon for log in logs)
    reg = np.stack([log.regret[:horizon] for log in logs])
    cum = np.stack([log.cum_rewards[:horizon] for log in logs])
    n = len(logs)

    def stderr(a: np.ndarray) -> np.ndarray:
        if n > 1:
            return a.std(axis=0, ddof=1) / math.sqrt(n)
        return np.zeros(a.shape[1])

    reg_se, cum_se = stderr(reg), stderr(cum)
    out = ["env,algorithm,round,mean_regret,stderr_regret,mean_cum_reward,stderr_cum_reward"]
    for t in range(horizon):
        out.append(
            f"{logs[0].env},{logs[0].algorithm},{t + 1},"
            f"{reg[:, t].mean():.10g},{reg_se[t]:.10g},"
            f"{cum[:, t].mean():.10g},{cum_se[t]:.10g}"
        )
    summary_path.write_text("\n".join(out) + "\n")
    return str(path), str(summary_path)
