"""Shared-mobility rebalancing: trucks stock depots overnight, demand arrives
as trips, reward is fulfilled trips.

A trip is served when some stocked depot lies within the service radius of
its start; the bike then teleports to the depot nearest the trip end. The
learning-side graph sums per-region trip counts, each an unknown function of
that region's depot stock plus the day's weather/demand covariates, so the
counterfactual oracle can pin every tube at its upper edge (more trips in a
region never hurt the total).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import accel
from ..errors import InvalidDepot, MalformedRow, MissingCovariate
from ..gp import ConfidenceModel, GpPosterior, Kernel
from ..graph import CausalGraph, validate_graph


@dataclass
class SmsConfig:
    """Depot layout, region partition, and fleet settings."""

    depot_xy: np.ndarray  # (D, 2)
    regions: tuple[tuple[int, ...], ...]
    trucks: int = 5
    bikes_per_truck: int = 8
    service_radius: float = 0.8
    horizon_days: int = 200

    def __post_init__(self):
        self.depot_xy = np.asarray(self.depot_xy, dtype=np.float64).reshape(-1, 2)
        flat = [d for reg in self.regions for d in reg]
        if sorted(flat) != list(range(self.num_depots)):
            raise ValueError("regions must partition the depot ids exactly")

    @classmethod
    def from_depot_list(cls, depots: Sequence[tuple], regions, **kw) -> "SmsConfig":
        ids = [int(d[0]) for d in depots]
        if sorted(ids) != list(range(len(depots))):
            raise ValueError("depot ids must be 0..D-1")
        xy = np.zeros((len(depots), 2))
        for did, x, y in depots:
            xy[int(did)] = (x, y)
        return cls(depot_xy=xy, regions=tuple(tuple(r) for r in regions), **kw)

    @property
    def num_depots(self) -> int:
        return self.depot_xy.shape[0]

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @property
    def total_bikes(self) -> int:
        return self.trucks * self.bikes_per_truck

    def region_of(self) -> np.ndarray:
        out = np.empty(self.num_depots, dtype=np.int64)
        for r, reg in enumerate(self.regions):
            for d in reg:
                out[d] = r
        return out


@dataclass
class DemandDay:
    """One day of trip demand plus its observed covariates."""

    day: int
    trips: np.ndarray  # (T, 5): start_x, start_y, end_x, end_y, timestamp
    covariates: np.ndarray  # (temperature, rainfall, total_demand), each in [0, 1]

    def __post_init__(self):
        self.trips = np.asarray(self.trips, dtype=np.float64).reshape(-1, 5)
        self.covariates = np.asarray(self.covariates, dtype=np.float64).reshape(3)


def step_day(config: SmsConfig, allocation: Sequence[int],
             demand: DemandDay) -> tuple[np.ndarray, int]:
    """Simulate one day; returns (per-region fulfilled counts, total).

    Bikes stack: every truck drops its full load at one depot. Trips are
    processed in timestamp order (ties keep input order); each fulfilled trip
    is credited to the region of the serving depot.
    """
    allocation = np.asarray(allocation, dtype=np.int64)
    if allocation.shape != (config.trucks,):
        raise InvalidDepot("one depot id per truck required")
    if np.any(allocation < 0) or np.any(allocation >= config.num_depots):
        raise InvalidDepot("allocation references an unknown depot")
    bikes = np.zeros(config.num_depots, dtype=np.int64)
    np.add.at(bikes, allocation, config.bikes_per_truck)
    order = np.argsort(demand.trips[:, 4], kind="stable")
    trips = demand.trips[order]
    src, _dst = accel.sms_day(
        np.ascontiguousarray(trips[:, 0:2]),
        np.ascontiguousarray(trips[:, 2:4]),
        config.depot_xy,
        bikes,
        config.service_radius,
    )
    counts = np.zeros(config.num_regions, dtype=np.int64)
    region_of = config.region_of()
    served = src[src >= 0]
    np.add.at(counts, region_of[served], 1)
    return counts, int(counts.sum())


def allocation_fracs(config: SmsConfig, allocation: Sequence[int]) -> np.ndarray:
    """Per-depot bike share at day start, normalized by the fleet size."""
    bikes = np.zeros(config.num_depots)
    np.add.at(bikes, np.asarray(allocation, dtype=np.int64), config.bikes_per_truck)
    return bikes / config.total_bikes


# ---------------------------------------------------------------------------
# demand sources
# ---------------------------------------------------------------------------

def load_trip_csv(path: str, covariates_path: str,
                  skip_weekends: bool = True) -> list[DemandDay]:
    """Read day-grouped trips plus a covariate sidecar.

    Trip header: day,start_x,start_y,end_x,end_y,timestamp. Covariate header:
    day,temperature,rainfall. total_demand is the day's trip count; all three
    covariates are min-max normalized over the file. Days with index % 7 in
    {5, 6} are dropped when skip_weekends is set.
    """
    by_day: dict[int, list[list[float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                day = int(row[0])
                vals = [float(v) for v in row[1:6]]
                if len(vals) != 5:
                    raise ValueError
            except (ValueError, IndexError):
                raise MalformedRow(f"{path}: line {lineno}") from None
            by_day.setdefault(day, []).append(vals)
    covs: dict[int, tuple[float, float]] = {}
    with open(covariates_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                covs[int(row[0])] = (float(row[1]), float(row[2]))
            except (ValueError, IndexError):
                raise MalformedRow(f"{covariates_path}: line {lineno}") from None
    days = sorted(by_day)
    if skip_weekends:
        days = [d for d in days if d % 7 not in (5, 6)]
    if not days:
        return []
    missing = [d for d in days if d not in covs]
    if missing:
        raise MissingCovariate(f"no covariate row for day(s) {missing[:5]}")
    raw = np.array([[covs[d][0], covs[d][1], len(by_day[d])] for d in days])
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    norm = (raw - lo) / span
    return [DemandDay(day=d, trips=np.array(by_day[d]), covariates=norm[k])
            for k, d in enumerate(days)]


def synth_layout(seed: int, n_depots: int, n_regions: int,
                 region_spacing: float = 4.0,
                 depot_spread: float = 0.9) -> tuple[np.ndarray, tuple, np.ndarray]:
    """Clustered synthetic city: returns (depot_xy, regions, region centroids)."""
    rng = np.random.default_rng(seed)
    side = math.ceil(math.sqrt(n_regions))
    centroids = np.array([
        [region_spacing * (r % side), region_spacing * (r // side)]
        for r in range(n_regions)
    ], dtype=np.float64)
    centroids += rng.uniform(-0.5, 0.5, centroids.shape)
    assign = np.sort(np.arange(n_depots) % n_regions)
    xy = centroids[assign] + rng.normal(0.0, depot_spread, (n_depots, 2))
    regions = tuple(tuple(int(d) for d in np.flatnonzero(assign == r))
                    for r in range(n_regions))
    return xy, regions, centroids


def synth_demand(seed: int, days: int, config: SmsConfig,
                 intensity: float = 1.0,
                 base_rates: Sequence[float] | None = None,
                 start_spread: float = 0.6) -> list[DemandDay]:
    """Poisson trips per region, rates modulated by a seasonal sine plus noise.

    Warm dry days carry more demand; trip starts cluster near region
    centroids, ends stay in-region 70% of the time. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    n_regions = config.num_regions
    centroids = np.array([config.depot_xy[list(reg)].mean(axis=0)
                          for reg in config.regions])
    if base_rates is None:
        # fixed spatial structure: a few hot regions, a few cold ones
        base_rates = 4.0 + 26.0 * (np.arange(n_regions) % 3 == 0) \
            + 10.0 * (np.arange(n_regions) % 3 == 1)
    base_rates = np.asarray(base_rates, dtype=np.float64)
    temps = np.clip(0.55 + 0.35 * np.sin(2 * np.pi * np.arange(days) / 365.0
                                         + rng.uniform(0, 2 * np.pi))
                    + 0.08 * rng.normal(size=days), 0.0, 1.0)
    rains = np.clip(rng.gamma(1.2, 0.18, size=days) * (rng.random(days) < 0.45),
                    0.0, 1.0)
    out = []
    raw_counts = np.zeros(days)
    trips_by_day = []
    for d in range(days):
        mult = max(0.05, 0.25 + 0.95 * temps[d] - 0.6 * rains[d]) * intensity
        counts = rng.poisson(base_rates * mult)
        rows = []
        for r in range(n_regions):
            if counts[r] == 0:
                continue
            starts = centroids[r] + rng.normal(0.0, start_spread, (counts[r], 2))
            same = rng.random(counts[r]) < 0.7
            dest_regions = np.where(same, r, rng.integers(0, n_regions, counts[r]))
            ends = centroids[dest_regions] + rng.normal(0.0, start_spread,
                                                        (counts[r], 2))
            ts = rng.uniform(0.0, 24.0, counts[r])
            rows.append(np.column_stack([starts, ends, ts]))
        trips = np.vstack(rows) if rows else np.zeros((0, 5))
        trips_by_day.append(trips)
        raw_counts[d] = trips.shape[0]
    lo, hi = raw_counts.min(), raw_counts.max()
    span = hi - lo if hi > lo else 1.0
    for d in range(days):
        covs = np.array([temps[d], rains[d], (raw_counts[d] - lo) / span])
        out.append(DemandDay(day=d, trips=trips_by_day[d], covariates=covs))
    return out


# ---------------------------------------------------------------------------
# the learning-side graph
# ---------------------------------------------------------------------------

@dataclass
class SmsEnv:
    """Simulator plus the region-sum model graph for the learners."""

    config: SmsConfig
    days: list[DemandDay]
    graph: CausalGraph = field(init=False)
    region_caps: np.ndarray = field(init=False)
    # node-id blocks
    truck_nodes: tuple[int, ...] = field(init=False)
    covariate_nodes: tuple[int, ...] = field(init=False)
    depot_nodes: tuple[int, ...] = field(init=False)
    region_nodes: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        cfg = self.config
        t, d_count, r_count = cfg.trucks, cfg.num_depots, cfg.num_regions
        self.truck_nodes = tuple(range(t))
        self.covariate_nodes = tuple(range(t, t + 3))
        self.depot_nodes = tuple(range(t + 3, t + 3 + d_count))
        self.region_nodes = tuple(range(t + 3 + d_count, t + 3 + d_count + r_count))
        reward = t + 3 + d_count + r_count
        parents: list[tuple[int, ...]] = [()] * (t + 3)
        parents += [tuple(self.truck_nodes)] * d_count
        for reg in cfg.regions:
            pa = tuple(sorted(self.covariate_nodes
                              + tuple(self.depot_nodes[j] for j in reg)))
            parents.append(pa)
        parents.append(tuple(self.region_nodes))
        n_days = max(len(self.days), 1)
        agent_sizes = [d_count] * t + [1] * (3 + d_count + r_count + 1)
        adv_sizes = [1] * t + [n_days] * 3 + [1] * (d_count + r_count + 1)
        self.graph = CausalGraph(
            parents=tuple(parents),
            agent_action_sizes=tuple(agent_sizes),
            adversary_action_sizes=tuple(adv_sizes),
            topo_order=tuple(range(reward + 1)),
        )
        validate_graph(self.graph)
        self.region_caps = self._demand_caps()

    def _demand_caps(self) -> np.ndarray:
        """Max daily demand near each region; the frozen normalization scale."""
        region_of = self.config.region_of()
        caps = np.ones(self.config.num_regions)
        for day in self.days:
            if day.trips.shape[0] == 0:
                continue
            d2 = (
                (day.trips[:, 0:1] - self.config.depot_xy[None, :, 0]) ** 2
                + (day.trips[:, 1:2] - self.config.depot_xy[None, :, 1]) ** 2
            )
            nearest = np.argmin(d2, axis=1)
            counts = np.bincount(region_of[nearest], minlength=self.config.num_regions)
            caps = np.maximum(caps, counts)
        return caps

    @property
    def num_days(self) -> int:
        return len(self.days)

    def known_evaluators(self) -> dict[int, object]:
        cfg = self.config
        d_count = cfg.num_depots
        out: dict[int, object] = {}
        denom = max(d_count - 1, 1)
        for node in self.truck_nodes:
            out[node] = (lambda z, a, d: np.asarray(a, dtype=np.float64) / denom)
        covs = np.array([day.covariates for day in self.days]) if self.days \
            else np.zeros((1, 3))
        for k, node in enumerate(self.covariate_nodes):
            out[node] = (lambda z, a, d, col=covs[:, k]: col[np.asarray(d)])
        share = cfg.bikes_per_truck / cfg.total_bikes
        for j, node in enumerate(self.depot_nodes):
            def depot_eval(z, a, d, j=j, share=share, denom=denom):
                ids = np.rint(np.asarray(z) * denom)
                return share * np.sum(ids == j, axis=0)
            out[node] = depot_eval
        reward = self.graph.reward_node
        # normalized total trips: region values are trips/cap, so the exact
        # sum re-weights by each region's share of the total cap
        w = (self.region_caps / self.region_caps.sum())[:, None]
        out[reward] = (lambda z, a, d, w=w: np.sum(np.asarray(z) * w, axis=0))
        return out

    def empty_posteriors(self, lengthscale: float = 0.35,
                         noise_scale: float = 0.05) -> dict[int, GpPosterior]:
        out = {}
        for r, node in enumerate(self.region_nodes):
            dim = len(self.graph.parents[node])
            out[node] = GpPosterior(kernel=Kernel(lengthscales=(lengthscale,) * dim),
                                    noise_scale=noise_scale)
        return out

    def region_input(self, r: int, alloc_fracs: np.ndarray,
                     covariates: np.ndarray) -> np.ndarray:
        """Kernel input for region r in the graph's sorted-parent order."""
        node = self.region_nodes[r]
        vals = []
        for p in self.graph.parents[node]:
            if p in self.covariate_nodes:
                vals.append(covariates[p - self.covariate_nodes[0]])
            else:
                vals.append(alloc_fracs[p - self.depot_nodes[0]])
        return np.array(vals)

    def day_adversary(self, day_index: int) -> tuple[int, ...]:
        adv = [0] * self.graph.node_count
        for node in self.covariate_nodes:
            adv[node] = day_index
        return tuple(adv)

    def allocation_joint(self, allocation: Sequence[int]) -> tuple[int, ...]:
        joint = [0] * self.graph.node_count
        for t, node in enumerate(self.truck_nodes):
            joint[node] = int(allocation[t])
        return tuple(joint)


def sms_confidence(env: SmsEnv, posteriors: dict[int, GpPosterior],
                   beta: float) -> ConfidenceModel:
    """Region-sum confidence model flagged for the upper-edge shortcut:
    scores are (1/R) * sum_r min(1, mu_r + beta * sigma_r), no ascent."""
    caps = {node: 1.0 for node in env.region_nodes}
    return ConfidenceModel(graph=env.graph, gps=dict(posteriors), beta=beta,
                           known=env.known_evaluators(), eta_plus_one=True,
                           caps=caps)
