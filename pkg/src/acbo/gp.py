"""Exact per-node Gaussian-process posteriors, confidence widths, and the
realized information-gain diagnostic.

Posteriors are immutable snapshots holding a Cholesky factor of the
regularized kernel matrix; updates append one observation with a rank-1
factor extension. Queries are batched and safe to issue concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import accel
from .errors import CholeskyFailure, DimensionMismatch
from .graph import CausalGraph

JITTER_FLOOR = 1e-8
MAX_JITTER_DOUBLINGS = 4

KNOWN_KINDS = ("rbf", "linear", "matern52")


@dataclass(frozen=True)
class Kernel:
    """Stationary (or dimension-averaged linear) kernel with k(s, s) <= 1."""

    kind: str = "rbf"
    lengthscales: tuple[float, ...] = (0.2,)
    variance_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KNOWN_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not 0.0 < self.variance_scale <= 1.0:
            raise ValueError("variance_scale must be in (0, 1]")
        if any(ls <= 0 for ls in self.lengthscales):
            raise ValueError("lengthscales must be positive")

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    def _prep(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise DimensionMismatch(
                f"kernel expects {self.dim}-dim inputs, got {x.shape[1]}"
            )
        return x

    def cross(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        x, z = self._prep(x), self._prep(z)
        inv_ls = 1.0 / np.asarray(self.lengthscales)
        if self.kind == "rbf":
            return accel.rbf_cross(x, z, inv_ls, self.variance_scale)
        if self.kind == "matern52":
            return accel.matern52_cross(x, z, inv_ls, self.variance_scale)
        return accel.linear_cross(x, z, inv_ls, self.variance_scale)

    def diag(self, x: np.ndarray) -> np.ndarray:
        x = self._prep(x)
        if self.kind == "linear":
            inv_ls = 1.0 / np.asarray(self.lengthscales)
            xs = x * inv_ls
            return (self.variance_scale / max(self.dim, 1)) * np.sum(xs * xs, axis=1)
        return np.full(x.shape[0], self.variance_scale)


def default_kernel(dim: int, lengthscale: float = 0.2) -> Kernel:
    """RBF with unit variance and one shared lengthscale per input dimension."""
    return Kernel(kind="rbf", lengthscales=(lengthscale,) * dim)


def _factor(kernel: Kernel, inputs: np.ndarray, noise_var: float) -> tuple[np.ndarray, float]:
    """Cholesky of K + (noise_var + jitter) I, doubling jitter on failure."""
    kmat = kernel.cross(inputs, inputs)
    jitter = JITTER_FLOOR
    for _ in range(MAX_JITTER_DOUBLINGS + 1):
        try:
            low = cholesky(kmat + (noise_var + jitter) * np.eye(len(inputs)),
                           lower=True, check_finite=False)
            return low, jitter
        except np.linalg.LinAlgError:
            jitter *= 2.0
    raise CholeskyFailure(f"factorization failed at jitter {jitter / 2.0:g}")


@dataclass(frozen=True)
class GpPosterior:
    """Exact GP posterior for one node; prior mean is zero."""

    kernel: Kernel
    noise_scale: float
    inputs: np.ndarray = field(default=None)  # (n, d)
    targets: np.ndarray = field(default=None)  # (n,)
    _chol: np.ndarray = field(default=None, repr=False)
    _alpha: np.ndarray = field(default=None, repr=False)
    _jitter: float = JITTER_FLOOR

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.inputs is None:
            object.__setattr__(self, "inputs", np.zeros((0, self.kernel.dim)))
            object.__setattr__(self, "targets", np.zeros(0))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def update(self, x: np.ndarray, y: float) -> "GpPosterior":
        """Return a new posterior that includes (x, y)."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.kernel.dim:
            raise DimensionMismatch(
                f"input has {x.shape[0]} dims, kernel expects {self.kernel.dim}"
            )
        inputs = np.vstack([self.inputs, x[None, :]])
        targets = np.append(self.targets, float(y))
        noise_var = self.noise_scale**2
        if self.n == 0:
            low, jitter = _factor(self.kernel, inputs, noise_var)
        else:
            # Rank-1 extension of the existing factor; full refactor with more
            # jitter if the new pivot collapses (near-duplicate inputs).
            k_vec = self.kernel.cross(self.inputs, x[None, :])[:, 0]
            k_ss = float(self.kernel.diag(x[None, :])[0])
            b = solve_triangular(self._chol, k_vec, lower=True, check_finite=False)
            c2 = k_ss + noise_var + self._jitter - float(b @ b)
            if c2 > 0.25 * self._jitter:
                low = np.zeros((self.n + 1, self.n + 1))
                low[: self.n, : self.n] = self._chol
                low[self.n, : self.n] = b
                low[self.n, self.n] = math.sqrt(c2)
                jitter = self._jitter
            else:
                low, jitter = _factor(self.kernel, inputs, noise_var)
        alpha = solve_triangular(
            low.T,
            solve_triangular(low, targets, lower=True, check_finite=False),
            lower=False,
            check_finite=False,
        )
        return replace(self, inputs=inputs, targets=targets,
                       _chol=low, _alpha=alpha, _jitter=jitter)

    def mean_var(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at a (B, d) batch of query points."""
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        kdiag = self.kernel.diag(queries)
        if self.n == 0:
            return np.zeros(queries.shape[0]), kdiag
        k_star = self.kernel.cross(self.inputs, queries)  # (n, B)
        mu = k_star.T @ self._alpha
        v = solve_triangular(self._chol, k_star, lower=True, check_finite=False)
        var = kdiag - np.einsum("ij,ij->j", v, v)
        return mu, np.clip(var, 0.0, kdiag)

    def mean_std(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mu, var = self.mean_var(queries)
        return mu, np.sqrt(var)

    def mean_only(self, queries: np.ndarray) -> np.ndarray:
        """Posterior mean alone; skips the triangular solve behind the variance."""
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if self.n == 0:
            return np.zeros(queries.shape[0])
        return self.kernel.cross(self.inputs, queries).T @ self._alpha


def posterior_update(gp: GpPosterior, input: np.ndarray, target: float) -> GpPosterior:
    return gp.update(input, target)


def information_gain(gp_inputs: np.ndarray, kernel: Kernel, noise_scale: float) -> float:
    """Realized gain 0.5 * logdet(I + K / noise^2) of the given input set.

    A diagnostic on the observed inputs, not the maximum over input sets.
    """
    gp_inputs = np.atleast_2d(np.asarray(gp_inputs, dtype=np.float64))
    if gp_inputs.shape[0] == 0:
        raise ValueError("information_gain needs at least one input")
    lam2 = max(noise_scale, 1e-6) ** 2
    kmat = kernel.cross(gp_inputs, gp_inputs)
    mat = np.eye(len(gp_inputs)) + kmat / lam2
    jitter = 0.0
    for _ in range(MAX_JITTER_DOUBLINGS + 1):
        try:
            low = cholesky(mat + jitter * np.eye(len(gp_inputs)),
                           lower=True, check_finite=False)
            return max(0.0, float(np.sum(np.log(np.diag(low)))))
        except np.linalg.LinAlgError:
            jitter = JITTER_FLOOR if jitter == 0.0 else jitter * 2.0
    raise CholeskyFailure("information gain factorization failed")


@dataclass(frozen=True)
class BetaSchedule:
    """Confidence-width schedule: a fixed constant, or the node-confidence
    form B + lambda * sqrt(2 * (gamma + log(m / delta)))."""

    kind: str = "constant"  # constant | lemma1
    constant_value: float = 2.0
    rkhs_bound: float = 1.0
    delta: float = 0.1
    node_count: int = 1
    noise_scale: float = 0.25

    def __post_init__(self):
        if self.kind not in ("constant", "lemma1"):
            raise ValueError(f"unknown beta schedule {self.kind!r}")
        if self.kind == "constant" and self.constant_value <= 0:
            raise ValueError("constant beta must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")


def beta_at(schedule: BetaSchedule, t: int, gamma_estimate: float = 0.0) -> float:
    if t < 1:
        raise ValueError("t must be >= 1")
    if gamma_estimate < 0:
        raise ValueError("gamma_estimate must be >= 0")
    if schedule.kind == "constant":
        return schedule.constant_value
    inside = 2.0 * (gamma_estimate + math.log(schedule.node_count / schedule.delta))
    return schedule.rkhs_bound + schedule.noise_scale * math.sqrt(inside)


# (parent_values, agent_index, adversary_index) -> value; parent_values has
# shape (p,) or (p, B) and the callable broadcasts over B.
KnownEval = Callable[[np.ndarray, int, int], float]


@dataclass(frozen=True)
class ConfidenceModel:
    """Per-node plausible-mechanism tubes at one point in time.

    Nodes with unknown mechanisms carry a (posterior, shared beta) pair; the
    rest carry exact evaluators (action roots, fixed aggregators). An unknown
    node whose own action space is nontrivial lists an embedding table
    mapping each discrete index to the continuous values its kernel sees, so
    its GP input is (parent values, agent embedding, adversary embedding).
    When ``eta_plus_one`` is set the counterfactual oracle skips the inner
    maximization and pins every tube at its upper edge, optionally clipping
    each node at ``caps`` (monotone known-aggregator graphs).
    """

    graph: CausalGraph
    gps: dict[int, GpPosterior]
    beta: float
    known: dict[int, KnownEval]
    eta_plus_one: bool = False
    caps: dict[int, float] = field(default_factory=dict)
    agent_embed: dict[int, np.ndarray] = field(default_factory=dict)  # (K_i, e)
    adversary_embed: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = self.graph.node_count
        covered = set(self.gps) | set(self.known)
        if covered != set(range(n)) or (set(self.gps) & set(self.known)):
            raise ValueError("each node needs exactly one of {gp, known evaluator}")

    @property
    def unknown_nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.gps))

    def input_dim(self, node: int) -> int:
        d = len(self.graph.parents[node])
        if node in self.agent_embed:
            d += self.agent_embed[node].shape[1]
        if node in self.adversary_embed:
            d += self.adversary_embed[node].shape[1]
        return d

    def node_input(self, node: int, parent_values: np.ndarray,
                   agent_idx: np.ndarray, adversary_idx: np.ndarray) -> np.ndarray:
        """Assemble the (rows, d) kernel input for one unknown node."""
        cols = [parent_values.T] if parent_values.shape[0] else []
        if node in self.agent_embed:
            cols.append(self.agent_embed[node][agent_idx])
        if node in self.adversary_embed:
            cols.append(self.adversary_embed[node][adversary_idx])
        if not cols:
            return np.zeros((agent_idx.shape[0], 0))
        return np.ascontiguousarray(np.hstack(cols))

    def with_beta(self, beta: float) -> "ConfidenceModel":
        return replace(self, beta=beta)
