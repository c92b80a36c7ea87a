"""Sequential budget-allocation decision process over a quarterly series.

Each step the agent sees the scaled indicators of quarter t, commits a
two-way split of the budget between R&D and SG&A, and is scored against
the split the data actually realized in quarter t+1. The reward is a
sum of three penalties, so it is never positive:

  accuracy    -||a_t - empirical_t||_1
  smoothness  -lambda1 * ||a_t - a_{t-1}||_2       (a_{-1} is uniform)
  belief      -lambda2 * KL(Dir(alpha_t) || Dir(alpha_prior))

The belief vector is updated first (alpha += confidence * empirical),
then the divergence against the fixed prior is charged. Episodes run
for exactly len(series) - 1 steps. An instance is single-threaded;
independent instances over the same series may run in parallel.

State vectors are float64 arrays laid out [rnd, sga, net_income] in
scaled units; actions and empirical allocations are length-2 simplex
arrays [rnd_share, sga_share].
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .data_ingest import FinancialSeries, ScalerParams
from .errors import ContractError, DataError, DomainError, SequenceError, ShapeError
from .special_functions import dirichlet_kl

__all__ = [
    "RewardConfig",
    "BeliefConfig",
    "RewardBreakdown",
    "StepResult",
    "BudgetEnv",
    "empirical_allocation",
    "update_belief",
    "validate_action",
    "clip_to_simplex",
    "write_trace",
]

UNIFORM_ACTION = np.array([0.5, 0.5])
ACTION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RewardConfig:
    lambda1: float = 0.1
    lambda2: float = 0.01

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise DomainError("penalty weights must be non-negative")


@dataclass(frozen=True)
class BeliefConfig:
    prior: tuple[float, ...] = (5.0, 3.0)
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "prior", tuple(float(p) for p in self.prior))
        if len(self.prior) < 2 or any(p <= 0 for p in self.prior):
            raise DomainError("prior concentrations must be positive, length >= 2")
        if self.confidence < 0:
            raise DomainError("confidence must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    accuracy_term: float
    smoothness_term: float
    belief_term: float
    total: float


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: RewardBreakdown
    done: bool
    info: dict[str, Any]


def empirical_allocation(series: FinancialSeries, t: int) -> np.ndarray:
    """Realized [rnd, sga] spending shares of quarter t+1, from raw values."""
    if t < 0 or t + 1 >= len(series):
        raise ContractError(f"quarter index {t} has no successor in a series of {len(series)}")
    rec = series[t + 1]
    total = rec.rnd + rec.sga
    if total <= 0:
        raise DataError(f"quarter {rec.period}: rnd + sga is not positive")
    return np.array([rec.rnd / total, rec.sga / total])


def update_belief(alpha: np.ndarray, empirical: np.ndarray, confidence: float) -> np.ndarray:
    """Conjugate evidence accumulation: alpha + confidence * empirical."""
    alpha = np.asarray(alpha, dtype=np.float64)
    empirical = np.asarray(empirical, dtype=np.float64)
    if alpha.shape != empirical.shape:
        raise ShapeError(f"belief shape {alpha.shape} vs evidence shape {empirical.shape}")
    return alpha + confidence * empirical


def validate_action(action: np.ndarray, tolerance: float = ACTION_TOLERANCE) -> np.ndarray:
    """Accept a near-simplex action, renormalizing float drift only.

    Components below -tolerance or a sum further than tolerance from 1
    indicate a logic bug in the caller and raise ContractError.
    """
    a = np.asarray(action, dtype=np.float64)
    if a.shape != (2,):
        raise ContractError(f"action must have shape (2,), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError("action contains non-finite components")
    if np.any(a < -tolerance) or abs(a.sum() - 1.0) > tolerance:
        raise ContractError(f"action {a.tolist()} is off the simplex beyond {tolerance}")
    a = np.clip(a, 0.0, None)
    return a / a.sum()


def clip_to_simplex(vec: np.ndarray) -> np.ndarray:
    """Project an arbitrary 2-vector to the simplex: clamp to [0,1], renormalize."""
    v = np.clip(np.asarray(vec, dtype=np.float64), 0.0, 1.0)
    total = v.sum()
    if total <= 0.0:
        return UNIFORM_ACTION.copy()
    return v / total


class BudgetEnv:
    """Deterministic allocation environment over one immutable series."""

    def __init__(
        self,
        series: FinancialSeries,
        scaler: ScalerParams,
        reward: RewardConfig | None = None,
        belief: BeliefConfig | None = None,
        trace: bool = False,
    ):
        if len(series) < 2:
            raise DataError(f"need at least 2 quarters, got {len(series)}")
        self.series = series
        self.scaler = scaler
        self.reward_config = reward if reward is not None else RewardConfig()
        self.belief_config = belief if belief is not None else BeliefConfig()
        if len(self.belief_config.prior) != 2:
            raise DomainError(
                "this environment models exactly two budget categories; "
                f"prior has {len(self.belief_config.prior)}"
            )
        self._states = np.array(
            [
                [
                    scaler.scale_value("rnd", rec.rnd),
                    scaler.scale_value("sga", rec.sga),
                    scaler.scale_value("net_income", rec.net_income),
                ]
                for rec in series
            ]
        )
        self._prior = np.array(self.belief_config.prior)
        self._trace_enabled = trace
        self.trace_records: list[dict[str, Any]] = []
        self._t: int | None = None
        self._alpha = self._prior.copy()
        self._prev_action = UNIFORM_ACTION.copy()

    @property
    def n_steps(self) -> int:
        """Steps per episode: one per quarter transition."""
        return len(self.series) - 1

    @property
    def t(self) -> int | None:
        return self._t

    @property
    def done(self) -> bool:
        return self._t is not None and self._t >= self.n_steps

    @property
    def alpha(self) -> np.ndarray:
        return self._alpha.copy()

    def reset(self) -> np.ndarray:
        self._t = 0
        self._alpha = self._prior.copy()
        self._prev_action = UNIFORM_ACTION.copy()
        if self._trace_enabled:
            self.trace_records = []
        return self._states[0].copy()

    def step(self, action: np.ndarray) -> StepResult:
        if self._t is None:
            raise SequenceError("step() before reset()")
        if self.done:
            raise SequenceError("step() after the episode finished")
        a = validate_action(action)
        t = self._t
        empirical = empirical_allocation(self.series, t)

        accuracy = -float(np.abs(a - empirical).sum())
        smoothness = -self.reward_config.lambda1 * float(
            np.linalg.norm(a - self._prev_action)
        )
        self._alpha = update_belief(self._alpha, empirical, self.belief_config.confidence)
        belief = -self.reward_config.lambda2 * dirichlet_kl(self._alpha, self._prior)
        total = accuracy + smoothness + belief
        reward = RewardBreakdown(accuracy, smoothness, belief, total)

        self._prev_action = a
        self._t = t + 1
        next_state = self._states[self._t].copy()

        nxt = self.series[t + 1]
        expenses = nxt.rnd + nxt.sga
        info = {
            "t": t,
            "action": a.copy(),
            "empirical": empirical,
            "alpha": self._alpha.copy(),
            "profit_signal": (nxt.net_income - expenses) / expenses,
        }
        if self._trace_enabled:
            self.trace_records.append(
                {
                    "t": t,
                    "action": a.tolist(),
                    "empirical": empirical.tolist(),
                    "reward_terms": {
                        "accuracy": accuracy,
                        "smoothness": smoothness,
                        "belief": belief,
                        "total": total,
                    },
                    "alpha": self._alpha.tolist(),
                }
            )
        return StepResult(next_state, reward, self.done, info)


def write_trace(records: list[dict[str, Any]], path: str | Path) -> None:
    """Dump per-step trace records as JSON lines (overlay-plot input)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
