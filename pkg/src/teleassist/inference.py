"""Recursive Bayesian goal inference from translational input.

The operator is modeled as a noisily-rational minimizer of a goal-specific
cost: actions that make more progress toward a goal are exponentially more
likely under that goal. Each tick multiplies the posterior by the per-goal
step likelihood and renormalizes, all in log space.

Cost model (distance d to the goal, meters):

    C(d) = (c0/delta) * d      for d <= delta, else c0
    V(d) = C(d) * (k*d + b)

so the cost-to-go V is quadratic near the goal and affine far from it. The
step log-likelihood for goal g is ``eta * (V(d) - C(d) - V(d'))`` where d'
is the distance after applying the user's translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .geometry import ValidationError

# Per-goal probability floor applied before the final renormalization of each
# update. Keeps the posterior recoverable when the user changes their mind and
# guarantees no -inf/NaN entries.
PROB_FLOOR = 1e-6
# Posterior normalization guarantee.
NORMALIZATION_TOL = 1e-9

GRASPING = "grasping"
INTERACTION = "interaction"
_STAGE_TAGS = (GRASPING, INTERACTION)


@dataclass(frozen=True)
class CostParams:
    """Parameters of the rationality model. The defaults suit a tabletop
    scale of decimeter distances and centimeter steps."""

    c0: float = 1.0
    delta: float = 0.15
    k: float = 2.0
    b: float = 0.5
    eta: float = 20.0

    def __post_init__(self):
        if self.c0 <= 0 or self.delta <= 0 or self.k <= 0 or self.eta <= 0:
            raise ValidationError("c0, delta, k and eta must be positive")
        if self.k * self.delta + self.b <= 0:
            raise ValidationError("k*delta + b must be positive")


@dataclass(frozen=True)
class InputSample:
    """One observation: EEF position and the user's translational command."""

    eef_position: np.ndarray
    u_h: np.ndarray
    tick: int = 0

    def __post_init__(self):
        pos = np.asarray(self.eef_position, dtype=float)
        u = np.asarray(self.u_h, dtype=float)
        if pos.shape != (3,) or u.shape != (3,):
            raise ValidationError("eef_position and u_h must be 3-vectors")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(u))):
            raise ValidationError("input sample has non-finite components")
        object.__setattr__(self, "eef_position", pos)
        object.__setattr__(self, "u_h", u)


@dataclass(frozen=True)
class GoalBelief:
    """Log-space posterior over the active candidate goal set."""

    log_probs: dict[int, float]
    stage_tag: str = GRASPING

    def __post_init__(self):
        if not self.log_probs:
            raise ValidationError("belief must cover at least one goal")
        if self.stage_tag not in _STAGE_TAGS:
            raise ValidationError(f"unknown stage tag {self.stage_tag!r}")

    @property
    def goal_ids(self) -> list[int]:
        return sorted(self.log_probs)

    def probabilities(self) -> dict[int, float]:
        return {g: math.exp(lp) for g, lp in sorted(self.log_probs.items())}


def running_cost(d: float, params: CostParams) -> float:
    """Per-step cost at distance d: linear through the origin inside the
    threshold, constant c0 beyond it. Continuous at d == delta."""
    if d < 0:
        raise ValidationError("distance must be non-negative")
    if d <= params.delta:
        return params.c0 / params.delta * d
    return params.c0


def value_to_go(d: float, params: CostParams) -> float:
    """Expected remaining cost at distance d: running cost scaled by the
    distance-dependent factor (k*d + b)."""
    return running_cost(d, params) * (params.k * d + params.b)


def step_log_likelihood(sample: InputSample, goal_position, params: CostParams) -> float:
    """Unnormalized log-likelihood of the user's step under one goal."""
    goal = np.asarray(goal_position, dtype=float)
    d = float(np.linalg.norm(sample.eef_position - goal))
    d_next = float(np.linalg.norm(sample.eef_position + sample.u_h - goal))
    return params.eta * (value_to_go(d, params) - running_cost(d, params)
                         - value_to_go(d_next, params))


def reset_belief(goal_ids, stage_tag: str = GRASPING) -> GoalBelief:
    """Uniform prior over the given goals."""
    ids = list(goal_ids)
    if not ids:
        raise ValidationError("cannot build a belief over an empty goal set")
    lp = -math.log(len(ids))
    return GoalBelief(log_probs={int(g): lp for g in ids}, stage_tag=stage_tag)


def update_belief(belief: GoalBelief, sample: InputSample,
                  goal_positions: dict[int, np.ndarray],
                  params: CostParams) -> GoalBelief:
    """One recursive Bayes step: add per-goal step log-likelihoods, normalize,
    floor at ``PROB_FLOOR``, and renormalize. Deterministic; never yields NaN
    or -inf entries."""
    missing = [g for g in belief.log_probs if g not in goal_positions]
    if missing:
        raise ValidationError(f"no position supplied for goals {missing}")
    ids = belief.goal_ids
    logp = np.array([
        belief.log_probs[g] + step_log_likelihood(sample, goal_positions[g], params)
        for g in ids
    ])
    logp -= logsumexp(logp)
    logp = np.maximum(logp, math.log(PROB_FLOOR))
    logp -= logsumexp(logp)
    return GoalBelief(log_probs={g: float(lp) for g, lp in zip(ids, logp)},
                      stage_tag=belief.stage_tag)


def argmax_goal(belief: GoalBelief) -> int:
    """Most probable goal id; exact ties break toward the lowest id."""
    best_id = None
    best_lp = -math.inf
    for g in sorted(belief.log_probs):
        lp = belief.log_probs[g]
        if lp > best_lp:
            best_id, best_lp = g, lp
    return best_id
