"""Preference-loss math over supplied sequence log-probabilities.

Pure functions; no model hosting.  The reference policy is treated as
frozen, so the returned gradient entries for the reference log-probs are
zero by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyBatch, NonFiniteInput


@dataclass(frozen=True)
class PolicyLogProbs:
    logp_policy_chosen: float
    logp_policy_rejected: float
    logp_ref_chosen: float
    logp_ref_rejected: float

    def validate(self) -> None:
        for name, v in vars(self).items():
            if not math.isfinite(v):
                raise NonFiniteInput(f"{name} = {v!r}")


@dataclass(frozen=True)
class DpoParams:
    beta: float
    lam: float = 0.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


def delta(logp_policy: float, logp_ref: float) -> float:
    """Log-density ratio of policy over reference for one completion."""
    if not (math.isfinite(logp_policy) and math.isfinite(logp_ref)):
        raise NonFiniteInput(f"({logp_policy!r}, {logp_ref!r})")
    return logp_policy - logp_ref


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _softplus_neg(z: float) -> float:
    """-log(sigmoid(z)) = softplus(-z), overflow-safe."""
    if z >= 0:
        return math.log1p(math.exp(-z))
    return -z + math.log1p(math.exp(z))


@dataclass(frozen=True)
class DpoGrads:
    d_policy_chosen: float
    d_policy_rejected: float
    d_ref_chosen: float = 0.0
    d_ref_rejected: float = 0.0


def margin(lp: PolicyLogProbs) -> float:
    return delta(lp.logp_policy_chosen, lp.logp_ref_chosen) - delta(
        lp.logp_policy_rejected, lp.logp_ref_rejected
    )


def dpo_loss(lp: PolicyLogProbs, params: DpoParams) -> tuple[float, DpoGrads]:
    """-log sigmoid(beta * margin) with analytic policy gradients."""
    lp.validate()
    z = params.beta * margin(lp)
    loss = _softplus_neg(z)
    coeff = params.beta * (1.0 - _sigmoid(z))
    return loss, DpoGrads(d_policy_chosen=-coeff, d_policy_rejected=coeff)


def combined_loss(lp: PolicyLogProbs, params: DpoParams) -> float:
    """DPO loss plus lam * (-logp of the chosen completion under the policy)."""
    loss, _ = dpo_loss(lp, params)
    return loss + params.lam * (-lp.logp_policy_chosen)


def batch_preference_accuracy(batch: list[PolicyLogProbs], params: DpoParams) -> float:
    """Fraction of pairs where the policy margin is positive."""
    if not batch:
        raise EmptyBatch("no pairs in batch")
    for lp in batch:
        lp.validate()
    return sum(1 for lp in batch if margin(lp) > 0) / len(batch)
