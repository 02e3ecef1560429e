"""Two-Gate acceptance rule, its threshold arithmetic, and the destructive accept rules"""
import math
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Policy(str, Enum):
    TWO_GATE = "two_gate"
    DEST_TRAIN = "dest_train"
    DEST_VAL = "dest_val"
    DEST_VAL_NOCAP = "dest_val_nocap"

    @property
    def destructive(self) -> bool:
        return self is not Policy.TWO_GATE


DESTRUCTIVE_POLICIES = (Policy.DEST_TRAIN, Policy.DEST_VAL, Policy.DEST_VAL_NOCAP)

Reason = Literal["accepted", "fail_validation", "fail_capacity", "fail_training"]

DECISION_HEADER = (
    "step", "policy", "degree", "cap", "rs_new", "rv_new", "eps_v", "tau", "required_drop", "observed_drop", "reason",
)


class GateConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    c0: float = Field(0.10, gt=0.0)
    delta_v: float = Field(0.05, gt=0.0, lt=1.0)
    tau_mult: float = Field(0.20, ge=0.0)
    cap: int = Field(31, ge=0)
    cap_schedule: Literal["constant", "sqrt"] = "constant"
    cap_scale: float = Field(1.0, gt=0.0)
    n_val: int = Field(60, ge=1)


class GateDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Policy = Policy.TWO_GATE
    accepted: bool
    reason: Reason
    eps_v: float
    tau: float
    required_drop: float
    observed_drop: float

    @model_validator(mode="after")
    def _audit(self):
        if self.accepted != (self.reason == "accepted"):
            raise ValueError("accepted must agree with reason")
        if self.required_drop != 2.0 * self.eps_v + self.tau:
            raise ValueError("required_drop must equal 2 * eps_v + tau")
        return self


class DestructiveUtilityConfig(BaseModel):
    """u = alpha (1 - R_S) + beta g(cap), g(k) = 1 - 1/(1+k)"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(0.9, ge=0.0)
    beta: float = Field(0.1, ge=0.0)

    @model_validator(mode="after")
    def _weights_sum_to_one(self):
        if not math.isclose(self.alpha + self.beta, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError("alpha + beta must equal 1")
        return self


def decision_row(decision: GateDecision, step: int, degree: int, cap: int, rs_new: float, rv_new: float) -> tuple:
    """A decision as one CSV row in DECISION_HEADER order; cap is the proposal's capacity"""
    return (step, decision.policy.value, degree, cap, rs_new, rv_new, decision.eps_v, decision.tau,
            decision.required_drop, decision.observed_drop, decision.reason)


def resolve_cap(cfg: GateConfig, m: int) -> int:
    """K(m): the fixed cap, or floor(scale * sqrt(m)) for the sqrt schedule"""
    if cfg.cap_schedule == "sqrt":
        return int(math.floor(cfg.cap_scale * math.sqrt(m)))
    return cfg.cap


def epsilon_v(K: int, n_val: int, delta_v: float, c0: float) -> float:
    """Uniform validation deviation c0 * sqrt((K + ln(1/delta_v)) / n_val)"""
    if n_val < 1:
        raise ValueError("n_val must be positive")
    return c0 * math.sqrt((K + math.log(1.0 / delta_v)) / n_val)


def tau_margin(eps_v: float, tau_mult: float) -> float:
    if eps_v < 0:
        raise ValueError("eps_v must be nonnegative")
    return tau_mult * eps_v


def validation_gate(rv_new: float, rv_old: float, eps_v: float, tau: float) -> bool:
    return rv_new <= rv_old - (2.0 * eps_v + tau)


def capacity_gate(cap_new: int, K: int) -> bool:
    return cap_new <= K


def gate_thresholds(cfg: GateConfig, m: int):
    """(K, eps_v, tau); a function of (cfg, m) only, fixed before any validation loss is seen"""
    K = resolve_cap(cfg, m)
    eps = epsilon_v(K, cfg.n_val, cfg.delta_v, cfg.c0)
    return K, eps, tau_margin(eps, cfg.tau_mult)


def two_gate_decide(rv_new: float, rv_old: float, cap_new: int, cfg: GateConfig, m: int) -> GateDecision:
    """Capacity gate first, then validation gate"""
    K, eps, tau = gate_thresholds(cfg, m)
    if not capacity_gate(cap_new, K):
        reason = "fail_capacity"
    elif not validation_gate(rv_new, rv_old, eps, tau):
        reason = "fail_validation"
    else:
        reason = "accepted"
    return GateDecision(
        policy=Policy.TWO_GATE,
        accepted=reason == "accepted",
        reason=reason,
        eps_v=eps,
        tau=tau,
        required_drop=2.0 * eps + tau,
        observed_drop=rv_old - rv_new,
    )


def destructive_utility(rs: float, cap: int, cfg: DestructiveUtilityConfig) -> float:
    return cfg.alpha * (1.0 - rs) + cfg.beta * (1.0 - 1.0 / (1.0 + cap))


def destructive_decide(policy, rs_new: float, rs_old: float, rv_new: float, rv_old: float, cap_new: int, K: int) -> bool:
    """Margin-free accept rules of the destructive baselines"""
    policy = Policy(policy)
    if policy is Policy.DEST_TRAIN:
        return rs_new <= rs_old
    if policy is Policy.DEST_VAL:
        return rv_new < rv_old and cap_new <= K
    if policy is Policy.DEST_VAL_NOCAP:
        return rv_new < rv_old
    raise ValueError(f"not a destructive policy: {policy.value}")


def audit_destructive(policy, rs_new: float, rs_old: float, rv_new: float, rv_old: float, cap_new: int, K: int) -> GateDecision:
    """GateDecision for a destructive rule: zero margins, drop measured on the loss the rule compares"""
    policy = Policy(policy)
    accepted = destructive_decide(policy, rs_new, rs_old, rv_new, rv_old, cap_new, K)
    if accepted:
        reason = "accepted"
    elif policy is Policy.DEST_TRAIN:
        reason = "fail_training"
    elif policy is Policy.DEST_VAL and not capacity_gate(cap_new, K):
        reason = "fail_capacity"
    else:
        reason = "fail_validation"
    observed = rs_old - rs_new if policy is Policy.DEST_TRAIN else rv_old - rv_new
    return GateDecision(
        policy=policy,
        accepted=accepted,
        reason=reason,
        eps_v=0.0,
        tau=0.0,
        required_drop=0.0,
        observed_drop=observed,
    )


def decide(policy, rs_new: float, rs_old: float, rv_new: float, rv_old: float, cap_new: int, cfg: GateConfig, m: int) -> GateDecision:
    """Route a proposal to the Two-Gate rule or a destructive rule"""
    policy = Policy(policy)
    if policy is Policy.TWO_GATE:
        return two_gate_decide(rv_new, rv_old, cap_new, cfg, m)
    return audit_destructive(policy, rs_new, rs_old, rv_new, rv_old, cap_new, resolve_cap(cfg, m))
