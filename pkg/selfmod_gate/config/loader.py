"""Flat key=value configuration: defaults <- config file <- command-line overrides"""
from pathlib import Path
from typing import Dict, List, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from config.settings import MA_DEFAULTS, MH_DEFAULTS, ORACLE_DEFAULTS, SUBSTRATE_DEFAULTS
from handlers.ma_stepmass import MaConfig
from handlers.mh_trajectory import MhConfig
from services.gates import DestructiveUtilityConfig, GateConfig, Policy
from services.hypothesis import TrainConfig
from services.synthdata import SynthConfig
from utils.helpers import ConfigError, parse_int_list, parse_seeds


class FlatSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seeds: str = "1"
    base_seed: int = Field(0, ge=0)

    @field_validator("seeds", mode="before")
    @classmethod
    def _seeds_text(cls, value):
        return str(value)

    @property
    def seed_list(self) -> List[int]:
        return parse_seeds(self.seeds, self.base_seed)


class SynthSettings(FlatSettings):
    dim: int = 1
    n_train: int
    n_val: int
    n_test: int
    noise_sigma: float
    flip_rate: float
    link: Literal["logistic", "threshold"] = "logistic"

    def synth(self) -> SynthConfig:
        return SynthConfig(
            dim=self.dim,
            n_train=self.n_train,
            n_val=self.n_val,
            n_test=self.n_test,
            noise_sigma=self.noise_sigma,
            flip_rate=self.flip_rate,
            link=self.link,
        )


class MhSettings(SynthSettings):
    max_degree: int
    l2_c: float
    tol: float
    max_newton_iters: int
    penalize_intercept: bool
    cap: int
    cap_schedule: Literal["constant", "sqrt"]
    cap_scale: float
    c0: float
    tau_mult: float
    delta_v: float
    alpha: float
    beta: float
    stop_on_reject: bool
    dest_stop_on_reject: bool
    policies: str

    @field_validator("policies")
    @classmethod
    def _known_policies(cls, value):
        for tag in value.split(","):
            Policy(tag.strip())
        return value

    @property
    def policy_list(self) -> List[Policy]:
        return [Policy(tag.strip()) for tag in self.policies.split(",") if tag.strip()]

    def mh_config(self, policy: Policy) -> MhConfig:
        return MhConfig(
            synth=self.synth(),
            train_cfg=TrainConfig(
                l2_c=self.l2_c,
                tol=self.tol,
                max_newton_iters=self.max_newton_iters,
                penalize_intercept=self.penalize_intercept,
            ),
            gate_cfg=GateConfig(
                c0=self.c0,
                delta_v=self.delta_v,
                tau_mult=self.tau_mult,
                cap=self.cap,
                cap_schedule=self.cap_schedule,
                cap_scale=self.cap_scale,
                n_val=self.n_val,
            ),
            util_cfg=DestructiveUtilityConfig(alpha=self.alpha, beta=self.beta),
            max_degree=self.max_degree,
            policy=policy,
            stop_on_reject=self.dest_stop_on_reject if policy.destructive else self.stop_on_reject,
            seeds=self.seed_list,
        )


class MaSettings(SynthSettings):
    degree: int
    eta0: float
    batch: int
    t_max: int
    l2: float
    budget: float
    budget_schedule: Literal["constant", "sqrt"]
    budget_scale: float
    log_every: int

    def ma_config(self) -> MaConfig:
        return MaConfig(
            synth=self.synth(),
            degree=self.degree,
            eta0=self.eta0,
            batch=self.batch,
            t_max=self.t_max,
            l2=self.l2,
            budget=self.budget,
            budget_schedule=self.budget_schedule,
            budget_scale=self.budget_scale,
            log_every=self.log_every,
            seeds=self.seed_list,
        )


class SubstrateSettings(FlatSettings):
    N: int = Field(ge=1)
    D: int = Field(ge=1)
    sizes: str
    targets_per_seed: int = Field(ge=1)
    find_collision: bool
    collision_m: int = Field(ge=0)
    collision_D: int = Field(ge=1)
    collision_budget: int = Field(ge=1)

    @field_validator("sizes", mode="before")
    @classmethod
    def _sizes(cls, value):
        sizes = parse_int_list(value)
        if not sizes or any(m < 1 for m in sizes):
            raise ValueError("sizes must be positive integers")
        return ",".join(str(m) for m in sizes)

    @field_validator("collision_m")
    @classmethod
    def _collision_longer_than_memory(cls, value, info: ValidationInfo):
        n_states = info.data.get("N")
        if value and n_states is not None and value <= n_states:
            raise ValueError("collision_m must exceed N (0 picks N + 1)")
        return value

    @property
    def size_list(self) -> List[int]:
        return parse_int_list(self.sizes)


class OracleSettings(FlatSettings):
    suite: Literal["vc", "proxy", "deviation", "all"]
    probe_trials: int = Field(ge=200)
    probe_net: int = Field(ge=1)
    probe_test_size: int = Field(ge=1)
    probe_n: int = Field(ge=1)
    delta: float = Field(gt=0.0, lt=1.0)
    c0: float = Field(gt=0.0)
    sign_draws: int = Field(ge=1)


EXPERIMENTS = {
    "mh": (MhSettings, MH_DEFAULTS),
    "ma": (MaSettings, MA_DEFAULTS),
    "substrate": (SubstrateSettings, SUBSTRATE_DEFAULTS),
    "oracle": (OracleSettings, ORACLE_DEFAULTS),
}


def read_config_file(path: Path) -> Dict[str, Optional[str]]:
    """key=value lines, `#` comments, no variable expansion"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    return dict(dotenv_values(path, interpolate=False))


def normalize_key(key: str) -> str:
    return key.lstrip("-").replace("-", "_")


def resolve_settings(experiment: str, config_path: Optional[Path] = None,
                     overrides: Optional[Dict[str, object]] = None) -> FlatSettings:
    """Merge defaults, file and overrides, then validate; failures name the offending key"""
    model, defaults = EXPERIMENTS[experiment]
    merged: Dict[str, object] = dict(defaults)
    if config_path is not None:
        for key, value in read_config_file(config_path).items():
            if value is None:
                raise ConfigError(key, "missing value")
            merged[normalize_key(key)] = value
    for key, value in (overrides or {}).items():
        merged[normalize_key(key)] = value
    try:
        settings = model(**merged)
        settings.seed_list
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigError(key, error["msg"]) from exc
    except ValueError as exc:
        raise ConfigError("seeds", str(exc)) from exc
    return settings


def build_experiment_config(experiment: str, settings: FlatSettings):
    """Expand validated flat settings into the nested typed configs"""
    try:
        if experiment == "mh":
            return {policy: settings.mh_config(policy) for policy in settings.policy_list}
        if experiment == "ma":
            return settings.ma_config()
    except ValidationError as exc:
        error = exc.errors()[0]
        key = str(error["loc"][-1]) if error["loc"] else experiment
        raise ConfigError(key, error["msg"]) from exc
    return settings
