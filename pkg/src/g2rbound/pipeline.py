"""One scenario end to end: generate data, train h, h-hat* and h_DA, estimate bounds."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .core import DatasetPair, Hypothesis, HypothesisSpace, derive_seed
from .estimators import BoundReport, ConfidenceConfig, estimate_bounds
from .oracle import DiscreteInstance, exact_d_HdH, exact_d_hdh, exact_joint_opt, exact_risk
from .synthgen import ScenarioConfig, make_discrete_instance, make_gaussian_pair, make_overestimation_instance, sample_pair
from .training import TrainConfig, domain_train, erm_train, joint_train


@dataclass(frozen=True, eq=False)
class RunResult:
    config: ScenarioConfig
    data: DatasetPair
    h: Hypothesis
    h_star_hat: Hypothesis
    h_da: Hypothesis
    report: BoundReport
    instance: DiscreteInstance | None = None


def build_world(cfg: ScenarioConfig) -> tuple[DatasetPair, DiscreteInstance | None, HypothesisSpace, HypothesisSpace]:
    """Data plus the classifier space and the (binary) domain-classifier space."""
    if cfg.kind == "gaussian-pair":
        data = make_gaussian_pair(cfg)
        return (data, None, HypothesisSpace.linear_softmax(cfg.dims, cfg.arity),
                HypothesisSpace.linear_softmax(cfg.dims, 2))
    if cfg.kind == "discrete-instance":
        inst, data = make_discrete_instance(cfg)
    else:
        inst = make_overestimation_instance(cfg.seed)
        data = sample_pair(inst, cfg.n, cfg.m, derive_seed(cfg.seed, 41))
    dom = inst.space if inst.space.arity == 2 else HypothesisSpace.thresholds_1d(inst.domain_size)
    return data, inst, inst.space, dom


def _exact_extras(inst: DiscreteInstance, h: Hypothesis, h_star_hat: Hypothesis) -> dict:
    h_star, lam = exact_joint_opt(inst.space, inst)
    return {
        "exact_eps_r_h": exact_risk(h, inst.f_r, inst.dist_r),
        "exact_eps_g_h": exact_risk(h, inst.f_g, inst.dist_g),
        "exact_lambda": lam,
        "exact_half_d_hdh": 0.5 * exact_d_hdh(h, h_star, inst.dist_g, inst.dist_r),
        "exact_half_d_hdh_hat": 0.5 * exact_d_hdh(h, h_star_hat, inst.dist_g, inst.dist_r),
        "exact_half_d_HdH": 0.5 * exact_d_HdH(inst.space, inst.dist_g, inst.dist_r),
    }


def run_scenario(cfg: ScenarioConfig, train_cfg: TrainConfig = TrainConfig(),
                 conf: ConfidenceConfig = ConfidenceConfig()) -> RunResult:
    data, inst, space, dom_space = build_world(cfg)
    tc = dataclasses.replace(train_cfg, seed=derive_seed(cfg.seed, 50, train_cfg.seed))
    h = erm_train(space, data.synth_train, tc)
    h_star_hat = joint_train(space, data.real_train, data.synth_train, tc)
    h_da = domain_train(dom_space, data.synth_train.unlabeled(), data.real_train.unlabeled(), tc)
    report = estimate_bounds(data, h, h_star_hat, h_da, conf, seed=cfg.seed, gamma=cfg.gamma, rho=cfg.rho)
    if inst is not None:
        report = dataclasses.replace(report, extra=_exact_extras(inst, h, h_star_hat))
    return RunResult(cfg, data, h, h_star_hat, h_da, report, inst)
