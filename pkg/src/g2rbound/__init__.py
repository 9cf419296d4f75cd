"""Generalization bounds for classifiers trained on synthetic data and tested on real data.

Exact computation on finite worlds, finite-sample estimators, trainers for
the three hypotheses the estimators need, scenario generators and a CLI.
"""

__version__ = "0.1.0"

from .core import (
    Complement,
    DatasetPair,
    Hypothesis,
    HypothesisSpace,
    LabelingFunction,
    LinearSoftmax,
    LookupTable,
    ProbTable,
    SampleSet,
    SmallNet,
    Threshold,
    apply_labeling,
    evaluate,
    sample,
)
from .estimators import (
    BoundReport,
    ConfidenceConfig,
    b_da,
    b_g2r,
    d_da_hat,
    d_g2r_hat,
    disagreement_rate,
    empirical_risk,
    estimate_bounds,
    hoeffding_margin,
    lambda_hat,
    psi,
    vc_bound,
)
from .oracle import (
    DiscreteInstance,
    ExactBoundReport,
    ProofChainReport,
    exact_bounds,
    exact_d_HdH,
    exact_d_hdh,
    exact_disagreement,
    exact_joint_opt,
    exact_risk,
    verify_proof_chain,
)
from .pipeline import RunResult, run_scenario
from .synthgen import (
    ScenarioConfig,
    make_discrete_instance,
    make_gaussian_pair,
    make_overestimation_instance,
    sweep,
)
from .training import TrainConfig, domain_train, erm_train, joint_train
