"""Finite-sample estimates of the G2R and DA bounds.

All rates are counts divided by the sample size, computed by the helpers at
the top of this module. Both the in-process pipeline and the prediction-file
route go through those helpers, so the two produce bit-identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DatasetPair, Hypothesis, SampleSet
from .errors import ArityError, ConsistencyError, ValidationError

CSV_COLUMNS = (
    "n", "m", "delta", "seed", "gamma", "rho",
    "eps_test_g_h", "eps_test_r_h", "lambda_hat", "d_g2r_hat", "d_da_hat",
    "b_g2r_hat", "b_da_hat", "hoeffding_margin",
)


@dataclass(frozen=True)
class ConfidenceConfig:
    delta: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")


# -- array-level rates ------------------------------------------------------


def mismatch_rate(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ConsistencyError("prediction arrays differ in length")
    if a.size == 0:
        raise ValidationError("rate over an empty set")
    return int(np.count_nonzero(a != b)) / a.size


def psi_from_predictions(pred_synth, pred_real) -> float:
    """Half the balanced error of a domain classifier whose target is synthetic -> 1."""
    pred_synth, pred_real = np.asarray(pred_synth), np.asarray(pred_real)
    if pred_synth.size == 0 or pred_real.size == 0:
        raise ValidationError("psi needs both feature sets nonempty")
    if np.any((pred_synth > 1) | (pred_synth < 0)) or np.any((pred_real > 1) | (pred_real < 0)):
        raise ArityError("psi is defined for binary hypotheses only")
    synth_zero = int(np.count_nonzero(pred_synth == 0)) / pred_synth.size
    real_one = int(np.count_nonzero(pred_real == 1)) / pred_real.size
    return 0.5 * (synth_zero + real_one)


# -- estimators on sample sets ----------------------------------------------


def empirical_risk(h: Hypothesis, labeled: SampleSet) -> float:
    """Fraction of points where ``h`` disagrees with the attached labels."""
    if labeled.labels is None:
        raise ValidationError("empirical risk needs labels")
    if labeled.size == 0:
        raise ValidationError("empirical risk over an empty set")
    return mismatch_rate(h(labeled), labeled.labels)


def disagreement_rate(h1: Hypothesis, h2: Hypothesis, features: SampleSet) -> float:
    if features.size == 0:
        raise ValidationError("disagreement rate over an empty set")
    return mismatch_rate(h1(features), h2(features))


def lambda_hat(h_star_hat: Hypothesis, real_test: SampleSet, synth_test: SampleSet) -> float:
    return empirical_risk(h_star_hat, real_test) + empirical_risk(h_star_hat, synth_test)


def d_g2r_hat(h: Hypothesis, h_star_hat: Hypothesis, synth_test_features: SampleSet,
              real_test_features: SampleSet) -> float:
    return abs(disagreement_rate(h, h_star_hat, synth_test_features)
               - disagreement_rate(h, h_star_hat, real_test_features))


def psi(h_prime: Hypothesis, synth_features: SampleSet, real_features: SampleSet) -> float:
    if h_prime.arity != 2:
        raise ArityError("psi is defined for binary hypotheses only")
    return psi_from_predictions(h_prime(synth_features), h_prime(real_features))


def d_da_hat(h_da: Hypothesis, synth_test_features: SampleSet, real_test_features: SampleSet) -> float:
    return abs(1.0 - 2.0 * psi(h_da, synth_test_features, real_test_features))


def hoeffding_margin(m: int, conf: ConfidenceConfig | float = ConfidenceConfig()) -> float:
    """Two-sided Hoeffding half-width for a rate measured on ``m`` samples."""
    delta = conf.delta if isinstance(conf, ConfidenceConfig) else ConfidenceConfig(conf).delta
    if m < 1:
        raise ValidationError("m must be >= 1")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * m))


def vc_bound(emp_risk: float, n: int, d: int, conf: ConfidenceConfig | float = ConfidenceConfig()) -> float:
    """Empirical risk plus the VC complexity term; may exceed 1."""
    delta = conf.delta if isinstance(conf, ConfidenceConfig) else ConfidenceConfig(conf).delta
    if n < 1:
        raise ValidationError("n must be >= 1")
    if d < 1:
        raise ValidationError("VC dimension must be >= 1")
    # log(4 (2n)^d / delta) expanded so large d cannot overflow
    log_term = math.log(4.0) + d * math.log(2.0 * n) - math.log(delta)
    return emp_risk + math.sqrt(8.0 / n * log_term)


# -- bound assembly ---------------------------------------------------------


def b_g2r(eps_test_g_h: float, lam: float, d_g2r: float) -> float:
    return eps_test_g_h + lam + d_g2r


def b_da(eps_test_g_h: float, lam: float, d_da: float) -> float:
    return eps_test_g_h + lam + d_da


@dataclass(frozen=True)
class BoundReport:
    eps_test_g_h: float
    eps_test_r_h: float
    lambda_hat: float
    d_g2r_hat: float
    d_da_hat: float | None
    b_g2r_hat: float
    b_da_hat: float | None
    hoeffding_margin: float
    n: int | None = None
    m: int | None = None
    delta: float = 0.05
    seed: int | None = None
    gamma: float | None = None
    rho: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        return {**{k: d[k] for k in CSV_COLUMNS}, **extra}

    def csv_row(self) -> list[str]:
        return ["" if getattr(self, c) is None else repr(getattr(self, c)) for c in CSV_COLUMNS]

    @property
    def estimates(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS[6:])


def report_from_predictions(
    *,
    synth_true, synth_h, synth_hstar, real_true, real_h, real_hstar,
    synth_hda=None, real_hda=None,
    conf: ConfidenceConfig = ConfidenceConfig(),
    n: int | None = None, seed: int | None = None,
    gamma: float | None = None, rho: float | None = None,
) -> BoundReport:
    """Assemble a :class:`BoundReport` from test-split prediction arrays."""
    m = len(real_true)
    if len(synth_true) != m:
        raise ConsistencyError(f"real and synthetic test sizes differ ({m} vs {len(synth_true)})")
    eps_g = mismatch_rate(synth_h, synth_true)
    eps_r = mismatch_rate(real_h, real_true)
    lam = mismatch_rate(real_hstar, real_true) + mismatch_rate(synth_hstar, synth_true)
    d_g2r = abs(mismatch_rate(synth_h, synth_hstar) - mismatch_rate(real_h, real_hstar))
    d_da = None
    if synth_hda is not None and real_hda is not None:
        d_da = abs(1.0 - 2.0 * psi_from_predictions(synth_hda, real_hda))
    b1 = b_g2r(eps_g, lam, d_g2r)
    b2 = None if d_da is None else b_da(eps_g, lam, d_da)
    if d_da is not None and d_da >= d_g2r and b2 < b1:
        raise ConsistencyError("B_DA < B_G2R although d_DA >= d_G2R on shared terms")
    return BoundReport(
        eps_test_g_h=eps_g,
        eps_test_r_h=eps_r,
        lambda_hat=lam,
        d_g2r_hat=d_g2r,
        d_da_hat=d_da,
        b_g2r_hat=b1,
        b_da_hat=b2,
        hoeffding_margin=hoeffding_margin(m, conf),
        n=n, m=m, delta=conf.delta, seed=seed, gamma=gamma, rho=rho,
    )


def estimate_bounds(
    data: DatasetPair, h: Hypothesis, h_star_hat: Hypothesis, h_da: Hypothesis | None = None,
    conf: ConfidenceConfig = ConfidenceConfig(), **meta,
) -> BoundReport:
    """Every estimate of the report, all computed on the test splits of ``data``."""
    rt, st = data.real_test, data.synth_test
    kw = {}
    if h_da is not None:
        if h_da.arity != 2:
            raise ArityError("the domain classifier must be binary")
        kw = {"synth_hda": h_da(st), "real_hda": h_da(rt)}
    return report_from_predictions(
        synth_true=st.labels, synth_h=h(st), synth_hstar=h_star_hat(st),
        real_true=rt.labels, real_h=h(rt), real_hstar=h_star_hat(rt),
        conf=conf, n=data.n, **kw, **meta,
    )
