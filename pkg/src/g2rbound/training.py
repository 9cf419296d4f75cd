"""Training the three hypotheses of the pipeline.

``erm_train`` fits the main classifier on synthetic training data,
``joint_train`` fits the minimizer of the summed real and synthetic
empirical risks, and ``domain_train`` fits the synthetic-vs-real domain
classifier. Finite spaces are solved exactly by enumeration (ties go to the
lowest member index); parametric spaces are fitted with bias-corrected Adam
on a softmax cross-entropy surrogate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    Complement,
    Hypothesis,
    HypothesisSpace,
    LinearSoftmax,
    SampleSet,
    SmallNet,
    hypothesis_from_dict,
    make_rng,
)
from .errors import ArityError, ValidationError
from .estimators import psi

ADAM_EPS = 1e-8
CHECKPOINT_EVERY = 500

_STREAMS = {"erm": 1, "joint": 2, "domain": 3}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0002
    batch_size: int = 128
    max_steps: int = 10_000
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValidationError("Adam betas must lie in [0, 1)")


# ---------------------------------------------------------------------------
# parametric families: flat parameter vectors, weighted softmax cross-entropy
# ---------------------------------------------------------------------------


def _xent_and_dlogits(z, y, w):
    """Sum of ``w_i * -log softmax(z_i)[y_i]`` and its gradient wrt ``z``."""
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(len(y))
    loss = float(np.dot(w, logsum - z[rows, y]))
    dz = np.exp(z - logsum[:, None])
    dz[rows, y] -= 1.0
    dz *= w[:, None]
    return loss, dz


class LinearFamily:
    def __init__(self, dims: int, arity: int):
        self.dims, self.arity = dims, arity
        self.size = arity * dims + arity

    def init(self, rng) -> np.ndarray:
        return np.zeros(self.size)

    def unpack(self, theta):
        k, d = self.arity, self.dims
        return theta[: k * d].reshape(k, d), theta[k * d:]

    def loss_and_grad(self, theta, x, y, w):
        W, b = self.unpack(theta)
        loss, dz = _xent_and_dlogits(x @ W.T + b, y, w)
        return loss, np.concatenate([(dz.T @ x).ravel(), dz.sum(axis=0)])

    def hypothesis(self, theta) -> LinearSoftmax:
        W, b = self.unpack(theta)
        return LinearSoftmax(W.copy(), b.copy())


class NetFamily:
    def __init__(self, dims: int, hidden: int, arity: int):
        self.dims, self.hidden, self.arity = dims, hidden, arity
        self.shapes = [(hidden, dims), (hidden,), (arity, hidden), (arity,)]
        self.size = sum(int(np.prod(s)) for s in self.shapes)

    def init(self, rng) -> np.ndarray:
        w1 = rng.normal(0.0, 1.0 / np.sqrt(self.dims), size=self.shapes[0])
        w2 = rng.normal(0.0, 1.0 / np.sqrt(self.hidden), size=self.shapes[2])
        return np.concatenate([w1.ravel(), np.zeros(self.hidden), w2.ravel(), np.zeros(self.arity)])

    def unpack(self, theta):
        out, i = [], 0
        for s in self.shapes:
            n = int(np.prod(s))
            out.append(theta[i:i + n].reshape(s))
            i += n
        return out

    def loss_and_grad(self, theta, x, y, w):
        w1, b1, w2, b2 = self.unpack(theta)
        hid = np.tanh(x @ w1.T + b1)
        loss, dz = _xent_and_dlogits(hid @ w2.T + b2, y, w)
        da = (dz @ w2) * (1.0 - hid * hid)
        grads = [da.T @ x, da.sum(axis=0), dz.T @ hid, dz.sum(axis=0)]
        return loss, np.concatenate([g.ravel() for g in grads])

    def hypothesis(self, theta) -> SmallNet:
        return SmallNet(*(a.copy() for a in self.unpack(theta)))


def family_for(space: HypothesisSpace):
    if space.kind == "linear-softmax-family":
        return LinearFamily(space.dims, space.arity)
    if space.kind == "small-net-family":
        return NetFamily(space.dims, space.hidden, space.arity)
    raise ValidationError(f"{space.kind} has no parametric family")


def softmax_loss(family, theta, x, y) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient."""
    return family.loss_and_grad(theta, x, y, np.full(len(y), 1.0 / len(y)))


def balanced_binary_loss(family, theta, x_synth, x_real) -> tuple[float, np.ndarray]:
    """Balanced cross-entropy surrogate of psi: synthetic -> 1, real -> 0, each side weighted 1/2."""
    x, y, w = _domain_batch(x_synth, x_real)
    return family.loss_and_grad(theta, x, y, w)


def _domain_batch(x_synth, x_real):
    ns, nr = len(x_synth), len(x_real)
    x = np.concatenate([x_synth, x_real])
    y = np.concatenate([np.ones(ns, np.int64), np.zeros(nr, np.int64)])
    w = np.concatenate([np.full(ns, 0.5 / ns), np.full(nr, 0.5 / nr)])
    return x, y, w


def _as_matrix(features: np.ndarray, dims: int) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1 and dims == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != dims:
        raise ValidationError(f"features must have dimension {dims}")
    return x


def _adam(family, groups, cfg: TrainConfig, stream: int):
    """Minimize ``sum_g mean-weighted xent`` over sample groups with minibatches.

    ``groups`` is a list of ``(x, y, weight)``; each step draws ``batch_size``
    points from every group and weights them so the step's loss estimates
    ``sum_g weight_g * mean_loss_g``. The parameter snapshot with the best
    full-data objective over checkpoints (every 500 steps and the last) wins.
    """
    rng = make_rng(cfg.seed, stream)
    theta = family.init(rng)
    full_x = np.concatenate([g[0] for g in groups])
    full_y = np.concatenate([g[1] for g in groups])
    full_w = np.concatenate([np.full(len(g[1]), g[2] / len(g[1])) for g in groups])
    batch_w = np.concatenate([np.full(cfg.batch_size, g[2] / cfg.batch_size) for g in groups])

    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    best_theta, best_obj = theta.copy(), np.inf
    for step in range(1, cfg.max_steps + 1):
        idx = [rng.integers(0, len(g[1]), cfg.batch_size) for g in groups]
        xb = np.concatenate([g[0][i] for g, i in zip(groups, idx)])
        yb = np.concatenate([g[1][i] for g, i in zip(groups, idx)])
        _, grad = family.loss_and_grad(theta, xb, yb, batch_w)
        m1 = cfg.beta1 * m1 + (1 - cfg.beta1) * grad
        m2 = cfg.beta2 * m2 + (1 - cfg.beta2) * grad * grad
        m1_hat = m1 / (1 - cfg.beta1**step)
        m2_hat = m2 / (1 - cfg.beta2**step)
        theta = theta - cfg.learning_rate * m1_hat / (np.sqrt(m2_hat) + ADAM_EPS)
        if step % CHECKPOINT_EVERY == 0 or step == cfg.max_steps:
            obj, _ = family.loss_and_grad(theta, full_x, full_y, full_w)
            if obj < best_obj:
                best_obj, best_theta = obj, theta.copy()
    return best_theta


# ---------------------------------------------------------------------------
# public trainers
# ---------------------------------------------------------------------------


def _check_labels(s: SampleSet, arity: int, what: str):
    if s.labels is None:
        raise ValidationError(f"{what} needs labels")
    if s.size == 0:
        raise ValidationError(f"{what} is empty")
    if s.labels.max() >= arity:
        raise ValidationError(f"{what} has labels outside [0, {arity})")


def _error_counts(space: HypothesisSpace, s: SampleSet) -> np.ndarray:
    return np.count_nonzero(space.prediction_matrix(s.features) != s.labels, axis=1)


def erm_train(space: HypothesisSpace, train: SampleSet, cfg: TrainConfig = TrainConfig()) -> Hypothesis:
    """Empirical risk minimizer over ``space`` on a labeled sample."""
    _check_labels(train, space.arity, "training set")
    if space.is_finite:
        return space.members[int(np.argmin(_error_counts(space, train)))]
    fam = family_for(space)
    x = _as_matrix(train.features, space.dims)
    return fam.hypothesis(_adam(fam, [(x, train.labels, 1.0)], cfg, _STREAMS["erm"]))


def joint_objectives(space: HypothesisSpace, real_train: SampleSet, synth_train: SampleSet) -> np.ndarray:
    """Summed empirical risks of every member of a finite space."""
    return (_error_counts(space, real_train) / real_train.size
            + _error_counts(space, synth_train) / synth_train.size)


def joint_train(space: HypothesisSpace, real_train: SampleSet, synth_train: SampleSet,
                cfg: TrainConfig = TrainConfig()) -> Hypothesis:
    """Minimizer of the real plus synthetic empirical risk (each set one term)."""
    _check_labels(real_train, space.arity, "real training set")
    _check_labels(synth_train, space.arity, "synthetic training set")
    if space.is_finite:
        return space.members[int(np.argmin(joint_objectives(space, real_train, synth_train)))]
    fam = family_for(space)
    groups = [
        (_as_matrix(real_train.features, space.dims), real_train.labels, 1.0),
        (_as_matrix(synth_train.features, space.dims), synth_train.labels, 1.0),
    ]
    return fam.hypothesis(_adam(fam, groups, cfg, _STREAMS["joint"]))


def domain_psis(space: HypothesisSpace, synth_features: SampleSet, real_features: SampleSet) -> np.ndarray:
    """psi of every member of a finite binary space."""
    ps = space.prediction_matrix(synth_features.features)
    pr = space.prediction_matrix(real_features.features)
    synth_zero = np.count_nonzero(ps == 0, axis=1) / synth_features.size
    real_one = np.count_nonzero(pr == 1, axis=1) / real_features.size
    return 0.5 * (synth_zero + real_one)


def domain_train(space: HypothesisSpace, synth_features: SampleSet, real_features: SampleSet,
                 cfg: TrainConfig = TrainConfig()) -> Hypothesis:
    """Synthetic-vs-real classifier maximizing ``|1 - 2 psi|`` on the training features.

    A member with ``psi > 0.5`` is returned complemented, so the returned
    hypothesis always has ``psi <= 0.5`` and the same ``|1 - 2 psi|``.
    """
    if space.arity != 2:
        raise ArityError("domain classifier space must be binary")
    if synth_features.size == 0 or real_features.size == 0:
        raise ValidationError("domain training needs both feature sets nonempty")
    if space.is_finite:
        psis = domain_psis(space, synth_features, real_features)
        best = int(np.argmax(np.abs(1.0 - 2.0 * psis)))
        h = space.members[best]
        return Complement(h) if psis[best] > 0.5 else h
    fam = family_for(space)
    xs = _as_matrix(synth_features.features, space.dims)
    xr = _as_matrix(real_features.features, space.dims)
    groups = [
        (xs, np.ones(len(xs), np.int64), 0.5),
        (xr, np.zeros(len(xr), np.int64), 0.5),
    ]
    h = fam.hypothesis(_adam(fam, groups, cfg, _STREAMS["domain"]))
    return Complement(h) if psi(h, synth_features, real_features) > 0.5 else h


def save_hypothesis(h: Hypothesis, path) -> None:
    Path(path).write_text(json.dumps(h.to_dict()))


def load_hypothesis(path) -> Hypothesis:
    return hypothesis_from_dict(json.loads(Path(path).read_text()))
