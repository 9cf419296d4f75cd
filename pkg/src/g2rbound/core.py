"""Shared vocabulary: distributions, labeling functions, hypotheses, samples.

Features come in two shapes. Discrete worlds use integer point ids (1-D
int arrays); continuous scenarios use real vectors (2-D float arrays).
Every stochastic operation takes an explicit integer seed and draws from a
counter-based Philox stream so runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ArityError, CapacityError, DomainError, ShapeError, ValidationError

NORMALIZATION_TOL = 1e-12
ORIGINS = ("real", "synthetic")
SPLITS = ("train", "test")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an optional stream path.

    Distinct ``stream`` tuples give statistically independent generators,
    which is how callers split one seed across sub-tasks.
    """
    if seed < 0 or any(s < 0 for s in stream):
        raise ValidationError("seeds and stream ids must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed for the sub-task named by ``keys``."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0] >> 1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# distributions and labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProbTable:
    """Probability mass over points ``0..point_count-1``."""

    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size == 0:
            raise ValidationError("mass must be a non-empty 1-D array")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ValidationError("mass entries must be finite and non-negative")
        if abs(math.fsum(mass) - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"mass sums to {math.fsum(mass)!r}, not 1")
        object.__setattr__(self, "mass", _frozen(mass))

    @property
    def point_count(self) -> int:
        return int(self.mass.size)

    @classmethod
    def uniform(cls, k: int, support: Sequence[int] | None = None) -> "ProbTable":
        """Uniform table over ``support`` (all ``k`` points by default)."""
        mass = np.zeros(k)
        idx = np.arange(k) if support is None else np.asarray(support)
        mass[idx] = 1.0 / len(idx)
        return cls(mass)

    @classmethod
    def point_mass(cls, k: int, point: int) -> "ProbTable":
        mass = np.zeros(k)
        mass[point] = 1.0
        return cls(mass)

    @classmethod
    def normalized(cls, weights) -> "ProbTable":
        """Normalize non-negative weights, then absorb rounding into the largest entry."""
        w = np.asarray(weights, dtype=np.float64)
        mass = w / w.sum()
        mass[np.argmax(mass)] += 1.0 - math.fsum(mass)
        return cls(mass)


@dataclass(frozen=True, eq=False)
class LabelingFunction:
    """Deterministic map from features to labels in ``[0, arity)``.

    Exactly one of ``table`` (discrete ids) or ``rule`` (callable on a
    feature array) is set.
    """

    arity: int
    table: np.ndarray | None = None
    rule: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.arity < 2:
            raise ValidationError("arity must be >= 2")
        if (self.table is None) == (self.rule is None):
            raise ValidationError("give exactly one of table or rule")
        if self.table is not None:
            table = np.asarray(self.table, dtype=np.int64)
            if table.ndim != 1 or np.any(table < 0) or np.any(table >= self.arity):
                raise ValidationError("label table entries must lie in [0, arity)")
            object.__setattr__(self, "table", _frozen(table))

    @property
    def domain_size(self) -> int | None:
        return None if self.table is None else int(self.table.size)

    def __call__(self, features) -> np.ndarray:
        x = features.features if isinstance(features, SampleSet) else np.asarray(features)
        if self.table is not None:
            ids = _check_ids(x, self.table.size)
            return self.table[ids]
        y = np.asarray(self.rule(x), dtype=np.int64)
        if y.shape != (len(x),) or np.any(y < 0) or np.any(y >= self.arity):
            raise DomainError("labeling rule produced labels outside [0, arity)")
        return y

    @classmethod
    def constant(cls, k: int, label: int = 0, arity: int = 2) -> "LabelingFunction":
        return cls(arity, table=np.full(k, label))


def _check_ids(x: np.ndarray, domain_size: int) -> np.ndarray:
    if x.ndim != 1 or (x.size and not np.issubdtype(x.dtype, np.integer)):
        raise ShapeError("discrete features must be a 1-D integer array")
    if x.size and (x.min() < 0 or x.max() >= domain_size):
        raise DomainError(f"feature ids outside the domain [0, {domain_size})")
    return x


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    features: np.ndarray
    labels: np.ndarray | None = None
    origin: str = "real"
    split: str = "train"

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValidationError(f"origin must be one of {ORIGINS}")
        if self.split not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}")
        object.__setattr__(self, "features", _frozen(np.asarray(self.features)))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (len(self.features),):
                raise ValidationError("labels must match the feature count")
            if np.any(labels < 0):
                raise ValidationError("labels must be non-negative")
            object.__setattr__(self, "labels", _frozen(labels))

    @property
    def size(self) -> int:
        return len(self.features)

    def __len__(self) -> int:
        return self.size

    def with_labels(self, labels) -> "SampleSet":
        return SampleSet(self.features, labels, self.origin, self.split)

    def unlabeled(self) -> "SampleSet":
        return SampleSet(self.features, None, self.origin, self.split)


@dataclass(frozen=True, eq=False)
class DatasetPair:
    real_train: SampleSet
    real_test: SampleSet
    synth_train: SampleSet
    synth_test: SampleSet

    def __post_init__(self):
        sets = (self.real_train, self.real_test, self.synth_train, self.synth_test)
        if any(s.labels is None for s in sets):
            raise ValidationError("all four splits of a DatasetPair carry labels")
        if self.real_train.size != self.synth_train.size:
            raise ValidationError("real and synthetic train sizes differ")
        if self.real_test.size != self.synth_test.size:
            raise ValidationError("real and synthetic test sizes differ")

    @property
    def n(self) -> int:
        return self.real_train.size

    @property
    def m(self) -> int:
        return self.real_test.size


def sample(dist: ProbTable, count: int, seed: int, origin: str = "real", split: str = "train") -> SampleSet:
    """Draw ``count`` i.i.d. point ids from ``dist``."""
    if not isinstance(dist, ProbTable):
        dist = ProbTable(dist)
    if count < 0:
        raise ValidationError("count must be >= 0")
    rng = make_rng(seed)
    ids = rng.choice(dist.point_count, size=count, p=dist.mass).astype(np.int64)
    return SampleSet(ids, None, origin, split)


def apply_labeling(f: LabelingFunction, features: SampleSet) -> SampleSet:
    return features.with_labels(f(features.features))


# ---------------------------------------------------------------------------
# hypotheses
# ---------------------------------------------------------------------------


def _feature_array(features) -> np.ndarray:
    return features.features if isinstance(features, SampleSet) else np.asarray(features)


def _vectors(x: np.ndarray, dims: int) -> np.ndarray:
    if x.ndim == 1 and dims == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != dims:
        raise ShapeError(f"expected feature vectors of dimension {dims}, got shape {x.shape}")
    return x.astype(np.float64, copy=False)


def _argmax_lowest(logits: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximal index, i.e. the lowest label on ties
    return np.argmax(logits, axis=1).astype(np.int64)


class Hypothesis:
    """Deterministic classifier; subclasses implement ``predict``."""

    arity: int = 2
    form: str = ""

    def predict(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, features) -> np.ndarray:
        return self.predict(_feature_array(features))

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LookupTable(Hypothesis):
    table: np.ndarray
    arity: int = 2
    form = "lookup-table"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.ndim != 1 or np.any(table < 0) or np.any(table >= self.arity):
            raise ValidationError("lookup table entries must lie in [0, arity)")
        object.__setattr__(self, "table", _frozen(table))

    def predict(self, x):
        return self.table[_check_ids(x, self.table.size)]

    def to_dict(self):
        return {"form": self.form, "arity": self.arity, "table": self.table.tolist()}


@dataclass(frozen=True, eq=False)
class Threshold(Hypothesis):
    """``I[x[coordinate] >= threshold]``, optionally flipped."""

    threshold: float
    coordinate: int = 0
    flip: bool = False
    form = "threshold"

    @property
    def arity(self) -> int:
        return 2

    def predict(self, x):
        col = x if x.ndim == 1 else x[:, self.coordinate]
        if x.ndim not in (1, 2) or (x.ndim == 2 and self.coordinate >= x.shape[1]):
            raise ShapeError("threshold coordinate outside the feature dimension")
        y = (col >= self.threshold).astype(np.int64)
        return 1 - y if self.flip else y

    def to_dict(self):
        return {"form": self.form, "threshold": float(self.threshold),
                "coordinate": self.coordinate, "flip": self.flip}


@dataclass(frozen=True, eq=False)
class LinearSoftmax(Hypothesis):
    """Argmax of ``x @ weights.T + bias``; ``weights`` has shape (arity, dims)."""

    weights: np.ndarray
    bias: np.ndarray
    form = "linear-softmax"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],) or w.shape[0] < 2:
            raise ValidationError("weights must be (arity, dims) and bias (arity,)")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "bias", _frozen(b))

    @property
    def arity(self) -> int:
        return self.weights.shape[0]

    @property
    def dims(self) -> int:
        return self.weights.shape[1]

    def logits(self, x):
        return _vectors(x, self.dims) @ self.weights.T + self.bias

    def predict(self, x):
        return _argmax_lowest(self.logits(x))

    def to_dict(self):
        return {"form": self.form, "weights": self.weights.tolist(), "bias": self.bias.tolist()}


@dataclass(frozen=True, eq=False)
class SmallNet(Hypothesis):
    """One tanh hidden layer followed by a linear softmax layer."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    form = "one-hidden-layer-net"

    def __post_init__(self):
        arrs = {k: np.asarray(getattr(self, k), dtype=np.float64) for k in ("w1", "b1", "w2", "b2")}
        h, _ = arrs["w1"].shape
        k = arrs["w2"].shape[0]
        if arrs["b1"].shape != (h,) or arrs["w2"].shape != (k, h) or arrs["b2"].shape != (k,) or k < 2:
            raise ValidationError("inconsistent layer shapes")
        for name, a in arrs.items():
            object.__setattr__(self, name, _frozen(a))

    @property
    def arity(self) -> int:
        return self.w2.shape[0]

    @property
    def dims(self) -> int:
        return self.w1.shape[1]

    def logits(self, x):
        hidden = np.tanh(_vectors(x, self.dims) @ self.w1.T + self.b1)
        return hidden @ self.w2.T + self.b2

    def predict(self, x):
        return _argmax_lowest(self.logits(x))

    def to_dict(self):
        return {"form": self.form, **{k: getattr(self, k).tolist() for k in ("w1", "b1", "w2", "b2")}}


@dataclass(frozen=True, eq=False)
class Complement(Hypothesis):
    """Binary complement ``1 - base(x)``."""

    base: Hypothesis
    form = "complement"

    def __post_init__(self):
        if self.base.arity != 2:
            raise ArityError("only binary hypotheses can be complemented")

    @property
    def arity(self) -> int:
        return 2

    def predict(self, x):
        return 1 - self.base.predict(x)

    def to_dict(self):
        return {"form": self.form, "base": self.base.to_dict()}


def hypothesis_from_dict(doc: dict) -> Hypothesis:
    form = doc.get("form")
    if form == "lookup-table":
        return LookupTable(np.array(doc["table"]), doc.get("arity", 2))
    if form == "threshold":
        return Threshold(doc["threshold"], doc.get("coordinate", 0), doc.get("flip", False))
    if form == "linear-softmax":
        return LinearSoftmax(np.array(doc["weights"]), np.array(doc["bias"]))
    if form == "one-hidden-layer-net":
        return SmallNet(*(np.array(doc[k]) for k in ("w1", "b1", "w2", "b2")))
    if form == "complement":
        return Complement(hypothesis_from_dict(doc["base"]))
    raise ValidationError(f"unknown hypothesis form {form!r}")


def evaluate(h: Hypothesis, features) -> np.ndarray:
    """Predicted labels of ``h``, one per feature."""
    return h(features)


def constant_hypothesis(domain_size: int, label: int = 0, arity: int = 2) -> LookupTable:
    return LookupTable(np.full(domain_size, label), arity)


# ---------------------------------------------------------------------------
# hypothesis spaces
# ---------------------------------------------------------------------------

MAX_SPACE_SIZE = 2**16
FINITE_KINDS = ("finite-enumeration", "thresholds-1d", "stumps-kd")
PARAMETRIC_KINDS = ("linear-softmax-family", "small-net-family")


def _finite_vc(size: int) -> int:
    # a class of |H| functions shatters at most log2|H| points
    return max(1, int(math.floor(math.log2(size)))) if size > 1 else 1


def _stump_vc(dims: int) -> int:
    # largest d with 2^d <= 2*dims*(d+1), the stump growth-function count on d points
    d = 1
    while 2 ** (d + 1) <= 2 * dims * (d + 2):
        d += 1
    return d


@dataclass(frozen=True, eq=False)
class HypothesisSpace:
    kind: str
    arity: int
    vc_dimension: int
    members: tuple[Hypothesis, ...] | None = None
    dims: int | None = None
    hidden: int | None = None
    domain_size: int | None = None

    def __post_init__(self):
        if self.kind not in FINITE_KINDS + PARAMETRIC_KINDS:
            raise ValidationError(f"unknown hypothesis space kind {self.kind!r}")
        if self.vc_dimension < 1:
            raise ValidationError("vc_dimension must be positive")
        if self.is_finite:
            if not self.members:
                raise ValidationError("finite space needs at least one member")
            if len(self.members) > MAX_SPACE_SIZE:
                raise CapacityError(f"|H| = {len(self.members)} exceeds {MAX_SPACE_SIZE}")
            if any(h.arity != self.arity for h in self.members):
                raise ArityError("member arity differs from the space arity")
            if self.arity == 2 and self.domain_size is not None:
                table = self.prediction_matrix(np.arange(self.domain_size))
                if not np.any(np.all(table == 0, axis=1)):
                    raise ValidationError("binary finite spaces must contain the constant-0 hypothesis")

    @property
    def is_finite(self) -> bool:
        return self.kind in FINITE_KINDS

    def __iter__(self) -> Iterator[Hypothesis]:
        if not self.is_finite:
            raise CapacityError(f"{self.kind} is not enumerable")
        return iter(self.members)

    def __len__(self) -> int:
        if not self.is_finite:
            raise CapacityError(f"{self.kind} is not enumerable")
        return len(self.members)

    def prediction_matrix(self, features) -> np.ndarray:
        """Predictions of every member, shape (|H|, n)."""
        x = _feature_array(features)
        if self.kind == "finite-enumeration" and all(isinstance(h, LookupTable) for h in self.members):
            tables = np.stack([h.table for h in self.members])
            return tables[:, _check_ids(x, tables.shape[1])]
        return np.stack([h.predict(x) for h in self.members]) if len(x) else np.zeros((len(self.members), 0), np.int64)

    # constructors ---------------------------------------------------------

    @classmethod
    def finite(cls, members: Sequence[Hypothesis], arity: int | None = None,
               domain_size: int | None = None, vc_dimension: int | None = None) -> "HypothesisSpace":
        members = tuple(members)
        if not members:
            raise ValidationError("finite space needs at least one member")
        arity = members[0].arity if arity is None else arity
        vc = _finite_vc(len(members)) if vc_dimension is None else vc_dimension
        return cls("finite-enumeration", arity, vc, members, domain_size=domain_size)

    @classmethod
    def thresholds_1d(cls, domain_size: int) -> "HypothesisSpace":
        """``{I[x >= t] : t = 0..domain_size}``; ``t = domain_size`` is constant 0."""
        members = tuple(Threshold(t) for t in range(domain_size + 1))
        return cls("thresholds-1d", 2, 1, members, dims=1, domain_size=domain_size)

    @classmethod
    def stumps(cls, dims: int, grid: Sequence[float]) -> "HypothesisSpace":
        """Axis-aligned stumps on ``dims`` coordinates at the given cut points.

        The first member is the constant-0 stump (a cut above the grid).
        """
        members = [Threshold(np.inf)]
        for c in range(dims):
            for t in grid:
                members.append(Threshold(float(t), c, False))
                members.append(Threshold(float(t), c, True))
        return cls("stumps-kd", 2, _stump_vc(dims), tuple(members), dims=dims)

    @classmethod
    def linear_softmax(cls, dims: int, arity: int) -> "HypothesisSpace":
        return cls("linear-softmax-family", arity, dims + 1, dims=dims)

    @classmethod
    def small_net(cls, dims: int, hidden: int, arity: int) -> "HypothesisSpace":
        # parameter count; a coarse capacity figure, only used for the VC bound report
        params = hidden * (dims + 1) + arity * (hidden + 1)
        return cls("small-net-family", arity, params, dims=dims, hidden=hidden)
