"""Exact bound computation on finite worlds.

A :class:`DiscreteInstance` fixes everything: two mass tables over the same
``K`` points, the real and synthetic labeling tables, and an enumerable
hypothesis space. Risks are mass-weighted disagreement sums, so every term
of the G2R and DA bounds is available in closed form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import (
    MAX_SPACE_SIZE,
    Hypothesis,
    HypothesisSpace,
    LabelingFunction,
    LookupTable,
    ProbTable,
    hypothesis_from_dict,
)
from .errors import CapacityError, DomainError, ValidationError

MAX_DOMAIN_SIZE = 4096
MAX_PAIR_COUNT = 2**26

IDENTITY_TOL = 1e-12
INEQUALITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    dist_r: ProbTable
    dist_g: ProbTable
    f_r: LabelingFunction
    f_g: LabelingFunction
    space: HypothesisSpace

    def __post_init__(self):
        k = self.dist_r.point_count
        if k > MAX_DOMAIN_SIZE:
            raise CapacityError(f"domain size {k} exceeds {MAX_DOMAIN_SIZE}")
        sizes = {k, self.dist_g.point_count, self.f_r.domain_size, self.f_g.domain_size}
        if len(sizes) != 1:
            raise DomainError("distributions and labeling tables disagree on the domain size")
        if not self.space.is_finite:
            raise ValidationError("a discrete instance needs an enumerable hypothesis space")
        if len(self.space) > MAX_SPACE_SIZE:
            raise CapacityError(f"|H| = {len(self.space)} exceeds {MAX_SPACE_SIZE}")

    @property
    def domain_size(self) -> int:
        return self.dist_r.point_count

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.domain_size)

    def table(self, h: Hypothesis | LabelingFunction) -> np.ndarray:
        """Prediction table of ``h`` over every point of the domain."""
        return np.asarray(h(self.points), dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "domain_size": self.domain_size,
            "arity": self.f_r.arity,
            "dist_r": self.dist_r.mass.tolist(),
            "dist_g": self.dist_g.mass.tolist(),
            "f_r": self.f_r.table.tolist(),
            "f_g": self.f_g.table.tolist(),
            "space_kind": self.space.kind,
            "vc_dimension": self.space.vc_dimension,
            "hypotheses": self.space.prediction_matrix(self.points).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscreteInstance":
        arity = int(doc["arity"])
        k = int(doc["domain_size"])
        if doc.get("space_kind") == "thresholds-1d":
            space = HypothesisSpace.thresholds_1d(k)
        else:
            members = [LookupTable(np.array(t), arity) for t in doc["hypotheses"]]
            space = HypothesisSpace.finite(members, arity, domain_size=k,
                                           vc_dimension=doc.get("vc_dimension"))
        return cls(
            ProbTable(np.array(doc["dist_r"], dtype=np.float64)),
            ProbTable(np.array(doc["dist_g"], dtype=np.float64)),
            LabelingFunction(arity, table=np.array(doc["f_r"])),
            LabelingFunction(arity, table=np.array(doc["f_g"])),
            space,
        )

    @classmethod
    def from_json(cls, text: str) -> "DiscreteInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ExactBoundReport:
    eps_r_h: float
    eps_g_h: float
    h_star: Hypothesis
    lambda_: float
    d_hdh: float
    d_HdH: float
    b_g2r: float
    b_da: float


@dataclass(frozen=True)
class ProofChainReport:
    lhs_s3: float
    rhs_s3: float
    lhs_s4: float
    rhs_s4: float
    s5_identity_gap: float
    final_slack: float

    @property
    def all_hold(self) -> bool:
        return (
            self.lhs_s3 <= self.rhs_s3 + IDENTITY_TOL
            and self.lhs_s4 <= self.rhs_s4 + IDENTITY_TOL
            and abs(self.s5_identity_gap) <= IDENTITY_TOL
            and self.final_slack >= -IDENTITY_TOL
        )


def _table_on(fn, dist: ProbTable) -> np.ndarray:
    if isinstance(fn, np.ndarray):
        table = fn
    else:
        table = np.asarray(fn(np.arange(dist.point_count)), dtype=np.int64)
    if table.shape != (dist.point_count,):
        raise DomainError("function table does not cover the distribution's domain")
    return table


def _weighted_mismatch(a: np.ndarray, b: np.ndarray, dist: ProbTable) -> float:
    # one fixed reduction path, so identities built from it hold bit-for-bit
    return float(np.dot((a != b).astype(np.float64), dist.mass))


def exact_risk(h, f, dist: ProbTable) -> float:
    """Mass of the points where ``h`` and ``f`` disagree."""
    return _weighted_mismatch(_table_on(h, dist), _table_on(f, dist), dist)


def exact_disagreement(h1, h2, dist: ProbTable) -> float:
    return _weighted_mismatch(_table_on(h1, dist), _table_on(h2, dist), dist)


def exact_d_hdh(h, h_star, dist_g: ProbTable, dist_r: ProbTable) -> float:
    """Distance between the two distributions seen through the single region ``{h != h*}``."""
    if dist_g.point_count != dist_r.point_count:
        raise DomainError("distributions live on different domains")
    return 2.0 * abs(exact_disagreement(h, h_star, dist_g) - exact_disagreement(h, h_star, dist_r))


def exact_d_HdH(space: HypothesisSpace, dist_g: ProbTable, dist_r: ProbTable) -> float:
    """Supremum of the same gap over every ordered pair of members of ``space``.

    Pairs with ``h' == h''`` are included; they contribute the empty region.
    """
    if dist_g.point_count != dist_r.point_count:
        raise DomainError("distributions live on different domains")
    size = len(space)
    if size * size > MAX_PAIR_COUNT:
        raise CapacityError(f"|H|^2 = {size * size} exceeds {MAX_PAIR_COUNT}")
    preds = space.prediction_matrix(np.arange(dist_g.point_count))
    diff = dist_g.mass - dist_r.mass
    best = 0.0
    # row blocks keep the boolean cube bounded in memory
    block = max(1, 2**22 // max(1, size * preds.shape[1]))
    for start in range(0, size, block):
        region = preds[start:start + block, None, :] != preds[None, :, :]
        gaps = np.abs(region.astype(np.float64) @ diff)
        best = max(best, float(gaps.max()))
    return 2.0 * best


def exact_joint_opt(space: HypothesisSpace, inst: DiscreteInstance) -> tuple[Hypothesis, float]:
    """Member minimizing the summed real and synthetic risks, with that minimum."""
    if len(space) == 0:
        raise ValidationError("empty hypothesis space")
    preds = space.prediction_matrix(inst.points)
    fr, fg = inst.table(inst.f_r), inst.table(inst.f_g)
    combined = np.array([
        _weighted_mismatch(p, fr, inst.dist_r) + _weighted_mismatch(p, fg, inst.dist_g) for p in preds
    ])
    best = int(np.argmin(combined))
    return space.members[best], float(combined[best])


def exact_bounds(inst: DiscreteInstance, h: Hypothesis) -> ExactBoundReport:
    h_table = inst.table(h)
    eps_r = exact_risk(h_table, inst.f_r, inst.dist_r)
    eps_g = exact_risk(h_table, inst.f_g, inst.dist_g)
    h_star, lam = exact_joint_opt(inst.space, inst)
    d_hdh = exact_d_hdh(h_table, h_star, inst.dist_g, inst.dist_r)
    d_HdH = exact_d_HdH(inst.space, inst.dist_g, inst.dist_r)
    return ExactBoundReport(
        eps_r_h=eps_r,
        eps_g_h=eps_g,
        h_star=h_star,
        lambda_=lam,
        d_hdh=d_hdh,
        d_HdH=d_HdH,
        b_g2r=eps_g + lam + 0.5 * d_hdh,
        b_da=eps_g + lam + 0.5 * d_HdH,
    )


def verify_proof_chain(inst: DiscreteInstance, h: Hypothesis, h_star: Hypothesis) -> ProofChainReport:
    """Evaluate each step of the G2R derivation for an arbitrary ``h_star``.

    Nothing in the derivation uses optimality of ``h_star``, so the final
    slack is taken against ``eps_g(h) + eps_r(h*) + eps_g(h*) + d/2`` with
    the combined error of the supplied ``h_star``. When ``h_star`` is the
    joint minimizer this is exactly the G2R bound.
    """
    ht, hs = inst.table(h), inst.table(h_star)
    fr, fg = inst.table(inst.f_r), inst.table(inst.f_g)
    eps_r_h_fr = exact_risk(ht, fr, inst.dist_r)
    eps_r_h_hs = exact_risk(ht, hs, inst.dist_r)
    eps_r_hs_fr = exact_risk(hs, fr, inst.dist_r)
    eps_g_h_fg = exact_risk(ht, fg, inst.dist_g)
    eps_g_h_hs = exact_risk(ht, hs, inst.dist_g)
    eps_g_hs_fg = exact_risk(hs, fg, inst.dist_g)

    d = exact_d_hdh(ht, hs, inst.dist_g, inst.dist_r)
    bound = eps_g_h_fg + (eps_r_hs_fr + eps_g_hs_fg) + 0.5 * d
    return ProofChainReport(
        lhs_s3=abs(eps_r_h_fr - eps_r_h_hs),
        rhs_s3=eps_r_hs_fr,
        lhs_s4=abs(eps_g_h_hs - eps_g_h_fg),
        rhs_s4=eps_g_hs_fg,
        s5_identity_gap=d - 2.0 * abs(eps_g_h_hs - eps_r_h_hs),
        final_slack=bound - eps_r_h_fr,
    )
