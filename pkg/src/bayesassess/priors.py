"""Prior construction from unlabeled pool scores.

Uniform priors ignore the model's scores; informative ("self-assessment")
priors center each group's belief on the model's own mean confidence, with
total pseudo-count fixed at the prior strength N0.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .pool import GroupIndex, Pool
from .posterior import BetaPosterior, DirichletPosterior

log = logging.getLogger(__name__)

PRIOR_KINDS = ("uniform", "informative")
DEFAULT_BETA_STRENGTH = 2.0
DEFAULT_DIRICHLET_STRENGTH = 1.0

# keeps both Beta parameters positive when a group's mean confidence hits 0 or 1
CONFIDENCE_CLAMP = 1e-3


@dataclass(frozen=True)
class PriorConfig:
    kind: str = "uniform"
    strength: float | None = None  # None -> per-family default

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.strength is not None and self.strength <= 0:
            raise ValueError("prior strength must be positive")

    def beta_strength(self) -> float:
        return self.strength if self.strength is not None else DEFAULT_BETA_STRENGTH

    def dirichlet_strength(self) -> float:
        return self.strength if self.strength is not None else DEFAULT_DIRICHLET_STRENGTH

    def to_dict(self):
        d = {"kind": self.kind}
        if self.strength is not None:
            d["strength"] = self.strength
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d.get("kind", "uniform"), strength=d.get("strength"))


def beta_priors(index: GroupIndex, cfg: PriorConfig) -> list[BetaPosterior]:
    """Per-group Beta priors: uniform Beta(N0/2, N0/2) or Beta(N0*s_g, N0*(1-s_g))."""
    n0 = cfg.beta_strength()
    priors = []
    for g in range(index.num_groups):
        if cfg.kind == "informative" and len(index.members[g]) > 0:
            s = float(np.clip(index.mean_confidence[g], CONFIDENCE_CLAMP, 1.0 - CONFIDENCE_CLAMP))
            priors.append(BetaPosterior(alpha=n0 * s, beta=n0 * (1.0 - s)))
        else:
            if cfg.kind == "informative":
                log.warning("group %s is empty; falling back to a uniform prior", index.names[g])
            priors.append(BetaPosterior(alpha=n0 / 2.0, beta=n0 / 2.0))
    return priors


def dirichlet_priors(pool: Pool, index: GroupIndex, cfg: PriorConfig) -> list[DirichletPosterior]:
    """Per-predicted-class Dirichlet priors over confusion columns theta_.k.

    Informative priors put alpha_jk proportional to the summed model score
    for class j over the instances predicted as k, scaled to total N0.
    """
    if index.kind != "predicted-class":
        raise ValueError("dirichlet priors require a predicted-class partition")
    k = pool.num_classes
    n0 = cfg.dirichlet_strength()
    uniform = np.full(k, n0 / k)
    priors = []
    for g in range(index.num_groups):
        members = index.members[g]
        if cfg.kind == "informative" and members:
            score_sum = np.zeros(k)
            for pos in members:
                score_sum += pool.records[pos].scores
            alpha = n0 * score_sum / score_sum.sum()
            # a zero summed score for some class would make alpha_jk = 0; nudge
            alpha = np.maximum(alpha, n0 * 1e-9)
            priors.append(DirichletPosterior.with_prior(alpha))
        else:
            if cfg.kind == "informative":
                log.warning("class %s has no members; falling back to a uniform prior column",
                            index.names[g])
            priors.append(DirichletPosterior.with_prior(uniform.copy()))
    return priors
