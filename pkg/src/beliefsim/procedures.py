"""Inference procedures: posterior belief in H=T for a belief model and a state.

Each procedure consumes a (possibly miscalibrated) belief model and a complete
evidential state and returns a posterior belief in [0, 1].  Proper Bayes is
exact enumeration on the belief joint; the naive variants use per-item
marginal likelihood ratios; the linear family tallies pros and cons; the
default rule jumps to 0/0.5/1 from threshold crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import chain
from .chain import ChainModel, DegenerateCounter, F, T

DEFAULT_BAND = (2.0 / 3.0, 1.5)
DEFAULT_THRESHOLD = 1.5
DEFAULT_WEIGHT_CAP = math.log(3.0)

KINDS = (
    "proper_bayes",
    "simple_naive",
    "strong_naive",
    "complex_linear",
    "simple_linear",
    "strong_linear",
    "weighted_linear",
    "default",
)

_LINEAR_VARIANTS = {
    "complex_linear": "complex",
    "simple_linear": "simple",
    "strong_linear": "strong",
    "weighted_linear": "weighted",
}


@dataclass(frozen=True)
class Procedure:
    """A procedure variant plus its parameters.

    band applies to the strong variants, threshold to the default rule and
    cap to weighted linear; the other fields are ignored by other kinds.
    """

    kind: str
    band: tuple[float, float] = DEFAULT_BAND
    threshold: float = DEFAULT_THRESHOLD
    cap: float = DEFAULT_WEIGHT_CAP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown procedure kind: {self.kind!r}")
        lo, hi = self.band
        if not 0.0 < lo < 1.0 < hi:
            raise ValueError(f"invalid neutral band: need 0 < lo < 1 < hi, got ({lo}, {hi})")
        if not self.threshold > 1.0:
            raise ValueError(f"default threshold must exceed 1, got {self.threshold}")
        if not self.cap > 0.0:
            raise ValueError(f"weight cap must be positive, got {self.cap}")

    @property
    def label(self) -> str:
        """Stable identifier used in CSV output and reports."""
        if self.kind == "default":
            return f"default_t{self.threshold:g}"
        return self.kind


def _sigmoid(log_odds: float) -> float:
    if log_odds >= 0.0:
        return 1.0 / (1.0 + math.exp(-log_odds))
    x = math.exp(log_odds)
    return x / (1.0 + x)


def proper_bayes(belief: ChainModel, e: Sequence[int],
                 flags: DegenerateCounter | None = None) -> float:
    """Bayes rule applied properly: ratio of belief joints for the full state."""
    return chain.posterior_true(belief, e, flags)


def naive_bayes(belief: ChainModel, e: Sequence[int],
                band: tuple[float, float] | None = None,
                flags: DegenerateCounter | None = None) -> float:
    """Posterior odds from prior odds times per-item marginal likelihood ratios.

    Items are treated as conditionally independent given H.  With a band,
    ratios strictly inside (band[0], band[1]) are dropped (set to 1).
    """
    prior = belief.prior
    if prior >= 1.0:
        if flags is not None:
            flags.bump()
        return 1.0
    if prior <= 0.0:
        if flags is not None:
            flags.bump()
        return 0.0
    log_odds = math.log(prior) - math.log1p(-prior)
    saw_zero_ratio = False
    for i, v in enumerate(e):
        m_t = chain.marginal_likelihood(belief, i, v, T)
        m_f = chain.marginal_likelihood(belief, i, v, F)
        if band is not None and band[0] * m_f < m_t < band[1] * m_f:
            continue
        if m_f == 0.0:
            if m_t == 0.0:
                if flags is not None:
                    flags.bump()
                continue
            if flags is not None:
                flags.bump()
            return 1.0
        if m_t == 0.0:
            saw_zero_ratio = True
            continue
        log_odds += math.log(m_t) - math.log(m_f)
    if saw_zero_ratio:
        return 0.0
    return _sigmoid(log_odds)


def _item_ratios(belief: ChainModel, e: Sequence[int], conditional: bool):
    """(numerator, denominator) pairs: the prior item then one per evidence node."""
    pairs = [(belief.prior, 1.0 - belief.prior)]
    for i, v in enumerate(e):
        if conditional:
            num = chain.conditional_likelihood_given_prefix(belief, i, v, T, e[:i])
            den = chain.conditional_likelihood_given_prefix(belief, i, v, F, e[:i])
        else:
            num = chain.marginal_likelihood(belief, i, v, T)
            den = chain.marginal_likelihood(belief, i, v, F)
        pairs.append((num, den))
    return pairs


def linear(belief: ChainModel, e: Sequence[int], variant: str = "simple",
           band: tuple[float, float] = DEFAULT_BAND,
           cap: float = DEFAULT_WEIGHT_CAP,
           flags: DegenerateCounter | None = None) -> float:
    """Add up pros and cons over the prior and the n evidence items.

    An item is a pro when its likelihood ratio exceeds 1 and a con below 1;
    with n+1 items the signed sum s maps to PB = ((n+1) + s) / (2(n+1)), so
    the all-pro state yields 1.0 and the all-con state 0.0.  Variants:
    complex conditions each item on the preceding nodes, simple uses marginal
    ratios, strong drops ratios strictly inside the band, weighted scales each
    vote by min(|ln ratio| / cap, 1).
    """
    if variant not in ("complex", "simple", "strong", "weighted"):
        raise ValueError(f"unknown linear variant: {variant!r}")
    n = belief.n
    s = 0.0
    for num, den in _item_ratios(belief, e, conditional=variant == "complex"):
        if num == den:  # covers the 0/0 case: neutral
            if num == 0.0 and flags is not None:
                flags.bump()
            continue
        if variant == "strong" and band[0] * den < num < band[1] * den:
            continue
        sign = 1.0 if num > den else -1.0
        if variant == "weighted":
            if num == 0.0 or den == 0.0:
                if den == 0.0 and flags is not None:
                    flags.bump()
                weight = 1.0
            else:
                weight = min(abs(math.log(num) - math.log(den)) / cap, 1.0)
            s += sign * weight
        else:
            if den == 0.0 and flags is not None:
                flags.bump()
            s += sign
    pb = ((n + 1) + s) / (2 * (n + 1))
    return min(1.0, max(0.0, pb))


def default_vote(ratios: Sequence[float], threshold: float) -> float:
    """Threshold rule on explicit likelihood ratios.

    Returns 1.0 when some ratio exceeds threshold and none is below
    1/threshold, 0.0 in the reverse situation, 0.5 otherwise.
    """
    if not threshold > 1.0:
        raise ValueError(f"default threshold must exceed 1, got {threshold}")
    any_pro = any(r > threshold for r in ratios)
    any_con = any(r < 1.0 / threshold for r in ratios)
    if any_pro and not any_con:
        return 1.0
    if any_con and not any_pro:
        return 0.0
    return 0.5


def default_rule(belief: ChainModel, e: Sequence[int],
                 threshold: float = DEFAULT_THRESHOLD,
                 flags: DegenerateCounter | None = None) -> float:
    """Jump to 1.0/0.0 on a one-sided threshold crossing of the marginal LRs.

    The prior is not an item.  A zero/zero marginal pair acts as ratio 1
    (flagged); a positive/zero pair acts as an infinite ratio.
    """
    if not threshold > 1.0:
        raise ValueError(f"default threshold must exceed 1, got {threshold}")
    any_pro = False
    any_con = False
    for i, v in enumerate(e):
        m_t = chain.marginal_likelihood(belief, i, v, T)
        m_f = chain.marginal_likelihood(belief, i, v, F)
        if m_t == 0.0 and m_f == 0.0 and flags is not None:
            flags.bump()
        # multiplicative forms of LR > T and LR < 1/T; both false for 0/0
        any_pro = any_pro or m_t > threshold * m_f
        any_con = any_con or threshold * m_t < m_f
    if any_pro and not any_con:
        return 1.0
    if any_con and not any_pro:
        return 0.0
    return 0.5


def posterior(proc: Procedure, belief: ChainModel, e: Sequence[int],
              flags: DegenerateCounter | None = None) -> float:
    """Dispatch to the procedure named by proc.kind."""
    if proc.kind == "proper_bayes":
        return proper_bayes(belief, e, flags)
    if proc.kind == "simple_naive":
        return naive_bayes(belief, e, band=None, flags=flags)
    if proc.kind == "strong_naive":
        return naive_bayes(belief, e, band=proc.band, flags=flags)
    if proc.kind == "default":
        return default_rule(belief, e, proc.threshold, flags)
    return linear(belief, e, _LINEAR_VARIANTS[proc.kind],
                  band=proc.band, cap=proc.cap, flags=flags)
