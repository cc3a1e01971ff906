"""Evaluation quantities: binned histograms, d', per-bin LR tables, Brier score.

Posterior beliefs are binned into nine intervals with boundaries
0, .11, .22, .33, .44, .56, .67, .78, .89, 1.0 (left-closed, the last interval
closed at 1.0; note the wider middle bin).  Histograms and moments are
conditional on the hypothesis value and weighted by the true model's state
probabilities, so one run contributes its exact expected distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import chain
from .chain import ChainModel, F, T

BIN_EDGES = np.array([0.0, 0.11, 0.22, 0.33, 0.44, 0.56, 0.67, 0.78, 0.89, 1.0])
BIN_LABELS = (
    ".00-.11", ".11-.22", ".22-.33", ".33-.44", ".44-.56",
    ".56-.67", ".67-.78", ".78-.89", ".89-1.0",
)
N_BINS = 9

# the default rule emits only these three values; they land in bins 0, 4, 8
ATOM_LABELS = ("0.0", "0.5", "1.0")
ATOM_BINS = (0, 4, 8)


def bin_index(pb: float) -> int:
    """Index of the interval containing pb (left-closed; 1.0 belongs to bin 8)."""
    if not 0.0 <= pb <= 1.0:
        raise ValueError(f"posterior belief out of [0, 1]: {pb}")
    return min(int(np.digitize(pb, BIN_EDGES[1:-1])), N_BINS - 1)


def bin_indices(pbs: np.ndarray) -> np.ndarray:
    """Vectorized bin_index (inputs assumed within [0, 1])."""
    return np.digitize(pbs, BIN_EDGES[1:-1])


@dataclass(frozen=True)
class ConditionalSummary:
    """State-weighted mean and variance of PB conditional on a hypothesis value."""

    mean: float
    variance: float


def _pb_array(n: int, pb_by_state) -> np.ndarray:
    """Posterior beliefs in state-index order from a mapping or a sequence."""
    size = 2 ** n
    if isinstance(pb_by_state, Mapping):
        if len(pb_by_state) != size:
            missing = size - len(pb_by_state)
            raise ValueError(f"pb_by_state must cover all {size} states "
                             f"({missing} missing)")
        out = np.empty(size)
        for e, pb in pb_by_state.items():
            out[chain.state_index(e)] = pb
        return out
    arr = np.asarray(pb_by_state, dtype=float)
    if arr.shape != (size,):
        raise ValueError(f"pb_by_state must cover all {size} states, got shape {arr.shape}")
    return arr


def accumulate(true_model: ChainModel, pb_by_state):
    """Histograms and moments of PB under P(e|H=T) and P(e|H=F).

    Returns (hist_T, hist_F, summary_T, summary_F).  Moments are taken on the
    raw PB values, not bin midpoints.
    """
    pbs = _pb_array(true_model.n, pb_by_state)
    bins = bin_indices(pbs)
    out = []
    for h in (T, F):
        w = chain.state_weights(true_model, h)
        hist = np.bincount(bins, weights=w, minlength=N_BINS)
        mean = float(np.sum(w * pbs))
        m2 = float(np.sum(w * pbs * pbs))
        out.append((hist, ConditionalSummary(mean, max(m2 - mean * mean, 0.0))))
    (hist_t, sum_t), (hist_f, sum_f) = out
    return hist_t, hist_f, sum_t, sum_f


def dprime(summary_t: ConditionalSummary, summary_f: ConditionalSummary) -> float:
    """Normalized difference between the conditional means.

    The normalizer is sqrt(var_T + var_F), the convention under which the
    reference tables reproduce.  A zero normalizer yields +/-inf by the sign
    of the mean difference, or 0.0 when the means agree.
    """
    diff = summary_t.mean - summary_f.mean
    pooled = summary_t.variance + summary_f.variance
    if pooled == 0.0:
        if diff == 0.0:
            return 0.0
        return float(np.inf) if diff > 0 else float(-np.inf)
    return diff / float(np.sqrt(pooled))


def lr_table(hist_t: np.ndarray, hist_f: np.ndarray) -> np.ndarray:
    """Per-bin ratio hist_t / hist_f; 0/0 -> nan, positive/0 -> inf."""
    hist_t = np.asarray(hist_t, dtype=float)
    hist_f = np.asarray(hist_f, dtype=float)
    out = np.empty_like(hist_t)
    for k in range(out.shape[0]):
        if hist_f[k] == 0.0:
            out[k] = np.nan if hist_t[k] == 0.0 else np.inf
        else:
            out[k] = hist_t[k] / hist_f[k]
    return out


def brier(true_model: ChainModel, pb_by_state) -> float:
    """Expected squared error of PB against the hypothesis indicator."""
    pbs = _pb_array(true_model.n, pb_by_state)
    j = chain.joint_table(true_model)
    return float(np.sum(j[T] * (pbs - 1.0) ** 2) + np.sum(j[F] * pbs ** 2))
