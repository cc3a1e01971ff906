"""Vectorized Monte Carlo kernels used by the experiment driver.

A "slice" is one (n, error_range, clamp) combination.  All procedures of a
slice share the same per-run true and belief models, which the kernels
evaluate for batches of runs at once: arrays carry a leading batch axis, and
the per-run quantities match the scalar implementations in chain/procedures
to floating-point reduction order.

Batches are a fixed internal size so that results are bit-identical no matter
how the surrounding sweep is organized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import N_BINS, bin_indices
from .procedures import Procedure

BATCH_SIZE = 2048

_MASK64 = (1 << 64) - 1


def encode_cell_key(n: int, error_range: float, clamp: tuple[float, float] | None):
    """Integer encoding of the model-generating part of a cell identity.

    The procedure is deliberately excluded: cells that differ only by
    procedure share their true and belief models run for run.
    """
    err_code = int(round(error_range * 1000))
    if clamp is None:
        return (n, err_code, 0)
    return (n, err_code, 1, int(round(clamp[0] * 10 ** 9)), int(round(clamp[1] * 10 ** 9)))


def run_seed(master_seed: int, cell_key: tuple[int, ...], run_index: int) -> tuple[int, ...]:
    """Entropy tuple fed to numpy's SeedSequence; injective in its inputs."""
    return (master_seed & _MASK64, *cell_key, run_index)


def run_generator(seed: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


class _StateLayout:
    """Per-n cached index structure over the 2**n evidential states."""

    _cache: dict[int, "_StateLayout"] = {}

    def __init__(self, n: int):
        self.n = n
        states = np.arange(2 ** n)
        # bits[i, s] = value of node i in state s (node 0 most significant)
        self.bits = np.stack([(states >> (n - 1 - i)) & 1 for i in range(n)]).astype(float)
        self.cobits = 1.0 - self.bits
        self.prefix_index = [states >> (n - i) for i in range(n)]
        self.value_bit = [(states >> (n - 1 - i)) & 1 for i in range(n)]

    @classmethod
    def get(cls, n: int) -> "_StateLayout":
        if n not in cls._cache:
            cls._cache[n] = cls(n)
        return cls._cache[n]


@dataclass
class SliceAccumulator:
    """Running totals for one procedure over the runs of a slice."""

    hist_t: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS))
    hist_f: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS))
    sum_mean_t: float = 0.0
    sum_mean_f: float = 0.0
    sum_m2_t: float = 0.0
    sum_m2_f: float = 0.0
    sum_brier: float = 0.0
    degenerate: int = 0
    runs: int = 0


def _generate_parameters(master_seed, cell_key, start, stop, n_params):
    """True parameters and perturbation draws for runs start..stop-1."""
    count = stop - start
    true = np.empty((count, n_params))
    rnd = np.empty((count, n_params))
    for k in range(start, stop):
        g = run_generator(run_seed(master_seed, cell_key, k))
        true[k - start] = g.random(n_params)
        rnd[k - start] = g.random(n_params)
    return true, rnd


def _split(params: np.ndarray, n: int):
    """Flat parameter rows -> (prior (B,), cond tables [(B, 2, 2**i)])."""
    prior = params[:, 0]
    cond = []
    offset = 1
    for i in range(n):
        width = 2 ** (i + 1)
        cond.append(np.ascontiguousarray(params[:, offset:offset + width])
                    .reshape(-1, 2, 2 ** i))
        offset += width
    return prior, cond


def _joint(prior, cond):
    """Batched joint tables, shape (B, 2, 2**n)."""
    batch = prior.shape[0]
    j = np.empty((batch, 2, 1))
    j[:, 0, 0] = 1.0 - prior
    j[:, 1, 0] = prior
    for c in cond:
        j = np.stack([j * (1.0 - c), j * c], axis=-1).reshape(batch, 2, -1)
    return j


def _conditional_weights(joint, prior):
    """P(e|H=T), P(e|H=F) rows; zero (and flag count) where P(h) is zero."""
    flags = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w_t = joint[:, 1, :] / prior[:, None]
        w_f = joint[:, 0, :] / (1.0 - prior)[:, None]
    bad_t = prior == 0.0
    bad_f = prior == 1.0
    if bad_t.any():
        w_t[bad_t] = 0.0
        flags += int(bad_t.sum())
    if bad_f.any():
        w_f[bad_f] = 0.0
        flags += int(bad_f.sum())
    return w_t, w_f, flags


def _marginals(w, n):
    """Per-node value marginals of a weight table: (B, n, 2)."""
    batch, size = w.shape
    out = np.empty((batch, n, 2))
    for i in range(n):
        out[:, i, :] = w.reshape(batch, 2 ** i, 2, -1).sum(axis=(1, 3))
    return out


def _proper_bayes(joint_b):
    den = joint_b[:, 0, :] + joint_b[:, 1, :]
    degenerate = den == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        pb = joint_b[:, 1, :] / den
    if degenerate.any():
        pb[degenerate] = 0.5
    return pb, int(degenerate.sum())


def _naive_bayes(prior, marg_t, marg_f, layout, band):
    """Per-state naive posterior from prior odds and marginal LRs."""
    flags = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        llr = np.log(marg_t) - np.log(marg_f)  # (B, n, 2)
        both_zero = (marg_t == 0.0) & (marg_f == 0.0)
        if both_zero.any():
            llr[both_zero] = 0.0
            flags += int(both_zero.sum())
        if band is not None:
            inside = (marg_t > band[0] * marg_f) & (marg_t < band[1] * marg_f)
            llr = np.where(inside, 0.0, llr)
        prior_bad_hi = prior >= 1.0
        prior_bad_lo = prior <= 0.0
        log_odds = np.log(prior) - np.log1p(-prior)
        logit = (log_odds[:, None]
                 + llr[:, :, 1] @ layout.bits + llr[:, :, 0] @ layout.cobits)
        # stable logistic, same branch arithmetic as the scalar implementation
        decay = np.exp(-np.abs(logit))
        pb = np.where(logit >= 0.0, 1.0 / (1.0 + decay), decay / (1.0 + decay))
    pb = np.nan_to_num(pb, nan=0.5, posinf=1.0, neginf=0.0)
    # a zero denominator with positive numerator saturates the whole product
    saturate = ((marg_f == 0.0) & (marg_t > 0.0))
    if saturate.any():
        # per state: saturated only if the observed value of some item hits the case
        sat_states = (saturate[:, :, 1].astype(float) @ layout.bits
                      + saturate[:, :, 0].astype(float) @ layout.cobits) > 0.0
        pb[sat_states] = 1.0
        flags += int(sat_states.sum())
    if prior_bad_hi.any():
        pb[prior_bad_hi] = 1.0
        flags += int(prior_bad_hi.sum())
    if prior_bad_lo.any():
        pb[prior_bad_lo] = 0.0
        flags += int(prior_bad_lo.sum())
    return pb, flags


def _linear_pb(signed_sum, n):
    return np.clip(((n + 1) + signed_sum) / (2 * (n + 1)), 0.0, 1.0)


def _marginal_votes(prior, marg_t, marg_f, layout, band=None, cap=None):
    """Signed vote sum per state for the marginal-ratio linear variants."""
    flags = int(((marg_f == 0.0) & (marg_t > 0.0)).sum())
    flags += int(((marg_f == 0.0) & (marg_t == 0.0)).sum())
    sign = np.sign(marg_t - marg_f)  # (B, n, 2); 0/0 lands neutral
    prior_sign = np.sign(2.0 * prior - 1.0)
    if band is not None:
        inside = (marg_t > band[0] * marg_f) & (marg_t < band[1] * marg_f)
        sign = np.where(inside, 0.0, sign)
        prior_inside = ((prior > band[0] * (1.0 - prior))
                        & (prior < band[1] * (1.0 - prior)))
        prior_sign = np.where(prior_inside, 0.0, prior_sign)
    if cap is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = np.abs(np.log(marg_t) - np.log(marg_f)) / cap
            prior_mag = np.abs(np.log(prior) - np.log1p(-prior)) / cap
        mag = np.minimum(np.nan_to_num(mag, nan=0.0, posinf=np.inf), 1.0)
        prior_mag = np.minimum(np.nan_to_num(prior_mag, nan=0.0, posinf=np.inf), 1.0)
        sign = sign * mag
        prior_sign = prior_sign * prior_mag
    total = (prior_sign[:, None]
             + sign[:, :, 1] @ layout.bits + sign[:, :, 0] @ layout.cobits)
    return total, flags


def _complex_votes(prior, cond_b, layout):
    """Signed vote sum per state with items conditioned on their chain prefix."""
    batch = prior.shape[0]
    n = len(cond_b)
    total = np.broadcast_to(np.sign(2.0 * prior - 1.0)[:, None],
                            (batch, 2 ** n)).copy()
    flags = 0
    for i in range(n):
        pre = layout.prefix_index[i]
        v = layout.value_bit[i]
        p_t = cond_b[i][:, 1, :][:, pre]
        p_f = cond_b[i][:, 0, :][:, pre]
        obs_t = np.where(v == 1, p_t, 1.0 - p_t)
        obs_f = np.where(v == 1, p_f, 1.0 - p_f)
        flags += int(((obs_f == 0.0)).sum())
        total += np.sign(obs_t - obs_f)
    return total, flags


def _default_rule(marg_t, marg_f, layout, threshold):
    """Static threshold rule per state from the marginal LR classes."""
    flags = int(((marg_f == 0.0) & (marg_t == 0.0)).sum())
    pro = (marg_t > threshold * marg_f).astype(float)
    con = (threshold * marg_t < marg_f).astype(float)
    any_pro = (pro[:, :, 1] @ layout.bits + pro[:, :, 0] @ layout.cobits) > 0.0
    any_con = (con[:, :, 1] @ layout.bits + con[:, :, 0] @ layout.cobits) > 0.0
    pb = np.where(any_pro & ~any_con, 1.0, np.where(any_con & ~any_pro, 0.0, 0.5))
    return pb, flags


def _posteriors(proc: Procedure, prior_b, cond_b, joint_b, marg_t, marg_f, layout):
    if proc.kind == "proper_bayes":
        return _proper_bayes(joint_b)
    if proc.kind == "simple_naive":
        return _naive_bayes(prior_b, marg_t, marg_f, layout, None)
    if proc.kind == "strong_naive":
        return _naive_bayes(prior_b, marg_t, marg_f, layout, proc.band)
    if proc.kind == "default":
        return _default_rule(marg_t, marg_f, layout, proc.threshold)
    n = len(cond_b)
    if proc.kind == "complex_linear":
        votes, flags = _complex_votes(prior_b, cond_b, layout)
    elif proc.kind == "simple_linear":
        votes, flags = _marginal_votes(prior_b, marg_t, marg_f, layout)
    elif proc.kind == "strong_linear":
        votes, flags = _marginal_votes(prior_b, marg_t, marg_f, layout, band=proc.band)
    else:  # weighted_linear
        votes, flags = _marginal_votes(prior_b, marg_t, marg_f, layout, cap=proc.cap)
    return _linear_pb(votes, n), flags


def evaluate_slice(n: int, error_range: float, clamp, procedures, runs: int,
                   master_seed: int) -> dict[str, SliceAccumulator]:
    """Run the full protocol for one slice and every given procedure.

    Per run: sample a true model, perturb it at the slice's error range,
    optionally clamp the belief parameters, evaluate each procedure on all
    2**n states of the belief model, and accumulate histograms, moments and
    Brier scores against the true model's state weights.
    """
    layout = _StateLayout.get(n)
    cell_key = encode_cell_key(n, error_range, clamp)
    n_params = 2 ** (n + 1) - 1
    accs = {proc.label: SliceAccumulator() for proc in procedures}

    for start in range(0, runs, BATCH_SIZE):
        stop = min(start + BATCH_SIZE, runs)
        true, rnd = _generate_parameters(master_seed, cell_key, start, stop, n_params)
        lo = np.maximum(0.0, true - error_range / 2)
        hi = np.minimum(1.0, true + error_range / 2)
        belief = lo + (hi - lo) * rnd
        if clamp is not None:
            np.clip(belief, clamp[0], clamp[1], out=belief)

        prior_t, cond_t = _split(true, n)
        prior_b, cond_b = _split(belief, n)
        joint_t = _joint(prior_t, cond_t)
        joint_b = _joint(prior_b, cond_b)
        w_t, w_f, weight_flags = _conditional_weights(joint_t, prior_t)
        bw_t, bw_f, belief_weight_flags = _conditional_weights(joint_b, prior_b)
        marg_t = _marginals(bw_t, n)
        marg_f = _marginals(bw_f, n)

        for proc in procedures:
            acc = accs[proc.label]
            pb, flags = _posteriors(proc, prior_b, cond_b, joint_b,
                                    marg_t, marg_f, layout)
            bins = bin_indices(pb.ravel())
            acc.hist_t += np.bincount(bins, weights=w_t.ravel(), minlength=N_BINS)
            acc.hist_f += np.bincount(bins, weights=w_f.ravel(), minlength=N_BINS)
            acc.sum_mean_t += float((w_t * pb).sum(axis=1).sum())
            acc.sum_mean_f += float((w_f * pb).sum(axis=1).sum())
            acc.sum_m2_t += float((w_t * pb * pb).sum(axis=1).sum())
            acc.sum_m2_f += float((w_f * pb * pb).sum(axis=1).sum())
            acc.sum_brier += float((joint_t[:, 1, :] * (pb - 1.0) ** 2
                                    + joint_t[:, 0, :] * pb ** 2).sum(axis=1).sum())
            acc.degenerate += flags + weight_flags + belief_weight_flags
            acc.runs += stop - start
    return accs
