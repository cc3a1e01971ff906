"""Chain-factored joint distributions over a binary hypothesis and n binary evidence nodes.

A model is parameterized by P(H=T) and, for each evidence node i, the table
P(E_i=T | H, E_0..E_{i-1}) over all 2**(i+1) assignments to the conditioning
variables.  Only "=T" entries are stored; "=F" values are complements, so any
parameter vector in [0,1] defines a coherent joint.  The same structure holds
true models and belief models (perturbed copies of a true model).

Conventions used throughout the package:
  * hypothesis/evidence values are 0 (F) and 1 (T);
  * evidential states are sequences of n values ordered A, B, C, ...;
  * state index = the state read as a binary number with node 0 as the most
    significant bit, so enumeration order is (F,..,F), (F,..,T), ..., (T,..,T);
  * cond[i] has shape (2, 2**i): axis 0 is the hypothesis value, axis 1 the
    prefix (E_0..E_{i-1}) read as a binary number.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

F, T = 0, 1

MAX_NODES = 12


class DegenerateCounter:
    """Tally of degenerate events (zero denominators resolved by convention)."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def bump(self, k: int = 1) -> None:
        self.count += k


def parameter_count(n: int) -> int:
    """Number of free parameters of an n-node model: 2**(n+1) - 1."""
    return 2 ** (n + 1) - 1


@dataclass(frozen=True)
class ChainModel:
    """Immutable chain-factored model; see module docstring for layout."""

    prior: float
    cond: tuple[np.ndarray, ...]

    def __post_init__(self):
        n = len(self.cond)
        if not 1 <= n <= MAX_NODES:
            raise ValueError(f"node count out of range: n={n} not in 1..{MAX_NODES}")
        tables = []
        for i, c in enumerate(self.cond):
            c = np.asarray(c, dtype=float)
            if c.shape != (2, 2 ** i):
                raise ValueError(
                    f"shape mismatch: cond table for node {i} has shape {c.shape}, "
                    f"expected (2, {2 ** i})"
                )
            c = c.copy()
            c.setflags(write=False)
            tables.append(c)
        object.__setattr__(self, "cond", tuple(tables))
        flat = self.flat()
        if np.any(flat < 0.0) or np.any(flat > 1.0):
            bad = flat[(flat < 0.0) | (flat > 1.0)][0]
            raise ValueError(f"parameter out of [0, 1]: {bad}")

    @property
    def n(self) -> int:
        return len(self.cond)

    def flat(self) -> np.ndarray:
        """Parameters as one vector: prior first, then node tables in order.

        Within a node the 2**(i+1) entries follow the binary counting order of
        the (H, E_0..E_{i-1}) assignment, H most significant.
        """
        parts = [np.array([self.prior])]
        parts.extend(c.reshape(-1) for c in self.cond)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, n: int, params: np.ndarray) -> "ChainModel":
        """Inverse of flat(); params must have length 2**(n+1) - 1."""
        params = np.asarray(params, dtype=float)
        if params.shape != (parameter_count(n),):
            raise ValueError(
                f"shape mismatch: expected {parameter_count(n)} parameters "
                f"for n={n}, got {params.shape}"
            )
        cond = []
        off = 1
        for i in range(n):
            width = 2 ** (i + 1)
            cond.append(params[off:off + width].reshape(2, 2 ** i))
            off += width
        return cls(float(params[0]), tuple(cond))


def new_chain_model(n: int, prior: float, cond: Sequence) -> ChainModel:
    """Validated constructor; n is checked against the table shapes."""
    model = ChainModel(prior, tuple(np.asarray(c, dtype=float) for c in cond))
    if model.n != n:
        raise ValueError(f"shape mismatch: {model.n} cond tables given for n={n}")
    return model


def all_states(n: int) -> Iterator[tuple[int, ...]]:
    """All 2**n evidential states in binary counting order (node 0 first)."""
    return itertools.product((F, T), repeat=n)


def state_index(e: Sequence[int]) -> int:
    idx = 0
    for v in e:
        idx = idx * 2 + (1 if v else 0)
    return idx


def sample_true_model(n: int, rng: np.random.Generator) -> ChainModel:
    """Draw every parameter independently uniform on [0, 1).

    Draw order is the flat() layout, so a model is fully determined by the
    generator's state.
    """
    if not 1 <= n <= MAX_NODES:
        raise ValueError(f"node count out of range: n={n} not in 1..{MAX_NODES}")
    return ChainModel.from_flat(n, rng.random(parameter_count(n)))


def perturb(model: ChainModel, error_range: float, rng: np.random.Generator) -> ChainModel:
    """Add uniform error of the given range to every parameter.

    Each parameter p is replaced by lo + (hi - lo) * u with
    lo = max(0, p - range/2), hi = min(1, p + range/2) and u uniform on [0, 1).
    Range 0 reproduces the model bit-exactly; range 2 makes every parameter an
    independent uniform draw.
    """
    if not 0.0 <= error_range <= 2.0:
        raise ValueError(f"error range out of [0, 2]: {error_range}")
    params = model.flat()
    lo = np.maximum(0.0, params - error_range / 2)
    hi = np.minimum(1.0, params + error_range / 2)
    return ChainModel.from_flat(model.n, lo + (hi - lo) * rng.random(params.shape[0]))


def clamp_parameters(model: ChainModel, lo: float, hi: float) -> ChainModel:
    """Clip every parameter (prior included) into [lo, hi]."""
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"invalid clamp bounds: need 0 <= lo < hi <= 1, got ({lo}, {hi})")
    return ChainModel.from_flat(model.n, np.clip(model.flat(), lo, hi))


def joint(model: ChainModel, h: int, e: Sequence[int]) -> float:
    """P(H=h, E=e): prior term times one conditional term per node."""
    if len(e) != model.n:
        raise ValueError(f"state length {len(e)} does not match n={model.n}")
    p = model.prior if h else 1.0 - model.prior
    prefix = 0
    for i, v in enumerate(e):
        c = model.cond[i][h, prefix]
        p *= c if v else 1.0 - c
        prefix = prefix * 2 + (1 if v else 0)
    return p


def joint_table(model: ChainModel) -> np.ndarray:
    """Joint over all states as an array of shape (2, 2**n), [h, state_index]."""
    j = np.array([[1.0 - model.prior], [model.prior]])
    for c in model.cond:
        j = np.stack([j * (1.0 - c), j * c], axis=-1).reshape(2, -1)
    return j


def posterior_true(model: ChainModel, e: Sequence[int],
                   flags: DegenerateCounter | None = None) -> float:
    """P(H=T | e) by exact enumeration; 0.5 (flagged) on a zero denominator."""
    jt = joint(model, T, e)
    jf = joint(model, F, e)
    den = jt + jf
    if den == 0.0:
        if flags is not None:
            flags.bump()
        return 0.5
    return jt / den


def evidence_prob_given_h(model: ChainModel, e: Sequence[int], h: int,
                          flags: DegenerateCounter | None = None) -> float:
    """P(e | H=h) = joint(h, e) / P(h); 0 (flagged) when P(h) = 0."""
    ph = model.prior if h else 1.0 - model.prior
    if ph == 0.0:
        if flags is not None:
            flags.bump()
        return 0.0
    return joint(model, h, e) / ph


def state_weights(model: ChainModel, h: int) -> np.ndarray:
    """P(e | H=h) for every state, indexed by state_index."""
    ph = model.prior if h else 1.0 - model.prior
    row = joint_table(model)[h]
    if ph == 0.0:
        return np.zeros_like(row)
    return row / ph


def marginal_likelihood(model: ChainModel, i: int, v: int, h: int) -> float:
    """P(E_i=v | H=h), marginalizing the other nodes exactly."""
    if not 0 <= i < model.n:
        raise ValueError(f"node index {i} out of range for n={model.n}")
    w = state_weights(model, h)
    n = model.n
    # states with bit i equal to v: reshape isolates that bit as an axis
    cube = w.reshape(2 ** i, 2, 2 ** (n - 1 - i))
    return float(cube[:, 1 if v else 0, :].sum())


def conditional_likelihood_given_prefix(model: ChainModel, i: int, v: int, h: int,
                                        prefix: Sequence[int]) -> float:
    """P(E_i=v | H=h, E_0..E_{i-1}=prefix): a direct chain-parameter lookup."""
    if not 0 <= i < model.n:
        raise ValueError(f"node index {i} out of range for n={model.n}")
    if len(prefix) != i:
        raise ValueError(f"prefix length {len(prefix)} does not match node index {i}")
    c = model.cond[i][h, state_index(prefix)] if i else model.cond[0][h, 0]
    return float(c if v else 1.0 - c)
