import numpy as np
import pytest

from beliefsim import ChainModel, new_chain_model

import oracles


@pytest.fixture
def m0() -> ChainModel:
    """Two-node fixture with hand-checkable values."""
    return new_chain_model(2, oracles.M0_PRIOR,
                           [np.array(t, dtype=float) for t in oracles.M0_COND])


def random_model(n: int, seed: int) -> ChainModel:
    rng = np.random.default_rng(seed)
    return ChainModel.from_flat(n, rng.random(2 ** (n + 1) - 1))


def as_oracle(model: ChainModel):
    """(prior, cond-nested-lists, n) view of a ChainModel for oracles.py."""
    cond = tuple(tuple(tuple(row) for row in table) for table in model.cond)
    return model.prior, cond, model.n
