import os

import numpy as np
import pytest

from gsnprobe.core import ConditionalModel, Vocabulary
from gsnprobe.tabular import ConditionalTable, ExactJoint, TabularModel, derive_conditionals

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


class UniformModel(ConditionalModel):
    """Uniform conditionals over V tokens at every site."""

    def __init__(self, V: int, n: int):
        tokens = tuple(f"w{i}" for i in range(V - 1)) + ("[MASK]",)
        self.vocab = Vocabulary(tokens=tokens, mask_id=V - 1, unk_id=V - 1)
        self.length = n

    def query(self, ids, site):
        self._check_site(ids, site)
        return np.full(self.vocab.size, 1.0 / self.vocab.size)


class PointMassModel(ConditionalModel):
    """Probability one on a fixed token at every site."""

    def __init__(self, V: int, n: int, target: int = 0):
        tokens = tuple(f"w{i}" for i in range(V)) + ("[MASK]",)
        self.vocab = Vocabulary(tokens=tokens, mask_id=V, unk_id=V)
        self.length = n
        self.target = target

    def query(self, ids, site):
        self._check_site(ids, site)
        p = np.zeros(self.vocab.size)
        p[self.target] = 1.0
        return p


class BrokenModel(ConditionalModel):
    """Returns an invalid vector (sums to 1.1) after `good` queries."""

    def __init__(self, V: int = 2, n: int = 2, good: int = 0):
        tokens = tuple(f"w{i}" for i in range(V)) + ("[MASK]",)
        self.vocab = Vocabulary(tokens=tokens, mask_id=V, unk_id=V)
        self.length = n
        self.remaining = good

    def query(self, ids, site):
        self._check_site(ids, site)
        p = np.full(self.vocab.size, 1.0 / self.vocab.size)
        if self.remaining <= 0:
            p[0] += 0.1
        self.remaining -= 1
        return p


@pytest.fixture
def joint22():
    return ExactJoint(2, 2, np.array([0.4, 0.1, 0.2, 0.3]))


@pytest.fixture
def cond22(joint22):
    return derive_conditionals(joint22)


@pytest.fixture
def model22(cond22):
    return TabularModel(cond22)


@pytest.fixture
def inconsistent22(cond22) -> ConditionalTable:
    # frozen order-dependence fixture: one conditional bumped by 0.2
    return cond22.perturbed(site=0, context=0, token=0, delta=0.2)
