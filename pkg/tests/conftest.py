"""
Shared fixtures: the reference two-step scenario and a small evidence-tagged model.
"""

import pytest

from guidec import Vocab, train_tabular
from guidec.harness import two_step_scenario


@pytest.fixture
def vocab():
    return Vocab.from_tokens(['a', 'b', 'eos'], 'eos')


@pytest.fixture
def two_step():
    """ℙ_G uniform over {a, b}, horizon 3, reward for sequences containing a."""
    return two_step_scenario()


@pytest.fixture
def corpus(vocab):
    encode = vocab.encode
    return [
        ('E1', encode(['a', 'a', 'eos'])),
        ('E1', encode(['a', 'b', 'eos'])),
        ('E1', encode(['a', 'eos'])),
        ('E2', encode(['b', 'b', 'eos'])),
        ('E2', encode(['b', 'eos'])),
        ('E2', encode(['b', 'a', 'eos'])),
    ]


@pytest.fixture
def evidence_lm(corpus, vocab):
    """Order-1 model whose two evidence ids favour different tokens."""
    return train_tabular(corpus, vocab, order=1, alpha=1.0)
