"""
Tabular order-k Markov language models with add-alpha smoothing.
"""

from collections import defaultdict
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config import logger
from ..core import DecodeState, TokenDist, Vocab
from ..errors import (
    EmptyCorpus,
    InvalidConfiguration,
    SequenceMissingEos,
    UnknownEvidenceId,
)
from .base import LanguageModel

BEGIN = -1
MAX_ORDER = 3

Context = Tuple[int, ...]
Table = Dict[Context, np.ndarray]


def _freeze(row: np.ndarray) -> np.ndarray:
    row = np.array(row, dtype=np.float64)
    row.setflags(write=False)
    return row


class TabularLM(LanguageModel):
    """
    Order-k Markov model with one table per evidence id and a pooled marginal.

    States with an evidence id are served from that id's conditional table;
    evidence-free states from the marginal table. Contexts shorter than k are
    left-padded with an internal begin marker. Contexts absent from a table map
    to the uniform distribution, which is what zero counts smooth to.

    Attributes:
        order: Context length k
        alpha: Add-alpha smoothing constant
        conditional: evidence id -> context -> probability row
        marginal: context -> probability row
    """

    def __init__(
        self,
        vocab: Vocab,
        order: int,
        alpha: float,
        conditional: Mapping[str, Mapping[Context, Sequence[float]]],
        marginal: Mapping[Context, Sequence[float]]
    ):
        """
        Initialize a tabular model from probability rows.

        Args:
            vocab: Vocabulary
            order: Context length k in [0, 3]
            alpha: Smoothing constant used to build the rows (> 0)
            conditional: Rows per evidence id and context
            marginal: Rows of the evidence-free model
        """
        if not 0 <= order <= MAX_ORDER:
            raise InvalidConfiguration(f"order must be in [0, {MAX_ORDER}], got {order}")
        if not alpha > 0:
            raise InvalidConfiguration(f"alpha must be > 0, got {alpha}")
        for token in vocab.tokens:
            if token == '^' or any(ch.isspace() for ch in token):
                raise InvalidConfiguration(
                    f"Token {token!r} clashes with the context-string format"
                )
        self._vocab = vocab
        self.order = int(order)
        self.alpha = float(alpha)
        self.conditional: Dict[str, Table] = {
            e: {tuple(c): self._check_row(r) for c, r in rows.items()}
            for e, rows in conditional.items()
        }
        self.marginal: Table = {tuple(c): self._check_row(r) for c, r in marginal.items()}
        self._uniform = TokenDist.uniform(vocab.size)
        self._cache: Dict[Tuple[Optional[str], Context], TokenDist] = {}

    def _check_row(self, row: Sequence[float]) -> np.ndarray:
        arr = _freeze(row)
        if arr.shape != (self._vocab.size,):
            raise InvalidConfiguration(
                f"Row has {arr.size} entries, vocabulary has {self._vocab.size}"
            )
        if not (arr > 0).all():
            raise InvalidConfiguration("Tabular rows must have full support")
        return arr

    @property
    def vocab(self) -> Vocab:
        return self._vocab

    @property
    def evidence_ids(self) -> Tuple[str, ...]:
        return tuple(sorted(self.conditional))

    def context_of(self, tokens: Sequence[int]) -> Context:
        """Last k tokens, left-padded with the begin marker."""
        if self.order == 0:
            return ()
        padded = (BEGIN,) * self.order + tuple(tokens)
        return padded[-self.order:]

    def next_dist(self, state: DecodeState) -> TokenDist:
        """
        Look up P_G(·|s) or P_G(·|s⁻) for the state's last-k context.

        Raises:
            UnknownEvidenceId: If the state's evidence has no table
        """
        evidence = state.evidence_id
        context = self.context_of(state.context)
        key = (evidence, context)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if evidence is None:
            table = self.marginal
        else:
            if evidence not in self.conditional:
                raise UnknownEvidenceId(evidence)
            table = self.conditional[evidence]
        row = table.get(context)
        dist = self._uniform if row is None else TokenDist(np.log(row))
        self._cache[key] = dist
        return dist

    def __repr__(self) -> str:
        return (f"TabularLM(vocab={self._vocab.size}, order={self.order}, "
                f"alpha={self.alpha}, evidence={list(self.evidence_ids)})")


def train_tabular(
    corpus: Sequence[Tuple[str, Sequence[int]]],
    vocab: Vocab,
    order: int,
    alpha: float
) -> TabularLM:
    """
    Fit add-alpha smoothed order-k tables from an evidence-tagged corpus.

    Each conditional row is (count + α) / (total + α|V|). The marginal row of a
    context pools the smoothed counts of every evidence id, so it equals the
    mixture of the conditional rows weighted by each id's smoothed mass at
    that context.

    Args:
        corpus: (evidence_id, token indices) pairs; every sequence ends in eos
        vocab: Vocabulary of the token indices
        order: Context length k
        alpha: Smoothing constant

    Returns:
        Trained TabularLM

    Raises:
        EmptyCorpus: If the corpus has no sequences
        SequenceMissingEos: If a sequence does not end with eos
    """
    if not corpus:
        raise EmptyCorpus("Cannot train on an empty corpus")
    if not alpha > 0:
        raise InvalidConfiguration(f"alpha must be > 0, got {alpha}")
    if not 0 <= order <= MAX_ORDER:
        raise InvalidConfiguration(f"order must be in [0, {MAX_ORDER}], got {order}")

    size = vocab.size
    counts: Dict[str, Dict[Context, np.ndarray]] = defaultdict(dict)
    for evidence, sequence in corpus:
        sequence = tuple(int(t) for t in sequence)
        if not sequence or sequence[-1] != vocab.eos_index:
            raise SequenceMissingEos(f"Sequence for {evidence!r} does not end with eos")
        if vocab.eos_index in sequence[:-1]:
            raise InvalidConfiguration(f"Sequence for {evidence!r} has eos before its end")
        if any(not 0 <= t < size for t in sequence):
            raise InvalidConfiguration(f"Sequence for {evidence!r} has out-of-range tokens")
        padded = (BEGIN,) * order + sequence
        table = counts[str(evidence)]
        for i, token in enumerate(sequence):
            context = padded[i:i + order]
            row = table.get(context)
            if row is None:
                row = table[context] = np.zeros(size)
            row[token] += 1.0

    smooth = alpha * size
    conditional = {
        evidence: {c: (row + alpha) / (row.sum() + smooth) for c, row in table.items()}
        for evidence, table in counts.items()
    }

    contexts = set()
    for table in counts.values():
        contexts.update(table)
    n_evidence = len(counts)
    marginal = {}
    for context in contexts:
        pooled = np.zeros(size)
        for table in counts.values():
            row = table.get(context)
            if row is not None:
                pooled += row
        marginal[context] = (pooled + n_evidence * alpha) / (pooled.sum() + n_evidence * smooth)

    logger.info(
        f"Trained order-{order} tabular model on {len(corpus)} sequences, "
        f"{n_evidence} evidence ids, {len(contexts)} contexts"
    )
    return TabularLM(vocab, order, alpha, conditional, marginal)


def corpus_from_tokens(
    vocab: Vocab,
    examples: Iterable[Tuple[str, Sequence[str]]]
) -> Sequence[Tuple[str, Tuple[int, ...]]]:
    """Encode (evidence, token strings) pairs into index sequences."""
    return [(str(e), vocab.encode(tokens)) for e, tokens in examples]
