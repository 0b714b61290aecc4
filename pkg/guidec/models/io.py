"""
Reading and writing model and corpus files.

Model files are JSON documents with the fields ``vocab``, ``eos``, ``order``,
``alpha``, ``conditional`` and ``marginal``. Probabilities are written with 17
significant digits so a load reproduces every float bit for bit. Unknown
fields are ignored.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from ..config import logger
from ..core import Vocab
from ..errors import InvalidConfiguration, InvariantViolation, MalformedModelFile
from .tabular import BEGIN, Context, TabularLM, corpus_from_tokens

PathLike = Union[str, Path]
PAD = '^'
ROW_TOLERANCE = 1e-6
_REQUIRED = ('vocab', 'eos', 'order', 'alpha', 'conditional', 'marginal')


def context_to_string(vocab: Vocab, context: Context) -> str:
    return ' '.join(PAD if t == BEGIN else vocab.tokens[t] for t in context)


def context_from_string(vocab: Vocab, text: str, order: int) -> Context:
    parts = text.split() if text else []
    if len(parts) != order:
        raise MalformedModelFile(f"Context {text!r} does not have {order} tokens")
    try:
        return tuple(BEGIN if p == PAD else vocab.index(p) for p in parts)
    except InvalidConfiguration as exc:
        raise MalformedModelFile(str(exc)) from None


def model_to_dict(lm: TabularLM) -> Dict[str, Any]:
    vocab = lm.vocab
    return {
        'vocab': list(vocab.tokens),
        'eos': vocab.eos,
        'order': lm.order,
        'alpha': lm.alpha,
        'conditional': {
            evidence: {context_to_string(vocab, c): row for c, row in sorted(table.items())}
            for evidence, table in sorted(lm.conditional.items())
        },
        'marginal': {
            context_to_string(vocab, c): row for c, row in sorted(lm.marginal.items())
        },
    }


def save_model(lm: TabularLM, path: PathLike) -> None:
    """
    Write a tabular model to a JSON file.

    Rows are emitted through placeholders so each probability is written with
    17 significant digits rather than json's shortest repr.
    """
    doc = model_to_dict(lm)
    rows: List[np.ndarray] = []

    def placeholder(row: np.ndarray) -> str:
        rows.append(row)
        return f"@@row{len(rows) - 1}@@"

    doc['conditional'] = {
        e: {c: placeholder(r) for c, r in table.items()}
        for e, table in doc['conditional'].items()
    }
    doc['marginal'] = {c: placeholder(r) for c, r in doc['marginal'].items()}
    text = json.dumps(doc, indent=2)
    for i, row in enumerate(rows):
        numbers = ', '.join(format(float(x), '.17g') for x in row)
        text = text.replace(f'"@@row{i}@@"', f'[{numbers}]', 1)
    Path(path).write_text(text + '\n', encoding='utf-8')
    logger.info(f"Saved model with {len(rows)} rows to {path}")


def _parse_row(raw: Any, size: int, where: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != size:
        raise MalformedModelFile(f"Row {where} must be a list of {size} numbers")
    try:
        row = np.array([float(x) for x in raw], dtype=np.float64)
    except (TypeError, ValueError):
        raise MalformedModelFile(f"Row {where} has non-numeric entries") from None
    if not np.isfinite(row).all() or (row <= 0).any():
        raise InvariantViolation(f"Row {where} must be finite and strictly positive")
    total = float(row.sum())
    if abs(total - 1.0) > ROW_TOLERANCE:
        raise InvariantViolation(f"Row {where} sums to {total!r}")
    if abs(total - 1.0) > 1e-12:
        logger.warning(f"Renormalizing row {where} (sum {total!r})")
        row = row / total
    return row


def _parse_table(raw: Any, vocab: Vocab, order: int, where: str) -> Dict[Context, np.ndarray]:
    if not isinstance(raw, Mapping):
        raise MalformedModelFile(f"{where} must be a mapping of context to row")
    return {
        context_from_string(vocab, str(c), order): _parse_row(r, vocab.size, f"{where}[{c!r}]")
        for c, r in raw.items()
    }


def model_from_dict(doc: Mapping[str, Any]) -> TabularLM:
    """
    Rebuild a model from its JSON form, validating every row.

    Raises:
        MalformedModelFile: On missing fields or wrong shapes
        InvariantViolation: If a row does not sum to 1 within 1e-6
    """
    if not isinstance(doc, Mapping):
        raise MalformedModelFile("Model document must be a JSON object")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise MalformedModelFile(f"Model file is missing fields: {missing}")
    try:
        vocab = Vocab.from_tokens([str(t) for t in doc['vocab']], str(doc['eos']))
        order = int(doc['order'])
        alpha = float(doc['alpha'])
    except (InvalidConfiguration, TypeError, ValueError) as exc:
        raise MalformedModelFile(f"Bad model header: {exc}") from None
    conditional_raw = doc['conditional']
    if not isinstance(conditional_raw, Mapping):
        raise MalformedModelFile("conditional must map evidence ids to tables")
    conditional = {
        str(e): _parse_table(t, vocab, order, f"conditional[{e!r}]")
        for e, t in conditional_raw.items()
    }
    marginal = _parse_table(doc['marginal'], vocab, order, 'marginal')
    try:
        return TabularLM(vocab, order, alpha, conditional, marginal)
    except InvalidConfiguration as exc:
        raise MalformedModelFile(str(exc)) from None


def load_model(path: PathLike) -> TabularLM:
    """Load a model written by :func:`save_model`."""
    try:
        doc = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise MalformedModelFile(f"{path}: not valid JSON ({exc})") from None
    lm = model_from_dict(doc)
    logger.info(f"Loaded {lm!r} from {path}")
    return lm


def load_corpus(path: PathLike) -> Tuple[Vocab, Sequence[Tuple[str, Tuple[int, ...]]]]:
    """
    Read a training corpus file.

    The file is a JSON object with ``vocab``, ``eos`` and ``examples``, each
    example being ``{"evidence": id, "tokens": [...]}``.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise MalformedModelFile(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, Mapping) or not {'vocab', 'eos', 'examples'} <= set(doc):
        raise MalformedModelFile("Corpus file needs 'vocab', 'eos' and 'examples'")
    try:
        vocab = Vocab.from_tokens([str(t) for t in doc['vocab']], str(doc['eos']))
        corpus = corpus_from_tokens(
            vocab, [(ex['evidence'], ex['tokens']) for ex in doc['examples']]
        )
    except (KeyError, TypeError) as exc:
        raise MalformedModelFile(f"Bad corpus example: {exc}") from None
    return vocab, corpus
