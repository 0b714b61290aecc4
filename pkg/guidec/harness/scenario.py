"""
Scenario definitions and scenario files.

A scenario file is a JSON object::

    {
      "model": "two_step_model.json",
      "prompt": [],
      "evidence": "E1",
      "rule": {"kind": "contains_token", "tokens": ["a"]},
      "horizon": 3,
      "terminate": "at_horizon",
      "policy": {"kind": "classifier_guidance", "lambda": 1.0},
      "samples": 1000,
      "seed": 0
    }

``model`` is resolved relative to the scenario file. Instead of ``model`` a
scenario may give ``corpus: {"path", "order", "alpha"}`` to train the model on
load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from ..config import config, logger
from ..core import PolicyKind, PolicySpec, Termination, Vocab
from ..errors import InvalidConfiguration, MalformedModelFile, UnknownEvidenceId
from ..models import LanguageModel, TabularLM, load_corpus, load_model, train_tabular
from ..valuation import DiscriminatorRule, check_state_space

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Scenario:
    """
    Everything needed to decode episodes for one prompt and evidence.

    Attributes:
        lm: Generative model
        prompt: Prompt token indices
        evidence_id: Evidence the root state carries; None decodes from s⁻ only
        rule: Terminal discriminator
        horizon: T_max
        policy: Decoding policy
        samples: Episodes per evaluation
        seed: Base seed
        termination: When eos may be emitted
        model_path: File the model came from, if any
    """
    lm: LanguageModel
    prompt: Tuple[int, ...]
    evidence_id: Optional[str]
    rule: DiscriminatorRule
    horizon: int
    policy: PolicySpec
    samples: int = 1000
    seed: int = 0
    termination: Termination = Termination.FREE
    model_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'prompt', tuple(int(t) for t in self.prompt))
        object.__setattr__(self, 'termination', Termination(self.termination))
        vocab = self.lm.vocab
        if any(not 0 <= t < vocab.size for t in self.prompt):
            raise InvalidConfiguration("Prompt tokens must lie in the model vocabulary")
        if self.evidence_id is not None and self.evidence_id not in self.lm.evidence_ids:
            raise UnknownEvidenceId(self.evidence_id)
        check_state_space(vocab.size, self.horizon)
        if self.samples < 1:
            raise InvalidConfiguration(f"samples must be >= 1, got {self.samples}")
        if self.seed < 0:
            raise InvalidConfiguration(f"seed must be >= 0, got {self.seed}")

    @property
    def vocab(self) -> Vocab:
        return self.lm.vocab

    def with_policy(self, policy: PolicySpec) -> Scenario:
        return replace(self, policy=policy)

    def to_dict(self) -> Dict[str, Any]:
        vocab = self.vocab
        return {
            'model': self.model_path,
            'prompt': vocab.decode(self.prompt),
            'evidence': self.evidence_id,
            'rule': self.rule.to_dict(vocab),
            'horizon': self.horizon,
            'terminate': self.termination.value,
            'policy': self.policy.to_dict(),
            'samples': self.samples,
            'seed': self.seed,
        }


def _model_from_doc(doc: Mapping[str, Any], base_dir: Path) -> Tuple[LanguageModel, str]:
    if 'model' in doc:
        path = base_dir / str(doc['model'])
        return load_model(path), str(doc['model'])
    corpus = doc.get('corpus')
    if not isinstance(corpus, Mapping) or 'path' not in corpus:
        raise MalformedModelFile("Scenario needs a 'model' path or a 'corpus' section")
    vocab, examples = load_corpus(base_dir / str(corpus['path']))
    lm: TabularLM = train_tabular(
        examples, vocab, int(corpus.get('order', 1)), float(corpus.get('alpha', 1.0))
    )
    return lm, str(corpus['path'])


def scenario_from_dict(doc: Mapping[str, Any], base_dir: PathLike = '.') -> Scenario:
    """
    Build a scenario from its JSON form.

    Raises:
        MalformedModelFile: If required fields are missing
        InvalidConfiguration: If values fail validation
    """
    if not isinstance(doc, Mapping):
        raise MalformedModelFile("Scenario document must be a JSON object")
    missing = [k for k in ('rule', 'horizon', 'policy') if k not in doc]
    if missing:
        raise MalformedModelFile(f"Scenario is missing fields: {missing}")
    lm, model_path = _model_from_doc(doc, Path(base_dir))
    vocab = lm.vocab
    try:
        prompt = vocab.encode(doc.get('prompt', []))
        evidence = doc.get('evidence')
        return Scenario(
            lm=lm,
            prompt=prompt,
            evidence_id=None if evidence is None else str(evidence),
            rule=DiscriminatorRule.from_dict(doc['rule'], vocab),
            horizon=int(doc['horizon']),
            policy=PolicySpec.from_dict(doc['policy']),
            samples=int(doc.get('samples', 1000)),
            seed=int(doc.get('seed', config.seed or 0)),
            termination=Termination(doc.get('terminate', Termination.FREE.value)),
            model_path=model_path,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidConfiguration):
            raise
        raise InvalidConfiguration(f"Bad scenario: {exc}") from None


def load_scenario(path: PathLike) -> Scenario:
    """Read a scenario file; relative model paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise MalformedModelFile(f"{path}: not valid JSON ({exc})") from None
    scenario = scenario_from_dict(doc, path.parent)
    logger.info(f"Loaded scenario {path} ({scenario.policy.kind.value}, "
                f"horizon {scenario.horizon}, {scenario.samples} samples)")
    return scenario


def two_step_scenario(
    policy: Optional[PolicySpec] = None,
    samples: int = 1000,
    seed: int = 0
) -> Scenario:
    """
    The reference scenario with an exactly known value.

    Vocabulary {a, b, eos}, ℙ_G uniform over {a, b}, two free tokens followed by
    a forced eos, and a reward for any sequence containing a. V(s_0) = 0.75,
    Q(s_0, a) = 1 and Q(s_0, b) = 0.5.
    """
    vocab = Vocab.from_tokens(['a', 'b', 'eos'], 'eos')
    corpus = [('E1', vocab.encode(['a', 'b', 'eos'])), ('E1', vocab.encode(['b', 'a', 'eos']))]
    lm = train_tabular(corpus, vocab, order=0, alpha=1.0)
    return Scenario(
        lm=lm,
        prompt=(),
        evidence_id='E1',
        rule=DiscriminatorRule.contains_token(vocab.index('a')),
        horizon=3,
        policy=policy or PolicySpec(PolicyKind.TEMPERATURE, temperature=1.0),
        samples=samples,
        seed=seed,
        termination=Termination.AT_HORIZON,
    )
