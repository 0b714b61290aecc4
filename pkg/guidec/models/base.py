"""
Base class for generative language models.
"""

from abc import ABC, abstractmethod
from typing import Tuple

from ..core import DecodeState, TokenDist, Vocab, strip_evidence


class LanguageModel(ABC):
    """
    Abstract base class for next-token models P_G.

    A model answers P_G(·|s) for states carrying evidence and P_G(·|s⁻) for
    states without it.
    """

    @property
    @abstractmethod
    def vocab(self) -> Vocab:
        """Vocabulary the model is defined over."""
        pass

    @property
    @abstractmethod
    def evidence_ids(self) -> Tuple[str, ...]:
        """Evidence ids the model can condition on."""
        pass

    @abstractmethod
    def next_dist(self, state: DecodeState) -> TokenDist:
        """
        Next-token distribution for a non-terminal state.

        Args:
            state: Decoding state; its evidence_id selects the conditional

        Returns:
            Full-support TokenDist over the vocabulary
        """
        pass

    def next_dist_pair(self, state: DecodeState) -> Tuple[TokenDist, TokenDist]:
        """Return (P_G(·|s), P_G(·|s⁻))."""
        return self.next_dist(state), self.next_dist(strip_evidence(state))

    def initial_state(self, prompt: Tuple[int, ...], evidence_id=None) -> DecodeState:
        """The root state s_0 = {e, x}."""
        return DecodeState(tuple(prompt), (), self.vocab.eos_index, evidence_id)
