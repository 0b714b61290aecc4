"""
Generative language models for guidec.
"""

from .base import LanguageModel
from .tabular import TabularLM, corpus_from_tokens, train_tabular
from .io import load_corpus, load_model, save_model

__all__ = ['LanguageModel', 'TabularLM', 'train_tabular', 'load_model', 'save_model', 'load_corpus',
           'corpus_from_tokens']
