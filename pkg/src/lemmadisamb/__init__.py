"""Dictionary-augmented LLM lemma disambiguation for low-resource languages."""

from .analysis import CandidateSet, ExternalAnalyzer, LexiconAnalyzer, attach_external, candidates, load_lexicon
from .corpus import Sentence, Token, concat_splits, parse_conllu, read_conllu, sentence_surface
from .dictionary import DictionaryIndex, load_dictionary, translations
from .errors import (
    AlignmentError,
    BackendError,
    ConfigError,
    CredentialError,
    ExtractionError,
    LemmaDisambError,
    ParseError,
    ReplayMissError,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BackendError",
    "CandidateSet",
    "ConfigError",
    "CredentialError",
    "DictionaryIndex",
    "ExternalAnalyzer",
    "ExtractionError",
    "LemmaDisambError",
    "LexiconAnalyzer",
    "ParseError",
    "ReplayMissError",
    "Sentence",
    "Token",
    "attach_external",
    "candidates",
    "concat_splits",
    "load_dictionary",
    "load_lexicon",
    "parse_conllu",
    "read_conllu",
    "sentence_surface",
    "translations",
]
