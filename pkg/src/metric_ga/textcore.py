"""Whitespace tokenization and n-gram counting shared by metrics and the GA encoding.

Genes and metric units are plain whitespace words: no language-specific rules,
no casing or normalization. Character n-grams drop all whitespace first, so
they are invariant under re-spacing of the input.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence


def tokenize(text: str) -> list[str]:
    """Split ``text`` on runs of whitespace; never returns empty tokens."""
    return text.split()


def detokenize(tokens: Sequence[str]) -> str:
    """Join tokens with single spaces (inverse of :func:`tokenize`)."""
    return " ".join(tokens)


def char_ngrams(text: str, order: int) -> Counter:
    """Count character n-grams of ``text`` with all whitespace removed.

    Returns a Counter mapping each n-gram (a string of length ``order``) to
    its occurrence count. A text shorter than ``order`` yields an empty
    Counter.
    """
    if order < 1:
        raise ValueError(f"n-gram order must be >= 1, got {order}")
    chars = "".join(text.split())
    return Counter(chars[i : i + order] for i in range(len(chars) - order + 1))


def word_ngrams(tokens: Sequence[str], order: int) -> Counter:
    """Count contiguous token subsequences of length ``order`` as tuples."""
    if order < 1:
        raise ValueError(f"n-gram order must be >= 1, got {order}")
    toks = tuple(tokens)
    return Counter(toks[i : i + order] for i in range(len(toks) - order + 1))
