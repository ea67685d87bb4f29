"""Token pools feeding the GA mutation operator.

Three sources: tokens of the initial hypotheses, word-by-word lexicon
translations of the source sentence, and a flat wordlist. Pools are
deduplicated in first-seen order and can be unioned; every pooled token is a
valid gene (non-empty, whitespace-free).

File formats: a wordlist is UTF-8 text with one token per line (multi-word
lines are split); a lexicon is UTF-8 TSV with ``source_lemma<TAB>target_form``
per line, multiple lines per lemma accumulating surface forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence


@dataclass
class TokenPool:
    """Ordered, deduplicated mutation tokens with their source labels."""

    tokens: list[str] = field(default_factory=list)
    provenance: set[str] = field(default_factory=set)


@dataclass
class LexiconEntry:
    """One source lemma with its pre-expanded target surface forms."""

    source_lemma: str
    target_forms: list[str]


def pool_from_init(hypotheses: Sequence[Sequence[str]]) -> TokenPool:
    """All tokens of the initial hypotheses, first-seen order."""
    if not hypotheses:
        raise ValueError("pool_from_init requires at least one hypothesis")
    tokens = dict.fromkeys(tok for hyp in hypotheses for tok in hyp)
    return TokenPool(list(tokens), {"init"})


def pool_from_lexicon(src_tokens: Sequence[str], lexicon: Sequence[LexiconEntry],
                      lemmatize: Callable[[str], str] | None = None) -> TokenPool:
    """Target forms of every source token whose lemma has a lexicon entry.

    ``lemmatize`` maps a source token to its lookup lemma (identity when not
    given; the lexicon is expected pre-lemmatized and pre-expanded). Source
    tokens without a match contribute nothing; an empty pool is valid.
    """
    if lemmatize is None:
        lemmatize = lambda tok: tok
    forms_by_lemma: dict[str, list[str]] = {}
    for entry in lexicon:
        forms_by_lemma.setdefault(entry.source_lemma, []).extend(entry.target_forms)
    tokens: dict[str, None] = {}
    for tok in src_tokens:
        for form in forms_by_lemma.get(lemmatize(tok), ()):
            for piece in form.split():
                tokens.setdefault(piece)
    return TokenPool(list(tokens), {"lexicon"})


def pool_from_wordlist(lines: Iterable[str]) -> TokenPool:
    """One token per non-empty trimmed line; multi-word lines are split."""
    tokens = dict.fromkeys(piece for line in lines for piece in line.split())
    return TokenPool(list(tokens), {"wordlist"})


def union(pools: Sequence[TokenPool]) -> TokenPool:
    """Deduplicated concatenation preserving first-seen order."""
    tokens: dict[str, None] = {}
    provenance: set[str] = set()
    for pool in pools:
        for tok in pool.tokens:
            tokens.setdefault(tok)
        provenance |= pool.provenance
    return TokenPool(list(tokens), provenance)


def load_wordlist(path: str) -> TokenPool:
    with open(path, encoding="utf-8") as fh:
        return pool_from_wordlist(fh)


def load_lexicon(path: str) -> list[LexiconEntry]:
    """Parse a TSV lexicon; malformed lines raise with their line number."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            lemma, sep, form = line.partition("\t")
            lemma = lemma.strip()
            forms = form.split()
            if not sep or not lemma or not forms:
                raise ValueError(f"lexicon line {n}: expected 'source_lemma<TAB>target_form'")
            entries.append(LexiconEntry(lemma, forms))
    return entries
