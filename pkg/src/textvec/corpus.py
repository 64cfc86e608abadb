"""Text ingestion: tokenization, vocabulary, and context-window extraction.

One sentence per input line; windows never cross lines. Normalization is
deliberately minimal so results are reproducible everywhere: lowercase,
drop Unicode punctuation, split on whitespace.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple


class EmptyVocabularyError(ValueError):
    """Raised when no token survives the minimum-count filter."""


@lru_cache(maxsize=None)
def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(raw_text: str) -> list[str]:
    """Split a text into normalized tokens.

    Lowercases, removes every Unicode punctuation character (category P*),
    then splits on whitespace runs. Tokens that end up empty are dropped,
    so the result never contains empty strings or whitespace.
    """
    lowered = raw_text.lower()
    cleaned = "".join(ch for ch in lowered if not _is_punctuation(ch))
    return cleaned.split()


class ContextSample(NamedTuple):
    """A prediction target: the center word and its window of neighbors."""

    center_id: int
    context_ids: tuple[int, ...]


@dataclass
class Vocabulary:
    """Surface forms mapped to dense ids 0..V-1 with corpus frequencies.

    Entries are ordered by descending frequency; ties keep first-occurrence
    order, so two builds over the same corpus agree exactly.
    `total_tokens` counts all raw tokens seen, including filtered ones.
    """

    surfaces: list[str]
    frequencies: list[int]
    min_count: int
    total_tokens: int
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.surfaces)}

    def __len__(self) -> int:
        return len(self.surfaces)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def id_of(self, surface: str) -> int:
        return self._index[surface]

    def surface_of(self, word_id: int) -> str:
        return self.surfaces[word_id]

    def frequency_of(self, word_id: int) -> int:
        return self.frequencies[word_id]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        """Map tokens to ids, silently dropping out-of-vocabulary tokens."""
        index = self._index
        return [index[t] for t in tokens if t in index]

    def dump(self, path) -> None:
        """Write the diagnostic listing, one `<surface> <id> <frequency>` per line."""
        with open(path, "w", encoding="utf-8") as fh:
            for i, (surface, freq) in enumerate(zip(self.surfaces, self.frequencies)):
                fh.write(f"{surface} {i} {freq}\n")


def build_vocabulary(sentences: Iterable[list[str]], min_count: int = 1) -> Vocabulary:
    """Count tokens across sentences and keep those seen >= min_count times."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    total = 0
    for sentence in sentences:
        for token in sentence:
            counts[token] += 1
            if token not in first_seen:
                first_seen[token] = total
            total += 1
    kept = [t for t, c in counts.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no token occurs at least {min_count} times in the corpus")
    kept.sort(key=lambda t: (-counts[t], first_seen[t]))
    return Vocabulary(
        surfaces=kept,
        frequencies=[counts[t] for t in kept],
        min_count=min_count,
        total_tokens=total,
    )


def extract_contexts(sentence_ids: list[int], z: int) -> list[ContextSample]:
    """Build one sample per position that has at least one in-window neighbor.

    The window is the z ids on each side, truncated at the sentence ends.
    The input must already be id-mapped with out-of-vocabulary tokens
    removed, so neighbors never refer to missing words.
    """
    if z < 1:
        raise ValueError(f"half-window must be >= 1, got {z}")
    samples = []
    n = len(sentence_ids)
    for pos, center in enumerate(sentence_ids):
        lo = max(0, pos - z)
        hi = min(n, pos + z + 1)
        context = tuple(sentence_ids[lo:pos]) + tuple(sentence_ids[pos + 1:hi])
        if context:
            samples.append(ContextSample(center, context))
    return samples


def read_corpus(path) -> list[list[str]]:
    """Read a plain-text corpus, one sentence per line, tokenizing each line.

    Lines with no tokens (blank, or punctuation only) are skipped.
    """
    with open(path, "r", encoding="utf-8") as fh:
        sentences = [tokenize(line) for line in fh]
    return [s for s in sentences if s]
