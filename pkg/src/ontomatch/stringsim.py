"""Set- and string-similarity primitives used by the feature grid."""

from __future__ import annotations

import re

import numpy as np

_SPACE_RUNS = re.compile(r"\s+")


def jaccard(a: set, b: set) -> float:
    """|a n b| / |a u b|; defined as 1.0 when both sets are empty."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def char_ngrams(s: str, n: int) -> set[str]:
    """Set of character n-grams of the lowercased, space-collapsed string."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    s = _SPACE_RUNS.sub(" ", s.lower())
    if len(s) < n:
        return set()
    return {s[i : i + n] for i in range(len(s) - n + 1)}


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    b_chars = np.array(list(b))
    offsets = np.arange(1, len(b) + 1)
    prev = np.arange(len(b) + 1)
    for i, ch in enumerate(a, start=1):
        subst = prev[:-1] + (b_chars != ch)
        cur = np.minimum(prev[1:] + 1, subst)
        cur = np.insert(cur, 0, i)
        # Propagate left-to-right insertions: cur[j] = min over k<=j of
        # cur[k] + (j - k), computed with an accumulated minimum.
        cur[1:] = np.minimum.accumulate(cur[1:] - offsets) + offsets
        cur[1:] = np.minimum(cur[1:], cur[0] + offsets)
        prev = cur
    return int(prev[-1])


def edit_similarity(a: str, b: str) -> float:
    """1 - levenshtein / max length; 1.0 for two empty strings."""
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))
