"""Engineered feature grid for a candidate entity pair.

32 features, channel-major: four input channels (canonical names, best
alias pair, definitions, pooled name+alias token sets), eight metrics per
channel. The metric order within a channel is:

  0 token Jaccard
  1 stemmed-token Jaccard
  2 char-4-gram Jaccard
  3 char-5-gram Jaccard
  4 exact lowercase equality
  5 root-word equality (equality of the stemmed final token)
  6 prefix containment (either lowercased string is a prefix of the other)
  7 edit similarity

This layout is part of the model serialization contract; see FEATURE_NAMES.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .blocking import tokenize
from .kb import Entity
from .stemming import stem
from .stringsim import char_ngrams, edit_similarity, jaccard

CHANNELS = ("name", "alias", "definition", "pooled")
METRICS = (
    "token_jaccard",
    "stem_jaccard",
    "char4_jaccard",
    "char5_jaccard",
    "exact_equal",
    "root_equal",
    "prefix_contain",
    "edit_similarity",
)
FEATURE_NAMES = tuple(f"{c}_{m}" for c in CHANNELS for m in METRICS)
N_FEATURES = len(FEATURE_NAMES)


def _channel_metrics(s: str, t: str) -> list[float]:
    """Eight metrics over one pair of channel strings."""
    ls, lt = s.lower(), t.lower()
    tok_s, tok_t = tokenize(s), tokenize(t)
    set_s, set_t = set(tok_s), set(tok_t)
    stem_s = {stem(tok) for tok in set_s}
    stem_t = {stem(tok) for tok in set_t}
    root_equal = bool(tok_s and tok_t and stem(tok_s[-1]) == stem(tok_t[-1]))
    prefix = ls.startswith(lt) or lt.startswith(ls)
    return [
        jaccard(set_s, set_t),
        jaccard(stem_s, stem_t),
        jaccard(char_ngrams(s, 4), char_ngrams(t, 4)),
        jaccard(char_ngrams(s, 5), char_ngrams(t, 5)),
        float(ls == lt),
        float(root_equal),
        float(prefix),
        edit_similarity(ls, lt),
    ]


def _definition_metrics(d_s: str | None, d_t: str | None) -> list[float]:
    """Definition channel with the missing-attribute rules applied."""
    if d_s is None and d_t is None:
        return [0.0] * len(METRICS)
    values = _channel_metrics(d_s or "", d_t or "")
    if d_s is None or d_t is None:
        # One side missing: Jaccard/edit metrics degrade naturally through
        # the empty string, but the booleans are forced to 0.
        values[4] = 0.0
        values[5] = 0.0
        values[6] = 0.0
    return values


def _best_alias_pair(e_s: Entity, e_t: Entity) -> tuple[str, str]:
    """Alias pair (name included) maximizing token Jaccard.

    Ties prefer the lexicographically smallest unordered string pair, which
    keeps the choice symmetric in the two entities.
    """
    cands_s = [e_s.name, *e_s.aliases]
    cands_t = [e_t.name, *e_t.aliases]
    toks_s = [set(tokenize(a)) for a in cands_s]
    toks_t = [set(tokenize(a)) for a in cands_t]
    best = None
    best_key = None
    for a, ta in zip(cands_s, toks_s):
        la = a.lower()
        for b, tb in zip(cands_t, toks_t):
            lb = b.lower()
            lo, hi = (la, lb) if la <= lb else (lb, la)
            key = (-jaccard(ta, tb), lo, hi)
            if best_key is None or key < best_key:
                best_key = key
                best = (a, b)
    return best


def _pooled_string(entity: Entity) -> str:
    tokens = set(tokenize(entity.name))
    for alias in entity.aliases:
        tokens.update(tokenize(alias))
    return " ".join(sorted(tokens))


def compute_features(e_s: Entity, e_t: Entity) -> np.ndarray:
    """32-dim feature vector for an entity pair, channel-major layout."""
    alias_s, alias_t = _best_alias_pair(e_s, e_t)
    values = (
        _channel_metrics(e_s.name, e_t.name)
        + _channel_metrics(alias_s, alias_t)
        + _definition_metrics(e_s.definition, e_t.definition)
        + _channel_metrics(_pooled_string(e_s), _pooled_string(e_t))
    )
    return np.asarray(values, dtype=np.float64)


class PairFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transformer from entity pairs to the 32-feature matrix."""

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        out = np.empty((len(X), N_FEATURES), dtype=np.float64)
        for i, (e_s, e_t) in enumerate(X):
            out[i] = compute_features(e_s, e_t)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(FEATURE_NAMES, dtype=object)
