"""Attribute encoders for the siamese pair scorer.

Names and aliases: pretrained word vectors concatenated with a character
CNN (50 filters of widths 4 and 5, max-pooled over time), fed to a
bidirectional LSTM; the final forward and backward states concatenate to a
200-dim vector. Definitions and contexts: word vectors into a second
bidirectional LSTM with the same output convention. Dropout (when
training) is applied to the token vectors entering each LSTM.

All batch functions mask padding so a sequence encodes identically
regardless of what else shares its batch.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .embeddings import EmbeddingTable
from .errors import ValidationError

WORD_DIM = 100
CHAR_DIM = 25
N_FILTERS = 50
FILTER_WIDTHS = (4, 5)
HIDDEN = 100
VECTOR_DIM = 2 * HIDDEN

PAD_CHAR = 0
UNK_CHAR = 1
MIN_WORD_CHARS = max(FILTER_WIDTHS)

DROPOUT_P = 0.2


def build_char_vocab(texts) -> dict[str, int]:
    """Codepoint vocabulary from an iterable of strings; 0/1 are pad/unk."""
    chars = sorted({ch for text in texts for ch in text})
    return {ch: i + 2 for i, ch in enumerate(chars)}


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(np.float32)


def _lstm_bias(hidden: int) -> np.ndarray:
    b = np.zeros(4 * hidden, dtype=np.float32)
    b[hidden : 2 * hidden] = 1.0  # forget-gate bias
    return b


def init_params(
    embeddings: EmbeddingTable, char_vocab: dict[str, int], seed: int
) -> dict[str, Tensor]:
    """Fresh parameter set; word vectors copy the pretrained table."""
    rng = np.random.default_rng(seed)
    word_dim = embeddings.dim
    name_in = word_dim + 2 * N_FILTERS
    params: dict[str, np.ndarray] = {
        "word_embed": embeddings.vectors.copy(),
        "unk_vec": rng.uniform(-0.05, 0.05, size=word_dim).astype(np.float32),
        "char_embed": rng.uniform(
            -0.05, 0.05, size=(len(char_vocab) + 2, CHAR_DIM)
        ).astype(np.float32),
    }
    for width in FILTER_WIDTHS:
        params[f"conv{width}_w"] = _xavier(rng, width * CHAR_DIM, N_FILTERS)
        params[f"conv{width}_b"] = np.zeros(N_FILTERS, dtype=np.float32)
    for prefix, in_dim in (("name", name_in), ("text", word_dim)):
        for direction in ("fwd", "bwd"):
            params[f"{prefix}_{direction}_wx"] = _xavier(rng, in_dim, 4 * HIDDEN)
            params[f"{prefix}_{direction}_wh"] = _xavier(rng, HIDDEN, 4 * HIDDEN)
            params[f"{prefix}_{direction}_b"] = _lstm_bias(HIDDEN)
    entity_dim = 4 * VECTOR_DIM
    params["ff1_w"] = _xavier(rng, entity_dim, 256)
    params["ff1_b"] = np.zeros(256, dtype=np.float32)
    params["ff2_w"] = _xavier(rng, 256, 128)
    params["ff2_b"] = np.zeros(128, dtype=np.float32)
    params["comb_w"] = _xavier(rng, 128 + 128 + 32, 64)
    params["comb_b"] = np.zeros(64, dtype=np.float32)
    params["out_w"] = _xavier(rng, 64, 1)
    params["out_b"] = np.zeros(1, dtype=np.float32)
    return {name: Tensor(arr) for name, arr in params.items()}


def char_cnn_batch(
    words: list[str], params: dict[str, Tensor], char_vocab: dict[str, int]
) -> Tensor:
    """Character CNN token embeddings, one row per word.

    Each word is right-padded to at least the widest filter; windows that
    would extend past a word's own padded length are masked out of the max
    pool, so results do not depend on batch composition.
    """
    n = len(words)
    canon = np.array([max(len(w), MIN_WORD_CHARS) for w in words])
    length = int(canon.max())
    ids = np.full((n, length), PAD_CHAR, dtype=np.intp)
    for row, word in enumerate(words):
        for col, ch in enumerate(word):
            ids[row, col] = char_vocab.get(ch, UNK_CHAR)
    emb = ad.take(params["char_embed"], ids)  # (n, L, CHAR_DIM)
    dtype = params["char_embed"].data.dtype
    pooled = []
    for width in FILTER_WIDTHS:
        n_windows = length - width + 1
        windows = [
            ad.reshape(
                ad.take(emb, (slice(None), slice(t, t + width))),
                (n, width * CHAR_DIM),
            )
            for t in range(n_windows)
        ]
        stacked = ad.stack(windows, axis=0)  # (W, n, width*CHAR_DIM)
        pre = ad.tanh(
            ad.add(ad.matmul(stacked, params[f"conv{width}_w"]), params[f"conv{width}_b"])
        )
        starts = np.arange(n_windows)[:, None]
        valid = (starts + width <= canon[None, :]).astype(dtype)[:, :, None]
        masked = ad.add(ad.mul(pre, valid), (valid - 1.0) * np.asarray(1e30, dtype))
        pooled.append(ad.max_(masked, axis=0))  # (n, N_FILTERS)
    return ad.concat(pooled, axis=1)


def _word_vectors(
    seqs: list[list[str]],
    params: dict[str, Tensor],
    word_vocab: dict[str, int],
) -> tuple[Tensor, np.ndarray]:
    """Padded word-embedding batch (B, T, D) and its validity mask (B, T)."""
    n = len(seqs)
    length = max(len(s) for s in seqs)
    dtype = params["word_embed"].data.dtype
    ids = np.zeros((n, length), dtype=np.intp)
    known = np.zeros((n, length, 1), dtype=dtype)
    mask = np.zeros((n, length), dtype=dtype)
    for row, seq in enumerate(seqs):
        for col, token in enumerate(seq):
            mask[row, col] = 1.0
            idx = word_vocab.get(token)
            if idx is not None:
                ids[row, col] = idx
                known[row, col, 0] = 1.0
    gathered = ad.take(params["word_embed"], ids)
    unk_part = ad.mul(params["unk_vec"], (1.0 - known) * mask[:, :, None])
    x = ad.add(ad.mul(gathered, known * mask[:, :, None]), unk_part)
    return x, mask


def lstm_final_state(
    x: Tensor, mask: np.ndarray, wx: Tensor, wh: Tensor, b: Tensor
) -> Tensor:
    """Final hidden state of a masked LSTM pass over (B, T, D) inputs.

    Masked steps carry the previous state through, so the result for each
    row is the state at its own last valid position.
    """
    n, length, in_dim = x.data.shape
    hidden = wh.data.shape[0]
    dtype = wx.data.dtype
    xw = ad.reshape(ad.matmul(ad.reshape(x, (n * length, in_dim)), wx), (n, length, 4 * hidden))
    h = Tensor(np.zeros((n, hidden), dtype=dtype))
    c = Tensor(np.zeros((n, hidden), dtype=dtype))
    for t in range(length):
        z = ad.add(ad.add(ad.take(xw, (slice(None), t)), ad.matmul(h, wh)), b)
        i_gate = ad.sigmoid(ad.take(z, (slice(None), slice(0, hidden))))
        f_gate = ad.sigmoid(ad.take(z, (slice(None), slice(hidden, 2 * hidden))))
        g_gate = ad.tanh(ad.take(z, (slice(None), slice(2 * hidden, 3 * hidden))))
        o_gate = ad.sigmoid(ad.take(z, (slice(None), slice(3 * hidden, 4 * hidden))))
        c_new = ad.add(ad.mul(f_gate, c), ad.mul(i_gate, g_gate))
        h_new = ad.mul(o_gate, ad.tanh(c_new))
        step = mask[:, t : t + 1]
        h = ad.add(ad.mul(h_new, step), ad.mul(h, 1.0 - step))
        c = ad.add(ad.mul(c_new, step), ad.mul(c, 1.0 - step))
    return h


def _reverse_valid(x: Tensor, lengths: np.ndarray) -> Tensor:
    """Reverse each row's valid prefix, leaving padding in place."""
    n, length, _ = x.data.shape
    idx = np.tile(np.arange(length), (n, 1))
    for row, ln in enumerate(lengths):
        idx[row, :ln] = np.arange(ln - 1, -1, -1)
    return ad.take(x, (np.arange(n)[:, None], idx))


def encode_sequences(
    seqs: list[list[str]],
    params: dict[str, Tensor],
    word_vocab: dict[str, int],
    char_vocab: dict[str, int] | None,
    kind: str,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    dropout_p: float = DROPOUT_P,
) -> Tensor:
    """Encode a batch of token sequences to (B, 2*HIDDEN) vectors.

    ``kind`` selects the encoder: "name" (word + char CNN inputs) or
    "text" (word inputs only).
    """
    if any(len(s) == 0 for s in seqs):
        raise ValidationError("cannot encode an empty token sequence")
    x, mask = _word_vectors(seqs, params, word_vocab)
    n, length = mask.shape
    if kind == "name":
        flat = [seq[col] if col < len(seq) else "" for seq in seqs for col in range(length)]
        chars = char_cnn_batch(flat, params, char_vocab)
        chars = ad.reshape(chars, (n, length, 2 * N_FILTERS))
        chars = ad.mul(chars, mask[:, :, None])
        x = ad.concat([x, chars], axis=2)
    elif kind != "text":
        raise ValueError(f"unknown encoder kind: {kind!r}")
    if train_mode and dropout_p > 0.0:
        x = ad.dropout(x, dropout_p, rng)
    lengths = mask.sum(axis=1).astype(int)
    h_fwd = lstm_final_state(
        x, mask, params[f"{kind}_fwd_wx"], params[f"{kind}_fwd_wh"], params[f"{kind}_fwd_b"]
    )
    h_bwd = lstm_final_state(
        _reverse_valid(x, lengths),
        mask,
        params[f"{kind}_bwd_wx"],
        params[f"{kind}_bwd_wh"],
        params[f"{kind}_bwd_b"],
    )
    return ad.concat([h_fwd, h_bwd], axis=1)


def encode_name(
    tokens: list[str],
    params: dict[str, Tensor],
    word_vocab: dict[str, int],
    char_vocab: dict[str, int],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Name encoder for a single token sequence; returns a 2*HIDDEN vector."""
    batch = encode_sequences([tokens], params, word_vocab, char_vocab, "name", train_mode, rng)
    return ad.reshape(batch, (batch.data.shape[1],))


def encode_text(
    tokens: list[str],
    params: dict[str, Tensor],
    word_vocab: dict[str, int],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Definition/context encoder for a single token sequence."""
    batch = encode_sequences([tokens], params, word_vocab, None, "text", train_mode, rng)
    return ad.reshape(batch, (batch.data.shape[1],))


def encode_contexts(
    contexts: list[list[str]],
    params: dict[str, Tensor],
    word_vocab: dict[str, int],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Mean of per-context text encodings; zero vector when none exist."""
    contexts = [c for c in contexts if c]
    hidden = params["text_fwd_wh"].data.shape[0]
    if not contexts:
        return Tensor(np.zeros(2 * hidden, dtype=params["word_embed"].data.dtype))
    batch = encode_sequences(contexts, params, word_vocab, None, "text", train_mode, rng)
    return ad.mean(batch, axis=0)


def select_alias_pair(alias_vectors_s: np.ndarray, alias_vectors_t: np.ndarray) -> tuple[int, int]:
    """Indices of the source/target alias vectors with minimal Euclidean
    distance; ties resolve to the lexicographically smallest (i, j)."""
    if len(alias_vectors_s) == 0 or len(alias_vectors_t) == 0:
        raise ValidationError("alias vector lists must be non-empty")
    diff = alias_vectors_s[:, None, :] - alias_vectors_t[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    flat = int(np.argmin(d2))
    return flat // d2.shape[1], flat % d2.shape[1]
