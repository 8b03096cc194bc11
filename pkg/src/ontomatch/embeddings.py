"""Pretrained word vector table and a small skip-gram trainer.

Embedding file format: UTF-8 text, one line per word, the token followed
by its space-separated vector components.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

EMBEDDING_DIM = 100


class EmbeddingTable:
    """token -> row lookup over a dense vector matrix."""

    def __init__(self, vocab: dict[str, int], vectors: np.ndarray):
        if vectors.ndim != 2 or len(vocab) != vectors.shape[0]:
            raise ValidationError("vocab size and vector rows disagree")
        if not np.all(np.isfinite(vectors)):
            raise ValidationError("embedding vectors must be finite")
        self.vocab = vocab
        self.vectors = np.ascontiguousarray(vectors, dtype=np.float32)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def row(self, token: str) -> int:
        return self.vocab[token]

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        vocab: dict[str, int] = {}
        rows: list[np.ndarray] = []
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    raise ValidationError(f"embedding line {lineno}: too few fields")
                token = parts[0]
                try:
                    vec = np.asarray([float(v) for v in parts[1:]], dtype=np.float32)
                except ValueError as exc:
                    raise ValidationError(f"embedding line {lineno}: bad float") from exc
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise ValidationError(
                        f"embedding line {lineno}: dimension {vec.shape[0]} != {dim}"
                    )
                if token in vocab:
                    raise ValidationError(f"embedding line {lineno}: duplicate token")
                vocab[token] = len(rows)
                rows.append(vec)
        if not rows:
            raise ValidationError("embedding file is empty")
        return cls(vocab, np.vstack(rows))

    def save(self, path) -> None:
        order = sorted(self.vocab, key=self.vocab.get)
        with open(path, "w", encoding="utf-8") as fh:
            for token in order:
                values = " ".join(f"{v:.6f}" for v in self.vectors[self.vocab[token]])
                fh.write(f"{token} {values}\n")


def train_skipgram(
    sentences: list[list[str]],
    dim: int = EMBEDDING_DIM,
    window: int = 3,
    negatives: int = 5,
    epochs: int = 3,
    learning_rate: float = 0.05,
    min_count: int = 1,
    seed: int = 0,
) -> EmbeddingTable:
    """Skip-gram with negative sampling over a tokenized corpus.

    A convenience for producing desk-scale embedding files; real runs are
    expected to bring their own pretrained vectors.
    """
    counts: dict[str, int] = {}
    for sentence in sentences:
        for token in sentence:
            counts[token] = counts.get(token, 0) + 1
    vocab = {t: i for i, t in enumerate(sorted(t for t, c in counts.items() if c >= min_count))}
    if not vocab:
        raise ValidationError("no tokens meet min_count")
    rng = np.random.default_rng(seed)
    n = len(vocab)
    w_in = (rng.random((n, dim), dtype=np.float32) - 0.5) / dim
    w_out = np.zeros((n, dim), dtype=np.float32)

    freq = np.zeros(n)
    for token, count in counts.items():
        if token in vocab:
            freq[vocab[token]] = count
    noise = freq**0.75
    noise /= noise.sum()

    centers, contexts = [], []
    for sentence in sentences:
        ids = [vocab[t] for t in sentence if t in vocab]
        for i, center in enumerate(ids):
            lo = max(0, i - window)
            hi = min(len(ids), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(center)
                    contexts.append(ids[j])
    if not centers:
        return EmbeddingTable(vocab, w_in)
    centers = np.asarray(centers)
    contexts = np.asarray(contexts)

    batch_size = 256
    for epoch in range(epochs):
        lr = learning_rate * (1.0 - epoch / max(epochs, 1)) + 1e-4
        order = rng.permutation(len(centers))
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            c = centers[batch]
            pos = contexts[batch]
            neg = rng.choice(n, size=(len(batch), negatives), p=noise)
            v_c = w_in[c]  # (B, D)
            # Positive pair plus sampled negatives share one update form.
            targets = np.concatenate([pos[:, None], neg], axis=1)  # (B, 1+k)
            labels = np.zeros((len(batch), 1 + negatives), dtype=np.float32)
            labels[:, 0] = 1.0
            v_t = w_out[targets]  # (B, 1+k, D)
            logits = np.clip(np.einsum("bd,bkd->bk", v_c, v_t), -12.0, 12.0)
            scores = 1.0 / (1.0 + np.exp(-logits))
            err = (scores - labels) * lr  # (B, 1+k)
            grad_c = np.clip(np.einsum("bk,bkd->bd", err, v_t), -0.5, 0.5)
            grad_t = np.clip(err[:, :, None] * v_c[:, None, :], -0.5, 0.5)
            # Batched rows see stale scores; the clip keeps hot vocabulary
            # rows from overshooting when they repeat within a batch.
            np.add.at(w_out, targets, -grad_t)
            np.add.at(w_in, c, -grad_c)
    # Remove the shared component that SGNS tends to accumulate; without
    # this, every vector leans on one direction and cosines saturate.
    w_in -= w_in.mean(axis=0, keepdims=True)
    return EmbeddingTable(vocab, w_in)
