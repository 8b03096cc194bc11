"""Siamese neural pair scorer.

Each entity is embedded as [name; selected alias; definition; contexts]
(800 dims). Source and target embeddings pass through shared feedforward
layers (800 -> 256 -> 128, ReLU); their outputs concatenate with the 32
engineered features into a combine layer (288 -> 64 -> 1) ending in a
sigmoid match probability. Training minimizes binary cross entropy with
Adam. Missing attributes encode as zero vectors; an entity without
aliases reuses its name as the sole alias.
"""

from __future__ import annotations

import json
import math
import zipfile

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import autodiff as ad
from .autodiff import Tensor
from .blocking import tokenize
from .encoder import (
    DROPOUT_P,
    VECTOR_DIM,
    build_char_vocab,
    encode_sequences,
    init_params,
    select_alias_pair,
)
from .errors import ValidationError
from .features import N_FEATURES, PairFeaturizer
from .kb import MAX_CONTEXTS, Entity

BCE_EPS = 1e-7
ENTITY_DIM = 4 * VECTOR_DIM
MODEL_FORMAT = "ontomatch-nn"
MODEL_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def entity_token_views(entity: Entity):
    """Tokenized attribute views with the missing-attribute fallbacks.

    Returns (name_tokens, alias_token_lists, def_tokens_or_None,
    context_token_lists). Aliases that tokenize to nothing are dropped;
    when none remain the name tokens stand in as the sole alias.
    """
    name_tokens = tokenize(entity.name)
    if not name_tokens:
        raise ValidationError(f"entity {entity.id!r}: name has no tokens")
    alias_lists = [t for t in (tokenize(a) for a in entity.aliases) if t]
    if not alias_lists:
        alias_lists = [name_tokens]
    def_tokens = tokenize(entity.definition) if entity.definition else None
    if not def_tokens:
        def_tokens = None
    ctx_lists = [
        t for t in (tokenize(c) for c in entity.contexts[:MAX_CONTEXTS]) if t
    ]
    return name_tokens, alias_lists, def_tokens, ctx_lists


def bce_loss(p: float, label: int) -> float:
    """Binary cross entropy of one probability, clamped to [eps, 1-eps]."""
    p = min(max(p, BCE_EPS), 1.0 - BCE_EPS)
    return -(label * math.log(p) + (1 - label) * math.log(1.0 - p))


def bce_loss_batch(p: Tensor, labels: np.ndarray) -> Tensor:
    """Mean clamped BCE over a batch of probabilities."""
    y = labels.astype(p.data.dtype)
    pc = ad.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    pos = ad.mul(ad.log(pc), -y)
    neg = ad.mul(ad.log(ad.add(1.0, ad.mul(pc, -1.0))), y - 1.0)
    return ad.mean(ad.add(pos, neg))


def feedforward_subnet(
    v: Tensor,
    params: dict[str, Tensor],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    dropout_p: float = DROPOUT_P,
) -> Tensor:
    """Shared two-layer ReLU subnetwork applied to entity embeddings.

    The single dropout site sits after the first layer; the comparison
    layers above it stay noise-free so the engineered feature inputs keep
    their weight.
    """
    h = ad.relu(ad.add(ad.matmul(v, params["ff1_w"]), params["ff1_b"]))
    if train_mode and dropout_p > 0.0:
        h = ad.dropout(h, dropout_p, rng)
    return ad.relu(ad.add(ad.matmul(h, params["ff2_w"]), params["ff2_b"]))


def score_pair_vectors(
    v_s: Tensor,
    v_t: Tensor,
    features: np.ndarray,
    params: dict[str, Tensor],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    dropout_p: float = DROPOUT_P,
) -> Tensor:
    """Match probabilities for batches of entity embedding pairs.

    ``v_s``/``v_t`` are (B, 800); ``features`` is (B, 32). Returns (B,)
    probabilities in (0, 1).
    """
    if v_s.data.ndim == 1:
        v_s = ad.reshape(v_s, (1, -1))
        v_t = ad.reshape(v_t, (1, -1))
        features = np.asarray(features).reshape(1, -1)
    if v_s.data.shape[1] != params["ff1_w"].data.shape[0]:
        raise ValidationError(
            f"entity vector dim {v_s.data.shape[1]} != {params['ff1_w'].data.shape[0]}"
        )
    if features.shape[1] != params["comb_w"].data.shape[0] - 2 * params["ff2_w"].data.shape[1]:
        raise ValidationError(f"feature dim {features.shape[1]} unexpected")
    h_s = feedforward_subnet(v_s, params, train_mode, rng, dropout_p)
    h_t = feedforward_subnet(v_t, params, train_mode, rng, dropout_p)
    combined = ad.concat([h_s, h_t, features.astype(v_s.data.dtype)], axis=1)
    c = ad.relu(ad.add(ad.matmul(combined, params["comb_w"]), params["comb_b"]))
    z = ad.add(ad.matmul(c, params["out_w"]), params["out_b"])
    return ad.reshape(ad.sigmoid(z), (z.data.shape[0],))


def embed_entity_pair(
    e_s: Entity,
    e_t: Entity,
    params: dict[str, Tensor],
    word_vocab: dict[str, int],
    char_vocab: dict[str, int],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """Reference single-pair embedding path (the batch path must agree)."""
    views = [entity_token_views(e_s), entity_token_views(e_t)]
    vectors = []
    alias_mats = []
    for name_tokens, alias_lists, def_tokens, ctx_lists in views:
        name_vec = encode_sequences(
            [name_tokens], params, word_vocab, char_vocab, "name", train_mode, rng
        )
        alias_mat = encode_sequences(
            alias_lists, params, word_vocab, char_vocab, "name", train_mode, rng
        )
        alias_mats.append(alias_mat)
        dtype = params["word_embed"].data.dtype
        if def_tokens is not None:
            def_vec = encode_sequences(
                [def_tokens], params, word_vocab, None, "text", train_mode, rng
            )
        else:
            def_vec = Tensor(np.zeros((1, VECTOR_DIM), dtype=dtype))
        if ctx_lists:
            ctx_all = encode_sequences(
                ctx_lists, params, word_vocab, None, "text", train_mode, rng
            )
            ctx_vec = ad.reshape(ad.mean(ctx_all, axis=0), (1, VECTOR_DIM))
        else:
            ctx_vec = Tensor(np.zeros((1, VECTOR_DIM), dtype=dtype))
        vectors.append([name_vec, None, def_vec, ctx_vec])
    i_star, j_star = select_alias_pair(alias_mats[0].data, alias_mats[1].data)
    vectors[0][1] = ad.take(alias_mats[0], np.array([i_star]))
    vectors[1][1] = ad.take(alias_mats[1], np.array([j_star]))
    v_s = ad.reshape(ad.concat(vectors[0], axis=1), (ENTITY_DIM,))
    v_t = ad.reshape(ad.concat(vectors[1], axis=1), (ENTITY_DIM,))
    return v_s, v_t


class _Adam:
    """Adam over the parameter dict; ``frozen`` names are never updated.

    The pretrained word vectors stay frozen (only the unk vector learns):
    with desk-scale labeled sets, fine-tuning them destroys the synonym
    geometry the scorer relies on for swapped-surface pairs.
    """

    def __init__(self, names, frozen: tuple[str, ...] = ("word_embed",)):
        self.m = {n: None for n in names}
        self.v = {n: None for n in names}
        self.frozen = frozen
        self.t = 0

    def step(self, params: dict[str, Tensor], lr: float) -> None:
        self.t += 1
        b1, b2 = ADAM_BETA1, ADAM_BETA2
        for name, tensor in params.items():
            g = tensor.grad
            if g is None or name in self.frozen:
                continue
            if self.m[name] is None:
                self.m[name] = np.zeros_like(tensor.data)
                self.v[name] = np.zeros_like(tensor.data)
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            tensor.data -= (lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)).astype(
                tensor.data.dtype
            )


def _classification_f1(labels: np.ndarray, probs: np.ndarray, threshold: float = 0.5):
    predicted = probs >= threshold
    tp = int(np.sum(predicted & (labels == 1)))
    precision = tp / predicted.sum() if predicted.sum() else 0.0
    recall = tp / (labels == 1).sum() if (labels == 1).sum() else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


class NeuralMatcher(BaseEstimator, ClassifierMixin):
    """Siamese scorer with a scikit-learn style fit/predict_proba surface.

    ``X`` is a sequence of (source Entity, target Entity) pairs; ``y`` holds
    0/1 labels. Pass ``X_dev``/``y_dev`` to enable early stopping on dev F1
    at threshold 0.5.
    """

    def __init__(
        self,
        embeddings=None,
        learning_rate: float = 1e-3,
        batch_size: int = 32,
        max_epochs: int = 30,
        patience: int = 5,
        seed: int = 0,
        use_features: bool = True,
        dropout: float = DROPOUT_P,
    ):
        self.embeddings = embeddings
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.use_features = use_features
        self.dropout = dropout

    # -- forward machinery -------------------------------------------------

    def _pair_features(self, X) -> np.ndarray:
        if not self.use_features:
            return np.zeros((len(X), N_FEATURES), dtype=np.float32)
        return PairFeaturizer().transform(X).astype(np.float32)

    def _forward_pairs(
        self,
        pairs,
        features: np.ndarray,
        params: dict[str, Tensor],
        train_mode: bool,
        rng: np.random.Generator | None,
    ) -> Tensor:
        """Batched probability computation over entity pairs.

        Unique entities are encoded once; per-pair embeddings are gathered
        from the shared encoder outputs so gradients fan out correctly.
        """
        uniq: list[Entity] = []
        index_of: dict[int, int] = {}
        for e_s, e_t in pairs:
            for entity in (e_s, e_t):
                if id(entity) not in index_of:
                    index_of[id(entity)] = len(uniq)
                    uniq.append(entity)
        views = [entity_token_views(e) for e in uniq]

        name_seqs: list[list[str]] = []
        name_row = np.empty(len(uniq), dtype=np.intp)
        alias_rows: list[np.ndarray] = []
        for u, (name_tokens, alias_lists, _, _) in enumerate(views):
            name_row[u] = len(name_seqs)
            name_seqs.append(name_tokens)
            rows = np.arange(len(name_seqs), len(name_seqs) + len(alias_lists))
            alias_rows.append(rows)
            name_seqs.extend(alias_lists)
        name_out = encode_sequences(
            name_seqs, params, self._word_vocab, self._char_vocab, "name",
            train_mode, rng, self.dropout,
        )

        text_seqs: list[list[str]] = []
        def_row = np.full(len(uniq), -1, dtype=np.intp)
        ctx_rows: list[np.ndarray] = []
        for u, (_, _, def_tokens, ctx_lists) in enumerate(views):
            if def_tokens is not None:
                def_row[u] = len(text_seqs)
                text_seqs.append(def_tokens)
            rows = np.arange(len(text_seqs), len(text_seqs) + len(ctx_lists))
            ctx_rows.append(rows)
            text_seqs.extend(ctx_lists)
        dtype = params["word_embed"].data.dtype
        if text_seqs:
            text_out = encode_sequences(
                text_seqs, params, self._word_vocab, None, "text",
                train_mode, rng, self.dropout,
            )
            text_ext = ad.concat(
                [text_out, Tensor(np.zeros((1, VECTOR_DIM), dtype=dtype))], axis=0
            )
        else:
            text_ext = Tensor(np.zeros((1, VECTOR_DIM), dtype=dtype))
        zero_row = text_ext.data.shape[0] - 1
        def_row[def_row < 0] = zero_row

        # Context vectors: one averaging matmul over the text encodings.
        ctx_weights = np.zeros((len(uniq), text_ext.data.shape[0]), dtype=dtype)
        for u, rows in enumerate(ctx_rows):
            if len(rows):
                ctx_weights[u, rows] = 1.0 / len(rows)
        ctx_mat = ad.matmul(ctx_weights, text_ext)
        def_mat = ad.take(text_ext, def_row)

        # Pair-dependent alias choice, computed on raw encoder outputs.
        alias_sel_s = np.empty(len(pairs), dtype=np.intp)
        alias_sel_t = np.empty(len(pairs), dtype=np.intp)
        s_idx = np.empty(len(pairs), dtype=np.intp)
        t_idx = np.empty(len(pairs), dtype=np.intp)
        raw = name_out.data
        for b, (e_s, e_t) in enumerate(pairs):
            u_s, u_t = index_of[id(e_s)], index_of[id(e_t)]
            s_idx[b], t_idx[b] = u_s, u_t
            rows_s, rows_t = alias_rows[u_s], alias_rows[u_t]
            i_star, j_star = select_alias_pair(raw[rows_s], raw[rows_t])
            alias_sel_s[b] = rows_s[i_star]
            alias_sel_t[b] = rows_t[j_star]

        def entity_matrix(which_idx, alias_sel):
            return ad.concat(
                [
                    ad.take(name_out, name_row[which_idx]),
                    ad.take(name_out, alias_sel),
                    ad.take(def_mat, which_idx),
                    ad.take(ctx_mat, which_idx),
                ],
                axis=1,
            )

        v_s = entity_matrix(s_idx, alias_sel_s)
        v_t = entity_matrix(t_idx, alias_sel_t)
        return score_pair_vectors(
            v_s, v_t, features, params, train_mode, rng, self.dropout
        )

    # -- training ----------------------------------------------------------

    def fit(self, X, y, X_dev=None, y_dev=None):
        if self.embeddings is None:
            raise ValidationError("NeuralMatcher requires an embeddings table")
        if self.embeddings.dim != 100:
            raise ValidationError(
                f"word vectors must be 100-dimensional, got {self.embeddings.dim}"
            )
        X = list(X)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            raise ValidationError("empty training set")
        if len(X) != len(y):
            raise ValidationError("X and y length mismatch")
        if not np.isin(y, (0, 1)).all():
            raise ValidationError("labels must be 0 or 1")
        rng = np.random.default_rng(self.seed)
        char_texts = []
        for e_s, e_t in X:
            for entity in (e_s, e_t):
                char_texts.append(entity.name)
                char_texts.extend(entity.aliases)
        self._char_vocab = build_char_vocab(char_texts)
        self._word_vocab = dict(self.embeddings.vocab)
        self._params = init_params(self.embeddings, self._char_vocab, self.seed)

        features = self._pair_features(X)
        dev_features = None
        if X_dev is not None:
            X_dev = list(X_dev)
            y_dev = np.asarray(y_dev, dtype=np.int64)
            dev_features = self._pair_features(X_dev)

        optimizer = _Adam(self._params.keys())
        best_f1 = -1.0
        best_params = None
        epochs_since_best = 0
        history = []
        for epoch in range(self.max_epochs):
            order = rng.permutation(len(X))
            epoch_loss = 0.0
            for start in range(0, len(order), self.batch_size):
                batch = order[start : start + self.batch_size]
                pairs = [X[i] for i in batch]
                for tensor in self._params.values():
                    tensor.grad = None
                probs = self._forward_pairs(
                    pairs, features[batch], self._params, True, rng
                )
                loss = bce_loss_batch(probs, y[batch])
                loss_value = float(loss.data)
                if not np.isfinite(loss_value):
                    raise RuntimeError(
                        f"non-finite loss in epoch {epoch}, batch {start // self.batch_size}"
                    )
                epoch_loss += loss_value * len(batch)
                loss.backward()
                optimizer.step(self._params, self.learning_rate)
            record = {"epoch": epoch, "train_loss": epoch_loss / len(X)}
            stop = False
            if X_dev is not None and len(X_dev):
                dev_probs = self._predict_with_params(X_dev, dev_features, self._params)
                dev_f1 = _classification_f1(y_dev, dev_probs)
                record["dev_f1"] = dev_f1
                if dev_f1 > best_f1:
                    best_f1 = dev_f1
                    best_params = {
                        name: t.data.copy() for name, t in self._params.items()
                    }
                    epochs_since_best = 0
                else:
                    epochs_since_best += 1
                    stop = epochs_since_best >= self.patience
            history.append(record)
            if stop:
                break
        if best_params is not None:
            self._params = {name: Tensor(arr) for name, arr in best_params.items()}
        self.history_ = history
        self.best_dev_f1_ = best_f1 if best_f1 >= 0 else None
        self.classes_ = np.array([0, 1])
        self.is_fitted_ = True
        return self

    def _encode_entity_cache(self, entities, params, chunk: int = 512) -> dict:
        """Encode each unique entity once; returns id(entity) -> blocks.

        Blocks are raw arrays (name vector, alias matrix, definition vector,
        context vector); inference reassembles pair embeddings from them.
        """
        views = [entity_token_views(e) for e in entities]
        dtype = params["word_embed"].data.dtype
        zero = np.zeros(VECTOR_DIM, dtype=dtype)

        name_seqs: list[list[str]] = []
        spans = []
        for name_tokens, alias_lists, _, _ in views:
            start = len(name_seqs)
            name_seqs.append(name_tokens)
            name_seqs.extend(alias_lists)
            spans.append((start, len(name_seqs)))
        name_parts = []
        u = 0
        while u < len(spans):
            # Chunk boundaries take whole entity spans so rows never split.
            lo = spans[u][0]
            v = u
            while v < len(spans) and spans[v][1] - lo < chunk:
                v += 1
            v = max(v, u + 1)
            name_parts.append(
                encode_sequences(
                    name_seqs[lo : spans[v - 1][1]], params, self._word_vocab,
                    self._char_vocab, "name", False, None,
                ).data
            )
            u = v
        name_out = np.concatenate(name_parts, axis=0)

        text_seqs: list[list[str]] = []
        def_row = np.full(len(entities), -1, dtype=np.intp)
        ctx_spans = []
        for u, (_, _, def_tokens, ctx_lists) in enumerate(views):
            if def_tokens is not None:
                def_row[u] = len(text_seqs)
                text_seqs.append(def_tokens)
            lo = len(text_seqs)
            text_seqs.extend(ctx_lists)
            ctx_spans.append((lo, len(text_seqs)))
        if text_seqs:
            text_parts = []
            for start in range(0, len(text_seqs), chunk):
                text_parts.append(
                    encode_sequences(
                        text_seqs[start : start + chunk], params,
                        self._word_vocab, None, "text", False, None,
                    ).data
                )
            text_out = np.concatenate(text_parts, axis=0)
        else:
            text_out = np.zeros((0, VECTOR_DIM), dtype=dtype)

        cache = {}
        for u, entity in enumerate(entities):
            lo, hi = spans[u]
            name_vec = name_out[lo]
            alias_mat = name_out[lo + 1 : hi]
            def_vec = text_out[def_row[u]] if def_row[u] >= 0 else zero
            clo, chi = ctx_spans[u]
            ctx_vec = text_out[clo:chi].mean(axis=0) if chi > clo else zero
            cache[id(entity)] = (name_vec, alias_mat, def_vec, ctx_vec)
        return cache

    def _predict_with_params(self, X, features, params) -> np.ndarray:
        uniq: list[Entity] = []
        seen: set[int] = set()
        for e_s, e_t in X:
            for entity in (e_s, e_t):
                if id(entity) not in seen:
                    seen.add(id(entity))
                    uniq.append(entity)
        with ad.no_grad():
            cache = self._encode_entity_cache(uniq, params)
            dtype = params["word_embed"].data.dtype
            probs = np.empty(len(X), dtype=np.float64)
            chunk = 2048
            for start in range(0, len(X), chunk):
                part = X[start : start + chunk]
                v_s = np.empty((len(part), ENTITY_DIM), dtype=dtype)
                v_t = np.empty((len(part), ENTITY_DIM), dtype=dtype)
                for row, (e_s, e_t) in enumerate(part):
                    ns, als, ds, cs = cache[id(e_s)]
                    nt, alt, dt, ct = cache[id(e_t)]
                    i_star, j_star = select_alias_pair(als, alt)
                    v_s[row] = np.concatenate([ns, als[i_star], ds, cs])
                    v_t[row] = np.concatenate([nt, alt[j_star], dt, ct])
                out = score_pair_vectors(
                    Tensor(v_s), Tensor(v_t), features[start : start + chunk],
                    params, False, None,
                )
                probs[start : start + len(part)] = out.data
        return np.clip(probs, BCE_EPS, 1.0 - BCE_EPS)

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = list(X)
        if not X:
            return np.zeros((0, 2))
        features = self._pair_features(X)
        p = self._predict_with_params(X, features, self._params)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)

    def _check_fitted(self):
        if not getattr(self, "is_fitted_", False):
            raise ValidationError("NeuralMatcher is not fitted")

    # -- gradient verification ----------------------------------------------

    def _example_loss(self, params, example) -> Tensor:
        e_s, e_t, features, label = example
        probs = self._forward_pairs([(e_s, e_t)], features.reshape(1, -1), params, False, None)
        return bce_loss_batch(probs, np.array([label]))

    def analytic_gradients(self, params, example) -> dict[str, np.ndarray]:
        for tensor in params.values():
            tensor.grad = None
        loss = self._example_loss(params, example)
        loss.backward()
        return {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in params.items()
        }

    def grad_check(
        self,
        example,
        eps: float = 1e-4,
        n_coords: int = 20,
        rng: np.random.Generator | None = None,
        grad_fn=None,
    ) -> float:
        """Max relative error between analytic and central-difference
        gradients over a random subsample of coordinates per array.

        Runs in float64 with dropout off. ``grad_fn`` overrides the
        analytic gradient computation (used by the corruption test).
        """
        self._check_fitted()
        rng = rng or np.random.default_rng(0)
        params64 = {
            name: Tensor(t.data.astype(np.float64)) for name, t in self._params.items()
        }
        grads = (grad_fn or self.analytic_gradients)(params64, example)
        worst = 0.0
        with ad.no_grad():
            for name, tensor in params64.items():
                flat = tensor.data.reshape(-1)
                size = flat.shape[0]
                coords = rng.choice(size, size=min(n_coords, size), replace=False)
                g_flat = grads[name].reshape(-1)
                for coord in coords:
                    orig = flat[coord]
                    flat[coord] = orig + eps
                    up = float(self._example_loss(params64, example).data)
                    flat[coord] = orig - eps
                    down = float(self._example_loss(params64, example).data)
                    flat[coord] = orig
                    numeric = (up - down) / (2 * eps)
                    analytic = g_flat[coord]
                    denom = max(1e-8, abs(analytic) + abs(numeric))
                    worst = max(worst, abs(analytic - numeric) / denom)
        return worst

    # -- serialization -------------------------------------------------------

    def save(self, path) -> None:
        """Write the fitted model as a zip of manifest + raw float32 arrays."""
        self._check_fitted()
        word_order = sorted(self._word_vocab, key=self._word_vocab.get)
        char_order = sorted(self._char_vocab, key=self._char_vocab.get)
        manifest = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": {
                "use_features": self.use_features,
                "dropout": self.dropout,
            },
            "word_vocab": word_order,
            "char_vocab": char_order,
            "arrays": [
                {
                    "name": name,
                    "shape": list(tensor.data.shape),
                    "dtype": "float32",
                }
                for name, tensor in sorted(self._params.items())
            ],
        }
        def entry(name: str) -> zipfile.ZipInfo:
            # Fixed timestamp keeps identical models byte-identical on disk.
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            return info

        with zipfile.ZipFile(path, "w") as archive:
            archive.writestr(entry("manifest.json"), json.dumps(manifest, ensure_ascii=False))
            for name, tensor in sorted(self._params.items()):
                data = np.ascontiguousarray(tensor.data, dtype="<f4")
                archive.writestr(entry(f"arrays/{name}.bin"), data.tobytes())

    @classmethod
    def load(cls, path) -> "NeuralMatcher":
        with zipfile.ZipFile(path) as archive:
            manifest = json.loads(archive.read("manifest.json"))
            if manifest.get("format") != MODEL_FORMAT:
                raise ValidationError("not a neural matcher archive")
            if manifest.get("version") != MODEL_VERSION:
                raise ValidationError(f"unsupported model version {manifest.get('version')}")
            params = {}
            for spec in manifest["arrays"]:
                raw = archive.read(f"arrays/{spec['name']}.bin")
                shape = tuple(spec["shape"])
                expected = int(np.prod(shape)) * 4
                if len(raw) != expected:
                    raise ValidationError(
                        f"array {spec['name']}: {len(raw)} bytes, expected {expected}"
                    )
                arr = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
                params[spec["name"]] = Tensor(arr)
        model = cls(
            use_features=manifest["config"]["use_features"],
            dropout=manifest["config"]["dropout"],
        )
        model._word_vocab = {t: i for i, t in enumerate(manifest["word_vocab"])}
        model._char_vocab = {c: i + 2 for i, c in enumerate(manifest["char_vocab"])}
        model._params = params
        model._validate_shapes()
        model.classes_ = np.array([0, 1])
        model.is_fitted_ = True
        return model

    def _validate_shapes(self) -> None:
        word_dim = self._params["word_embed"].data.shape[1]
        name_in = word_dim + 2 * 50
        expected = {
            "word_embed": (len(self._word_vocab), word_dim),
            "unk_vec": (word_dim,),
            "char_embed": (len(self._char_vocab) + 2, 25),
            "ff1_w": (ENTITY_DIM, 256),
            "ff2_w": (256, 128),
            "comb_w": (288, 64),
            "out_w": (64, 1),
        }
        for prefix, in_dim in (("name", name_in), ("text", word_dim)):
            for direction in ("fwd", "bwd"):
                expected[f"{prefix}_{direction}_wx"] = (in_dim, 400)
                expected[f"{prefix}_{direction}_wh"] = (100, 400)
        for name, shape in expected.items():
            if name not in self._params:
                raise ValidationError(f"model archive missing array {name!r}")
            got = self._params[name].data.shape
            if got != shape:
                raise ValidationError(f"array {name!r}: shape {got}, expected {shape}")
