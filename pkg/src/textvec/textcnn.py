"""One-dimensional convolutional text classifier over embedded sequences.

The stack is embedding lookup, valid cross-correlation convolution with
ReLU, inverted dropout, non-overlapping max pooling, flatten, dense, and
softmax with cross-entropy. Forward and backward passes are written out
by hand; training is mini-batch gradient descent on the mean loss with a
per-epoch learning-rate decay.

Sequences are padded or truncated at the right end to a fixed length. The
pad id is the vocabulary size and embeds to a zero row that never receives
gradient. Checkpoints are JSON documents listing the layer specs in order
with row-major parameter values; floats are serialized with repr so a
write/read round trip reproduces the exact doubles.

Accuracy log line format: `<epoch> <kappa> <loss> <accuracy>`, one line
per completed epoch, loss and accuracy measured over the whole dataset
with dropout off.
"""

from __future__ import annotations

import json
from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import Vocabulary, tokenize


class LabeledSequence(NamedTuple):
    """Fixed-length padded token ids and a class index."""

    token_ids: tuple
    label: int


class TextCnn:
    """Embedding -> Conv1D(ReLU) -> Dropout -> MaxPool1D -> Flatten ->
    Dense -> SoftmaxOutput, with exact reverse-mode gradients."""

    def __init__(self, embeddings, classes, length, kernel=3, channels=16,
                 pool=2, dropout=0.5, frozen_embeddings=True, seed=1):
        embeddings = np.asarray(embeddings, dtype=float)
        if embeddings.ndim != 2:
            raise ValueError("embeddings must be a (V, d) matrix")
        if classes < 2:
            raise ValueError("need at least two classes")
        if not 0 <= dropout < 1:
            raise ValueError(f"dropout rate must be in [0, 1), got {dropout}")
        if length < kernel:
            raise ValueError(f"sequence length {length} shorter than kernel {kernel}")
        conv_len = length - kernel + 1
        if conv_len < pool:
            raise ValueError(f"conv output length {conv_len} shorter than pool width {pool}")

        V, d = embeddings.shape
        self.vocab_size = V
        self.dim = d
        self.pad_id = V
        self.classes = classes
        self.length = length
        self.kernel = kernel
        self.channels = channels
        self.pool = pool
        self.dropout = dropout
        self.frozen_embeddings = frozen_embeddings
        self.seed = seed
        self.rng = np.random.default_rng(seed)

        self.pooled_len = conv_len // pool
        self.features = self.pooled_len * channels

        # pad row appended last; stays zero because pad never gets gradient
        self.E = np.vstack([embeddings, np.zeros((1, d))])
        self.conv_w = self.rng.normal(0.0, np.sqrt(2.0 / (kernel * d)),
                                      size=(channels, kernel, d))
        self.conv_b = np.zeros(channels)
        self.dense_w = self.rng.normal(0.0, np.sqrt(2.0 / self.features),
                                       size=(self.features, classes))
        self.dense_b = np.zeros(classes)

    # -- forward ----------------------------------------------------------

    def embed(self, ids) -> np.ndarray:
        """Rows of the embedding matrix; the pad id maps to the zero row."""
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() > self.pad_id):
            raise IndexError(
                f"token id outside [0, {self.pad_id}] in classifier input")
        return self.E[ids]

    def forward(self, ids, training=False, dropout_mask=None):
        """Class probabilities for a batch of id rows, plus the cache the
        backward pass needs. A caller may pin dropout_mask (same shape as
        the conv output) to make a training-mode pass repeatable."""
        ids = np.atleast_2d(np.asarray(ids))
        if ids.shape[1] != self.length:
            raise ValueError(
                f"expected sequences of length {self.length}, got {ids.shape[1]}")
        x = self.embed(ids)  # (B, L, d)

        # windows[b, t, i, j] = x[b, t + j, i]
        windows = sliding_window_view(x, self.kernel, axis=1)
        z = np.einsum("btij,oji->bto", windows, self.conv_w) + self.conv_b
        a = np.maximum(z, 0.0)

        if training and self.dropout > 0.0:
            if dropout_mask is None:
                dropout_mask = self.rng.random(a.shape) >= self.dropout
            dropped = a * dropout_mask / (1.0 - self.dropout)
        else:
            dropout_mask = None
            dropped = a

        B, T, c = dropped.shape
        P = self.pooled_len
        segments = dropped[:, :P * self.pool].reshape(B, P, self.pool, c)
        arg = segments.argmax(axis=2)  # first index wins ties
        pooled = np.take_along_axis(segments, arg[:, :, None, :], axis=2)[:, :, 0, :]

        h = pooled.reshape(B, self.features)  # row-major flatten
        logits = h @ self.dense_w + self.dense_b
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)

        cache = {"ids": ids, "x": x, "z": z, "mask": dropout_mask,
                 "arg": arg, "h": h, "probs": probs}
        return probs, cache

    def loss(self, probs, labels) -> float:
        """Mean cross-entropy of a batch of probability rows."""
        labels = np.asarray(labels)
        if labels.min() < 0 or labels.max() >= self.classes:
            raise ValueError(f"label outside [0, {self.classes})")
        picked = probs[np.arange(len(labels)), labels]
        return float(-np.mean(np.log(picked)))

    # -- backward ---------------------------------------------------------

    def backward(self, cache, labels) -> dict:
        """Gradients of the mean cross-entropy for every parameter.

        Dropout reuses the saved mask and scale, pooling routes only to
        the saved argmax positions, and ReLU gates on the pre-activation
        sign. The embedding gradient is omitted when embeddings are
        frozen.
        """
        labels = np.asarray(labels)
        probs = cache["probs"]
        B = probs.shape[0]
        dlogits = probs.copy()
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B

        grads = {
            "dense_w": cache["h"].T @ dlogits,
            "dense_b": dlogits.sum(axis=0),
        }

        dh = dlogits @ self.dense_w.T
        dpooled = dh.reshape(B, self.pooled_len, self.channels)

        # scatter into a fresh block, then copy into place: reshaping a
        # slice view is not guaranteed to alias the parent buffer
        dseg = np.zeros((B, self.pooled_len, self.pool, self.channels))
        np.put_along_axis(dseg, cache["arg"][:, :, None, :],
                          dpooled[:, :, None, :], axis=2)
        covered = self.pooled_len * self.pool
        ddropped = np.zeros((B, self.length - self.kernel + 1, self.channels))
        ddropped[:, :covered] = dseg.reshape(B, covered, self.channels)

        if cache["mask"] is not None:
            da = ddropped * cache["mask"] / (1.0 - self.dropout)
        else:
            da = ddropped
        dz = da * (cache["z"] > 0.0)

        windows = sliding_window_view(cache["x"], self.kernel, axis=1)
        grads["conv_w"] = np.einsum("bto,btij->oji", dz, windows)
        grads["conv_b"] = dz.sum(axis=(0, 1))

        if not self.frozen_embeddings:
            dx = np.zeros_like(cache["x"])
            T_out = dz.shape[1]
            for j in range(self.kernel):
                dx[:, j:j + T_out] += dz @ self.conv_w[:, j, :]
            # pad row is a structural zero, not a parameter: gradient
            # covers only the real vocabulary rows
            dE = np.zeros((self.vocab_size, self.dim))
            ids = cache["ids"].ravel()
            real = ids != self.pad_id
            np.add.at(dE, ids[real], dx.reshape(-1, self.dim)[real])
            grads["E"] = dE
        return grads

    def apply_gradients(self, grads, kappa) -> None:
        """Plain descent step."""
        self.conv_w -= kappa * grads["conv_w"]
        self.conv_b -= kappa * grads["conv_b"]
        self.dense_w -= kappa * grads["dense_w"]
        self.dense_b -= kappa * grads["dense_b"]
        if "E" in grads:
            self.E[:self.vocab_size] -= kappa * grads["E"]

    # -- inference ---------------------------------------------------------

    def predict(self, ids) -> np.ndarray:
        probs, _ = self.forward(ids, training=False)
        return probs.argmax(axis=1)

    def parameters(self) -> dict:
        """Live parameter arrays keyed by name (for gradient checking).

        The embedding entry is a view of the vocabulary rows only; the
        pad row is a structural zero and never a parameter.
        """
        params = {"conv_w": self.conv_w, "conv_b": self.conv_b,
                  "dense_w": self.dense_w, "dense_b": self.dense_b}
        if not self.frozen_embeddings:
            params["E"] = self.E[:self.vocab_size]
        return params


class AccuracyLogEntry(NamedTuple):
    epoch: int
    kappa: float
    loss: float
    accuracy: float


def pad_or_truncate(token_ids: Sequence[int], length: int, pad_id: int) -> tuple:
    """Right-pad with pad_id, or cut from the right, to exactly length."""
    ids = tuple(token_ids[:length])
    return ids + (pad_id,) * (length - len(ids))


def load_dataset(path, vocab: Vocabulary, length: int) -> list[LabeledSequence]:
    """Read `<label><TAB><sentence>` lines into padded id sequences.

    Tokens outside the vocabulary are dropped before padding. Blank lines
    are skipped.
    """
    data = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected <label><TAB><sentence>")
            head, text = line.split("\t", 1)
            try:
                label = int(head)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: label {head!r} is not an integer")
            if label < 0:
                raise ValueError(f"{path}:{lineno}: label must be non-negative")
            ids = vocab.encode(tokenize(text))
            data.append(LabeledSequence(
                pad_or_truncate(ids, length, len(vocab)), label))
    if not data:
        raise ValueError(f"no labeled sequences in {path}")
    return data


def evaluate(model: TextCnn, dataset: Sequence[LabeledSequence]) -> tuple[float, float]:
    """Whole-dataset (mean loss, accuracy) with dropout off."""
    ids = np.array([s.token_ids for s in dataset])
    labels = np.array([s.label for s in dataset])
    probs, _ = model.forward(ids, training=False)
    loss = model.loss(probs, labels)
    accuracy = float(np.mean(probs.argmax(axis=1) == labels))
    return loss, accuracy


def train_classifier(dataset: Sequence[LabeledSequence], model: TextCnn,
                     epochs: int, batch: int = 64, kappa0: float = 0.05,
                     decay: float = 0.85,
                     seed: int = 1) -> tuple[TextCnn, list[AccuracyLogEntry]]:
    """Mini-batch descent on mean cross-entropy; one log line per epoch.

    The seed drives the per-epoch shuffle; dropout masks come from the
    model's own generator, so the same model seed and the same training
    seed reproduce identical parameters.
    """
    if not dataset:
        raise ValueError("no training samples")
    if epochs < 1 or batch < 1:
        raise ValueError("epochs and batch must be positive")
    for s in dataset:
        if s.label >= model.classes:
            raise ValueError(f"label {s.label} outside [0, {model.classes})")

    rng = np.random.default_rng(seed)
    all_ids = np.array([s.token_ids for s in dataset])
    all_labels = np.array([s.label for s in dataset])
    n = len(dataset)
    kappa = kappa0
    log = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            sel = order[start:start + batch]
            probs, cache = model.forward(all_ids[sel], training=True)
            grads = model.backward(cache, all_labels[sel])
            model.apply_gradients(grads, kappa)
        loss, accuracy = evaluate(model, dataset)
        log.append(AccuracyLogEntry(epoch, kappa, loss, accuracy))
        kappa *= decay
    return model, log


def write_accuracy_log(path, log: Sequence[AccuracyLogEntry]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(f"{entry.epoch} {entry.kappa!r} {entry.loss!r} {entry.accuracy!r}\n")


def read_accuracy_log(path) -> list[AccuracyLogEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            epoch, kappa, loss, accuracy = line.split()
            entries.append(AccuracyLogEntry(int(epoch), float(kappa),
                                            float(loss), float(accuracy)))
    return entries


# ---------------------------------------------------------------------------
# checkpoint format
# ---------------------------------------------------------------------------

def save_checkpoint(path, model: TextCnn, surfaces: Sequence[str]) -> None:
    """JSON document with the layer specs in stack order.

    Parameter tensors are stored as shape plus row-major values; json
    serializes each double with repr, so reloading restores the exact
    values.
    """
    if len(surfaces) != model.vocab_size:
        raise ValueError("vocabulary size does not match the embedding layer")

    def tensor(arr):
        return {"shape": list(arr.shape),
                "values": [float(v) for v in np.asarray(arr).ravel()]}

    document = {
        "format": "textvec-cnn-checkpoint",
        "length": model.length,
        "seed": model.seed,
        "vocabulary": list(surfaces),
        "layers": [
            {"type": "embedding", "vocab_size": model.vocab_size,
             "dim": model.dim, "frozen": model.frozen_embeddings,
             "weights": tensor(model.E[:model.vocab_size])},
            {"type": "conv1d", "kernel": model.kernel,
             "in_channels": model.dim, "out_channels": model.channels,
             "stride": 1, "weights": tensor(model.conv_w),
             "bias": tensor(model.conv_b)},
            {"type": "dropout", "rate": model.dropout},
            {"type": "maxpool1d", "width": model.pool},
            {"type": "flatten"},
            {"type": "dense", "in": model.features, "out": model.classes,
             "weights": tensor(model.dense_w), "bias": tensor(model.dense_b)},
            {"type": "softmax_output", "classes": model.classes},
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> tuple[TextCnn, list[str]]:
    """Rebuild a model and its vocabulary surfaces from save_checkpoint."""
    with open(path, "r", encoding="utf-8") as fh:
        document = json.load(fh)
    if document.get("format") != "textvec-cnn-checkpoint":
        raise ValueError(f"{path} is not a classifier checkpoint")
    by_type = {layer["type"]: layer for layer in document["layers"]}

    def tensor(spec):
        return np.array(spec["values"], dtype=float).reshape(spec["shape"])

    emb = by_type["embedding"]
    model = TextCnn(
        embeddings=tensor(emb["weights"]),
        classes=by_type["softmax_output"]["classes"],
        length=document["length"],
        kernel=by_type["conv1d"]["kernel"],
        channels=by_type["conv1d"]["out_channels"],
        pool=by_type["maxpool1d"]["width"],
        dropout=by_type["dropout"]["rate"],
        frozen_embeddings=emb["frozen"],
        seed=document["seed"],
    )
    model.conv_w = tensor(by_type["conv1d"]["weights"])
    model.conv_b = tensor(by_type["conv1d"]["bias"])
    model.dense_w = tensor(by_type["dense"]["weights"])
    model.dense_b = tensor(by_type["dense"]["bias"])
    return model, list(document["vocabulary"])
