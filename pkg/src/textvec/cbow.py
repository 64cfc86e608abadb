"""Continuous-bag-of-words embedding trainer with hierarchical softmax.

The projection vector is the plain sum of the context rows. Each word's
probability is the product of sigmoid branch decisions along its Huffman
path, and training maximizes the summed log-probability by stochastic
gradient ascent on both the internal-node parameters and the context word
vectors. The learning rate decays by a fixed multiplier once per epoch.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import ContextSample, Vocabulary
from .huffman import HuffmanTree

SIGMOID_CLAMP = 30.0


@dataclass
class TrainingConfig:
    """Hyperparameters for one embedding training run."""

    dim: int = 100
    half_window: int = 5
    kappa0: float = 0.025
    decay: float = 0.85
    batch: int = 64
    epochs: int = 5
    min_count: int = 5
    seed: int = 1
    deterministic: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.half_window < 1:
            raise ValueError("half_window must be positive")
        if not self.kappa0 > 0:
            raise ValueError("kappa0 must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must be in (0, 1]")
        if self.batch < 1:
            raise ValueError("batch must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.min_count < 1:
            raise ValueError("min_count must be positive")


@dataclass
class TrainerState:
    """Mutable training state: embeddings W, node parameters beta, rate kappa."""

    W: np.ndarray
    beta: np.ndarray
    kappa: float
    epoch: int = 0


class LossLogEntry(NamedTuple):
    """One loss-log line: the rate in effect at the start of the epoch and
    the mean negative log-likelihood over all samples at that point."""

    epoch: int
    kappa: float
    loss: float


def sigmoid(x):
    """Logistic function with inputs clamped to +-30 before exponentiation.

    The clamp keeps exp() finite and keeps log(sigmoid) and log(1-sigmoid)
    representable in double precision.
    """
    clamped = np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-clamped))


def project(context_ids: Sequence[int], W: np.ndarray) -> np.ndarray:
    """Sum the context word vectors; no averaging."""
    if len(context_ids) == 0:
        raise ValueError("cannot project an empty context")
    return W[np.asarray(context_ids)].sum(axis=0)


def branch_prob(U: np.ndarray, beta_node: np.ndarray, s: int) -> float:
    """Probability of taking branch bit s at one internal node."""
    p = sigmoid(float(np.dot(U, beta_node)))
    return p if s == 0 else 1.0 - p


def word_prob(tree: HuffmanTree, state: TrainerState, U: np.ndarray,
              word_id: int) -> float:
    """Probability of a word given the projection: the product of its
    branch probabilities. Equals 1 for a single-word vocabulary."""
    code, path = tree.path_of(word_id)
    if not path:
        return 1.0
    logits = state.beta[path] @ U
    probs = sigmoid(logits)
    bits = np.asarray(code)
    return float(np.prod(np.where(bits == 0, probs, 1.0 - probs)))


def node_objective(U: np.ndarray, beta_node: np.ndarray, s: int) -> float:
    """Log of the branch probability at one internal node; always <= 0."""
    p = sigmoid(float(np.dot(U, beta_node)))
    return float((1 - s) * np.log(p) + s * np.log(1.0 - p))


def log_likelihood(samples: Iterable[ContextSample], tree: HuffmanTree,
                   state: TrainerState) -> float:
    """Sum over samples of log word_prob(center | context)."""
    total = 0.0
    for sample in samples:
        code, path = tree.path_of(sample.center_id)
        if not path:
            continue
        U = project(sample.context_ids, state.W)
        logits = state.beta[path] @ U
        probs = sigmoid(logits)
        bits = np.asarray(code)
        total += float(np.sum(np.where(bits == 0, np.log(probs),
                                       np.log(1.0 - probs))))
    return total


def grad_beta(U: np.ndarray, beta_node: np.ndarray, s: int) -> np.ndarray:
    """Gradient of the node objective with respect to the node parameter."""
    g = 1.0 - s - sigmoid(float(np.dot(U, beta_node)))
    return g * U


def grad_U(U: np.ndarray, beta_node: np.ndarray, s: int) -> np.ndarray:
    """Gradient of the node objective with respect to the projection.

    Mirrors grad_beta with the two vectors swapped; the objective is
    symmetric in them.
    """
    g = 1.0 - s - sigmoid(float(np.dot(U, beta_node)))
    return g * beta_node


def sgd_step(sample: ContextSample, tree: HuffmanTree,
             state: TrainerState) -> TrainerState:
    """One ascent step on a single sample, updating state in place.

    The projection gradient is accumulated from the node parameters as
    they were before this step's writes, then added to every context word
    vector (repeated context words receive one contribution per
    occurrence).
    """
    code, path = tree.path_of(sample.center_id)
    if not path:
        return state
    U = project(sample.context_ids, state.W)
    nodes = state.beta[path]  # fancy index copies: reads precede writes
    g = 1.0 - np.asarray(code, dtype=float) - sigmoid(nodes @ U)
    e = g @ nodes
    state.beta[path] += state.kappa * np.outer(g, U)
    np.add.at(state.W, np.asarray(sample.context_ids), state.kappa * e)
    return state


def train(corpus_samples: Sequence[ContextSample], vocab: Vocabulary,
          tree: HuffmanTree, config: TrainingConfig,
          threads: int = 1) -> tuple[TrainerState, list[LossLogEntry]]:
    """Run the full training schedule and return the state and loss log.

    W starts uniform in [-0.5/dim, +0.5/dim] from the seed; beta starts at
    zero, which makes every initial branch logit zero. Samples are
    reshuffled each epoch from the same seeded generator and consumed in
    batches of config.batch, with updates applied per sample. The rate is
    multiplied by config.decay after each epoch.

    The loss log holds epochs + 1 entries: entry e carries the rate in
    effect at the start of epoch e and the mean negative log-likelihood of
    the whole sample set under the parameters at that moment, so entry 0
    is the untrained baseline and the last entry is the final loss.

    With threads > 1 and config.deterministic false, each epoch's shuffled
    samples are split into contiguous shards trained by concurrent workers
    over the shared state without locking; run-to-run results may then
    vary. Otherwise training is single-threaded and bit-reproducible.
    """
    if len(corpus_samples) == 0:
        raise ValueError("no training samples")
    if tree.leaf_count != len(vocab):
        raise ValueError(
            f"tree has {tree.leaf_count} leaves but vocabulary has {len(vocab)} words")

    rng = np.random.default_rng(config.seed)
    d = config.dim
    V = len(vocab)
    bound = 0.5 / d
    state = TrainerState(
        W=rng.uniform(-bound, bound, size=(V, d)),
        beta=np.zeros((max(V - 1, 0), d)),
        kappa=config.kappa0,
    )

    parallel = threads > 1 and not config.deterministic
    n = len(corpus_samples)
    log: list[LossLogEntry] = []

    def mean_neg_ll() -> float:
        return -log_likelihood(corpus_samples, tree, state) / n

    for epoch in range(config.epochs):
        log.append(LossLogEntry(epoch, state.kappa, mean_neg_ll()))
        order = rng.permutation(n)
        if parallel:
            shards = np.array_split(order, threads)
            workers = [
                threading.Thread(
                    target=_train_shard,
                    args=(corpus_samples, shard, tree, state))
                for shard in shards if len(shard)
            ]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
        else:
            for start in range(0, n, config.batch):
                for idx in order[start:start + config.batch]:
                    sgd_step(corpus_samples[idx], tree, state)
        state.epoch = epoch + 1
        state.kappa *= config.decay
    log.append(LossLogEntry(config.epochs, state.kappa, mean_neg_ll()))
    return state, log


def _train_shard(samples, indices, tree, state):
    for idx in indices:
        sgd_step(samples[idx], tree, state)


def nearest_neighbors(state: TrainerState, word_id: int,
                      k: int) -> list[tuple[int, float]]:
    """The k most cosine-similar words to word_id, excluding itself.

    Descending similarity; equal similarities are ordered by ascending id.
    A zero-norm vector has similarity 0 to everything.
    """
    V = state.W.shape[0]
    if not 0 <= word_id < V:
        raise IndexError(f"word id {word_id} out of range for {V} words")
    if k >= V:
        raise ValueError(f"k must be < vocabulary size {V}, got {k}")
    query = state.W[word_id]
    denom = np.linalg.norm(query) * np.linalg.norm(state.W, axis=1)
    zero = denom == 0.0
    sims = state.W @ query / np.where(zero, 1.0, denom)
    sims[zero] = 0.0
    ids = np.arange(V)
    keep = ids != word_id
    order = np.lexsort((ids[keep], -sims[keep]))
    chosen = ids[keep][order[:k]]
    return [(int(w), float(sims[w])) for w in chosen]


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------

def save_embeddings(path, vocab: Vocabulary, W: np.ndarray) -> None:
    """Write `<V> <d>` then one `<surface> <values...>` line per word id.

    Values are written with repr, the shortest decimal string that parses
    back to the same double, so a read/write round trip is exact.
    """
    V, d = W.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{V} {d}\n")
        for i in range(V):
            values = " ".join(repr(float(x)) for x in W[i])
            fh.write(f"{vocab.surface_of(i)} {values}\n")


def load_embeddings(path) -> tuple[list[str], np.ndarray]:
    """Read the text embedding format back into (surfaces, matrix)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"malformed embedding header in {path}")
        V, d = int(header[0]), int(header[1])
        surfaces = []
        W = np.zeros((V, d))
        for i in range(V):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValueError(f"malformed embedding line {i + 2} in {path}")
            surfaces.append(parts[0])
            W[i] = [float(x) for x in parts[1:]]
    return surfaces, W


def write_loss_log(path, log: Sequence[LossLogEntry]) -> None:
    """One `<epoch> <kappa> <mean_neg_log_likelihood>` line per entry."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(f"{entry.epoch} {entry.kappa!r} {entry.loss!r}\n")


def read_loss_log(path) -> list[LossLogEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            epoch, kappa, loss = line.split()
            entries.append(LossLogEntry(int(epoch), float(kappa), float(loss)))
    return entries
