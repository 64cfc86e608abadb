"""Huffman tree over word frequencies for hierarchical softmax.

Each vocabulary word gets a root-to-leaf branch code and the matching list
of internal-node indices; the trainer keeps one parameter vector per
internal node, addressed by those indices.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .corpus import Vocabulary


@dataclass
class HuffmanTree:
    """Binary prefix tree over V leaves with V-1 internal nodes.

    codes[w] holds the branch bits of word w from the root down: 0 takes
    the higher-frequency child, 1 the lower-frequency child. paths[w]
    holds the internal-node index at each decision, so paths[w][0] is the
    root for every word. children[i] gives internal node i's (bit-0 child,
    bit-1 child) where values < leaf_count are leaves and values >=
    leaf_count are leaf_count + internal index.
    """

    leaf_count: int
    internal_count: int
    codes: list[list[int]]
    paths: list[list[int]]
    children: list[tuple[int, int]]

    @property
    def root(self) -> int:
        return self.internal_count - 1

    def path_of(self, word_id: int) -> tuple[list[int], list[int]]:
        """Return (branch bits, internal-node indices) for one word."""
        if not 0 <= word_id < self.leaf_count:
            raise IndexError(
                f"word id {word_id} out of range for {self.leaf_count} leaves")
        return self.codes[word_id], self.paths[word_id]

    def code_lengths(self) -> list[int]:
        return [len(c) for c in self.codes]

    def dump_codes(self, vocab: Vocabulary, path) -> None:
        """Write the diagnostic listing, one `<word> <bitstring>` per line."""
        with open(path, "w", encoding="utf-8") as fh:
            for w in range(self.leaf_count):
                bits = "".join(str(b) for b in self.codes[w])
                fh.write(f"{vocab.surface_of(w)} {bits}\n")


def build_huffman(vocab) -> HuffmanTree:
    """Build the minimum-weighted-path-length prefix tree over frequencies.

    Accepts a Vocabulary or a plain sequence of positive frequencies.
    Merging is deterministic: the priority queue orders by (frequency,
    creation index), leaves are created in id order, and merged nodes are
    created after all leaves, so identical inputs give identical trees.
    Of the two nodes merged, the second popped (higher frequency, or later
    creation on a tie) becomes the bit-0 child.

    A single-word vocabulary yields the degenerate tree: empty code and
    path, zero internal nodes.
    """
    if isinstance(vocab, Vocabulary):
        freqs = list(vocab.frequencies)
    else:
        freqs = list(vocab)
    n = len(freqs)
    if n == 0:
        raise ValueError("cannot build a Huffman tree over an empty vocabulary")

    # Node ids: leaves 0..n-1, internal nodes n..2n-2 in creation order.
    parent = [-1] * (2 * n - 1)
    bit = [0] * (2 * n - 1)
    children: list[tuple[int, int]] = []
    heap = [(f, i) for i, f in enumerate(freqs)]
    heapq.heapify(heap)
    next_id = n
    while len(heap) > 1:
        low_freq, low = heapq.heappop(heap)
        high_freq, high = heapq.heappop(heap)
        parent[low] = next_id
        bit[low] = 1
        parent[high] = next_id
        bit[high] = 0
        children.append((high, low))
        heapq.heappush(heap, (low_freq + high_freq, next_id))
        next_id += 1

    codes: list[list[int]] = []
    paths: list[list[int]] = []
    for w in range(n):
        code: list[int] = []
        path: list[int] = []
        node = w
        while parent[node] != -1:
            code.append(bit[node])
            path.append(parent[node] - n)
            node = parent[node]
        code.reverse()
        path.reverse()
        codes.append(code)
        paths.append(path)

    return HuffmanTree(
        leaf_count=n,
        internal_count=n - 1,
        codes=codes,
        paths=paths,
        children=children,
    )
