"""Caption evaluation metrics: corpus-level cumulative BLEU and CIDEr.

BLEU pools clipped n-gram matches over the whole record set, takes the
uniform-weight geometric mean of orders 1..n, and applies a brevity
penalty computed from the summed candidate length and the summed closest
reference length (ties resolved toward the shorter reference). Any pooled
precision of zero makes the score zero unless epsilon smoothing is
requested.

CIDEr builds tf-idf vectors for orders 1..4 with document frequencies
taken from this record set's own references (one document per image),
scores each candidate against each reference with a length-clipped cosine
and a Gaussian length penalty (sigma 6), averages over orders and
references, and scales by 10. The corpus score is the mean per-image
score. Scores from a single-record corpus are near zero because every
reference n-gram then has idf log(1/2) or lower, so that case warns.

Input records arrive as a JSON array of objects with `id`, `refs`
(non-empty array of strings), and `candidate`; all strings pass through
the same tokenizer as the embedding corpus. The output report is a small
JSON document whose metric values are fixed to six decimal places.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from typing import NamedTuple, Sequence

from .corpus import tokenize

CIDER_MAX_ORDER = 4
CIDER_SIGMA = 6.0
BLEU_SMOOTH_EPS = 1e-9


class CaptionRecord(NamedTuple):
    """One image's references and the candidate under evaluation."""

    image_id: str
    references: tuple
    candidate: tuple


class MetricReport(NamedTuple):
    bleu1: float
    bleu3: float
    bleu4: float
    cider: float
    record_count: int


def ngram_counts(tokens: Sequence, n: int) -> Counter:
    """Counts of the contiguous n-grams of a token list.

    Empty when the list is shorter than n.
    """
    if n < 1:
        raise ValueError("n-gram order must be positive")
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _closest_reference_length(candidate_len: int, references) -> int:
    lengths = sorted(len(r) for r in references)
    return min(lengths, key=lambda rl: abs(rl - candidate_len))


def bleu(records: Sequence[CaptionRecord], n_max: int,
         smooth: bool = False) -> float:
    """Corpus-level cumulative BLEU of order n_max.

    Candidate counts are clipped against the largest count of the same
    n-gram in any single reference, and numerators and denominators are
    pooled across records before dividing.
    """
    if not records:
        raise ValueError("cannot score an empty record set")
    if n_max < 1:
        raise ValueError("BLEU order must be positive")

    matched = [0] * n_max
    total = [0] * n_max
    candidate_length = 0
    reference_length = 0
    for record in records:
        candidate_length += len(record.candidate)
        reference_length += _closest_reference_length(
            len(record.candidate), record.references)
        for n in range(1, n_max + 1):
            counts = ngram_counts(record.candidate, n)
            if not counts:
                continue
            ceiling = Counter()
            for reference in record.references:
                for gram, c in ngram_counts(reference, n).items():
                    if c > ceiling[gram]:
                        ceiling[gram] = c
            matched[n - 1] += sum(min(c, ceiling[gram])
                                  for gram, c in counts.items())
            total[n - 1] += sum(counts.values())

    if candidate_length == 0:
        return 0.0
    mean_log_precision = 0.0
    for n in range(n_max):
        if matched[n] == 0 or total[n] == 0:
            if not smooth:
                return 0.0
            precision = BLEU_SMOOTH_EPS
        else:
            precision = matched[n] / total[n]
        mean_log_precision += math.log(precision) / n_max
    if candidate_length < reference_length:
        brevity = math.exp(1.0 - reference_length / candidate_length)
    else:
        brevity = 1.0
    return brevity * math.exp(mean_log_precision)


def _document_frequencies(records) -> Counter:
    """Number of images whose reference set contains each n-gram."""
    df = Counter()
    for record in records:
        grams = set()
        for reference in record.references:
            for n in range(1, CIDER_MAX_ORDER + 1):
                grams.update(ngram_counts(reference, n))
        df.update(grams)
    return df


def cider_per_image(records: Sequence[CaptionRecord]) -> list[float]:
    """Per-image consensus scores; see the module docstring for the form."""
    if not records:
        raise ValueError("cannot score an empty record set")
    if len(records) == 1:
        warnings.warn(
            "CIDEr over a single record is degenerate: idf is computed from "
            "the record set itself, so scores collapse toward zero")
    n_images = len(records)
    df = _document_frequencies(records)

    def tfidf_vector(tokens, n):
        return {gram: count * math.log(n_images / (1.0 + df[gram]))
                for gram, count in ngram_counts(tokens, n).items()}

    def clipped_cosine(cand_vec, ref_vec):
        cand_norm = math.sqrt(sum(v * v for v in cand_vec.values()))
        ref_norm = math.sqrt(sum(v * v for v in ref_vec.values()))
        if cand_norm == 0.0 or ref_norm == 0.0:
            return 0.0
        overlap = sum(min(cand_vec[g], ref_vec[g]) * ref_vec[g]
                      for g in cand_vec.keys() & ref_vec.keys())
        return overlap / (cand_norm * ref_norm)

    scores = []
    for record in records:
        cand_vecs = [tfidf_vector(record.candidate, n)
                     for n in range(1, CIDER_MAX_ORDER + 1)]
        image_total = 0.0
        for reference in record.references:
            gap = len(record.candidate) - len(reference)
            penalty = math.exp(-gap * gap / (2.0 * CIDER_SIGMA ** 2))
            for n in range(1, CIDER_MAX_ORDER + 1):
                ref_vec = tfidf_vector(reference, n)
                image_total += penalty * clipped_cosine(cand_vecs[n - 1], ref_vec)
        scores.append(10.0 * image_total
                      / (CIDER_MAX_ORDER * len(record.references)))
    return scores


def cider(records: Sequence[CaptionRecord]) -> float:
    """Mean of the per-image scores."""
    scores = cider_per_image(records)
    return sum(scores) / len(scores)


def evaluate(records: Sequence[CaptionRecord],
             smooth_bleu: bool = False) -> MetricReport:
    """Bundle the Table-style columns into one report."""
    return MetricReport(
        bleu1=bleu(records, 1, smooth=smooth_bleu),
        bleu3=bleu(records, 3, smooth=smooth_bleu),
        bleu4=bleu(records, 4, smooth=smooth_bleu),
        cider=cider(records),
        record_count=len(records),
    )


def load_captions(path) -> list[CaptionRecord]:
    """Parse and tokenize a captions file, validating every record.

    Error messages name the offending record by its id (or position when
    the id itself is missing or malformed).
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ValueError(f"{path}: expected a top-level array of records")
    if not raw:
        raise ValueError(f"{path}: record array is empty")

    records = []
    for position, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ValueError(f"{path}: record {position} is not an object")
        image_id = item.get("id")
        if not isinstance(image_id, str) or not image_id:
            raise ValueError(f"{path}: record {position} has no usable id")
        refs = item.get("refs")
        if not isinstance(refs, list) or not refs:
            raise ValueError(
                f"{path}: record {image_id!r} needs a non-empty refs array")
        if not all(isinstance(r, str) for r in refs):
            raise ValueError(
                f"{path}: record {image_id!r} has a non-string reference")
        candidate = item.get("candidate")
        if not isinstance(candidate, str):
            raise ValueError(
                f"{path}: record {image_id!r} needs a candidate string")
        records.append(CaptionRecord(
            image_id=image_id,
            references=tuple(tuple(tokenize(r)) for r in refs),
            candidate=tuple(tokenize(candidate)),
        ))
    return records


def render_report(report: MetricReport) -> str:
    """The report document: metric values fixed to six decimals."""
    return (
        "{\n"
        f'  "bleu1": {report.bleu1:.6f},\n'
        f'  "bleu3": {report.bleu3:.6f},\n'
        f'  "bleu4": {report.bleu4:.6f},\n'
        f'  "cider": {report.cider:.6f},\n'
        f'  "records": {report.record_count}\n'
        "}\n"
    )


def write_report(path, report: MetricReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(report))
