"""Automatic evaluation metrics.

All functions are pure: identical inputs give bit-identical outputs.
Tokenization splits CJK text per character and keeps contiguous Latin/digit
runs as single tokens; punctuation marks are single tokens.
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+|\S")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


class MetricError(ValueError):
    """Invalid metric input (empty where forbidden, shape mismatch...)."""


# --- label metrics ---------------------------------------------------------


def accuracy(predictions: Sequence, keys: Sequence) -> float:
    if len(predictions) != len(keys):
        raise MetricError(f"length mismatch: {len(predictions)} vs {len(keys)}")
    if not keys:
        raise MetricError("empty input")
    return sum(1 for p, k in zip(predictions, keys) if p == k) / len(keys)


def top_k_accuracy(ranked_predictions: Sequence[Sequence], keys: Sequence, k: int) -> float:
    if len(ranked_predictions) != len(keys):
        raise MetricError(f"length mismatch: {len(ranked_predictions)} vs {len(keys)}")
    if not keys:
        raise MetricError("empty input")
    hits = 0
    for ranked, key in zip(ranked_predictions, keys):
        if len(ranked) < k:
            raise MetricError(f"prediction list shorter than k={k}: {ranked!r}")
        if key in list(ranked)[:k]:
            hits += 1
    return hits / len(keys)


def _canonical(structure):
    if isinstance(structure, dict):
        return tuple(sorted(structure.items()))
    if isinstance(structure, (list, tuple)):
        return tuple(structure)
    return structure


def exact_match_accuracy(predicted_structures: Sequence, key_structures: Sequence) -> float:
    """Hit iff the full permutation / full assignment matches the key.

    A prediction of None counts as a miss (an unparseable model answer);
    any other prediction must have the key's shape.
    """
    if len(predicted_structures) != len(key_structures):
        raise MetricError("length mismatch")
    if not key_structures:
        raise MetricError("empty input")
    hits = 0
    for pred, key in zip(predicted_structures, key_structures):
        if pred is None:
            continue
        p, q = _canonical(pred), _canonical(key)
        if isinstance(p, tuple) and isinstance(q, tuple) and len(p) != len(q):
            raise MetricError(f"shape mismatch: {pred!r} vs {key!r}")
        if p == q:
            hits += 1
    return hits / len(key_structures)


# --- NDCG ------------------------------------------------------------------


@dataclass(frozen=True)
class RelevanceVector:
    """Graded gains per option, derived from reference rank.

    Rank r among m options gets gain m - r + 1, so gains are a permutation
    of 1..m.
    """

    gains: tuple[tuple[str, int], ...]

    def __post_init__(self):
        values = sorted(g for _, g in self.gains)
        if values != list(range(1, len(self.gains) + 1)):
            raise MetricError(f"gains must be a permutation of 1..m, got {values}")

    @classmethod
    def from_reference(cls, reference_order: Sequence[str]) -> "RelevanceVector":
        m = len(reference_order)
        return cls(tuple((opt, m - r) for r, opt in enumerate(reference_order)))

    def gain(self, option: str) -> int:
        for opt, g in self.gains:
            if opt == option:
                return g
        raise MetricError(f"unknown option {option!r}")

    @property
    def options(self) -> frozenset:
        return frozenset(opt for opt, _ in self.gains)


def _dcg(order: Sequence[str], relevance: RelevanceVector) -> float:
    return sum(
        (2 ** relevance.gain(opt) - 1) / math.log2(i + 2) for i, opt in enumerate(order)
    )


def ndcg(predicted_order: Sequence[str], relevance: RelevanceVector) -> float:
    if set(predicted_order) != relevance.options or len(predicted_order) != len(relevance.gains):
        raise MetricError("predicted order is not a permutation of the option set")
    ideal = sorted(predicted_order, key=lambda opt: -relevance.gain(opt))
    return _dcg(predicted_order, relevance) / _dcg(ideal, relevance)


# --- n-gram metrics --------------------------------------------------------


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(candidate: str, references: Iterable[str], n: int) -> float:
    """Sentence BLEU over orders 1..n with clipping and brevity penalty."""
    if n not in (1, 2):
        raise MetricError(f"n must be 1 or 2, got {n}")
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    refs = [r for r in refs if r]
    if not cand:
        raise MetricError("empty candidate")
    if not refs:
        raise MetricError("no non-empty reference")

    precisions = []
    for order in range(1, n + 1):
        cand_ng = _ngrams(cand, order)
        total = sum(cand_ng.values())
        if total == 0:
            precisions.append(0.0)
            continue
        clipped = 0
        for ng, count in cand_ng.items():
            max_ref = max(_ngrams(r, order).get(ng, 0) for r in refs)
            clipped += min(count, max_ref)
        precisions.append(clipped / total)

    if any(p == 0.0 for p in precisions):
        return 0.0
    c = len(cand)
    r = min(refs, key=lambda ref: (abs(len(ref) - c), len(ref)))
    bp = 1.0 if c >= len(r) else math.exp(1 - len(r) / c)
    return bp * math.exp(sum(math.log(p) for p in precisions) / n)


def dist_1(generated_set: Sequence[str]) -> float:
    """Distinct unigrams over total unigrams across the whole generated set."""
    if not generated_set:
        raise MetricError("empty input")
    all_tokens: list[str] = []
    for text in generated_set:
        all_tokens.extend(tokenize(text))
    if not all_tokens:
        raise MetricError("all texts empty after tokenization")
    return len(set(all_tokens)) / len(all_tokens)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


ROUGE_BETA = 1.2


def rouge_l(candidate: str, reference: str) -> float:
    """LCS F-measure with beta weighting recall over precision."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise MetricError("empty input")
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    b2 = ROUGE_BETA**2
    return (1 + b2) * p * r / (r + b2 * p)


# --- weighted entity overlap -----------------------------------------------


def normalize_entity(text: str) -> str:
    s = text.strip().casefold()
    while s and unicodedata.category(s[0]).startswith("P"):
        s = s[1:]
    while s and unicodedata.category(s[-1]).startswith("P"):
        s = s[:-1]
    return s


@dataclass(frozen=True)
class EntitySet:
    entities: frozenset[str]

    @classmethod
    def from_strings(cls, items: Iterable[str]) -> "EntitySet":
        return cls(frozenset(e for e in (normalize_entity(s) for s in items) if e))

    def __iter__(self):
        return iter(self.entities)

    def __len__(self) -> int:
        return len(self.entities)


@dataclass(frozen=True)
class EntityWeights:
    """Per-entity weights w_e > 0; unseen entities fall back to default_weight."""

    weights: tuple[tuple[str, float], ...]
    default_weight: float

    def __post_init__(self):
        for e, w in self.weights:
            if not (w > 0 and math.isfinite(w)):
                raise MetricError(f"weight for {e!r} must be positive and finite")
        if not (self.default_weight > 0 and math.isfinite(self.default_weight)):
            raise MetricError("default_weight must be positive and finite")
        object.__setattr__(self, "_map", dict(self.weights))

    def get(self, entity: str) -> float:
        return self._map.get(entity, self.default_weight)

    @classmethod
    def uniform(cls, value: float = 1.0) -> "EntityWeights":
        return cls((), value)


def entity_weights(reference_corpus: Sequence[EntitySet]) -> EntityWeights:
    """Inverse-log document-frequency weights: rare entities count more."""
    if not reference_corpus:
        raise MetricError("empty reference corpus")
    df: Counter = Counter()
    for es in reference_corpus:
        df.update(set(es.entities))
    weights = tuple(
        sorted((e, 1.0 / (1.0 + math.log(1 + n))) for e, n in df.items())
    )
    return EntityWeights(weights, default_weight=1.0 / (1.0 + math.log(2)))


def weo(e_gen: EntitySet, e_ref: EntitySet, w: EntityWeights) -> float:
    """Smoothed weighted overlap: (1 + sum over intersection) / sum over union."""
    union = e_gen.entities | e_ref.entities
    if not union:
        raise MetricError("both entity sets empty")
    inter = e_gen.entities & e_ref.entities
    return (1.0 + sum(w.get(e) for e in inter)) / sum(w.get(e) for e in union)


def corpus_weo(pairs: Sequence[tuple[EntitySet, EntitySet]], w: EntityWeights) -> float:
    """Mean pairwise score x100, skipping pairs where both sets are empty."""
    scores = [weo(g, r, w) for g, r in pairs if (g.entities | r.entities)]
    if not scores:
        raise MetricError("no scorable pairs")
    return 100.0 * sum(scores) / len(scores)


# --- optional embedding F1 -------------------------------------------------


def _cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def embedding_f1(
    candidate: str,
    reference: str,
    embedder: Callable[[list[str]], list[Sequence[float]]],
) -> float:
    """Greedy token-level cosine matching F1 over endpoint embeddings."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise MetricError("empty input")
    cand_vecs = embedder(cand)
    ref_vecs = embedder(ref)
    precision = sum(max(_cosine(cv, rv) for rv in ref_vecs) for cv in cand_vecs) / len(cand_vecs)
    recall = sum(max(_cosine(rv, cv) for cv in cand_vecs) for rv in ref_vecs) / len(ref_vecs)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
