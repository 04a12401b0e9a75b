"""Bigram language model used as a perturbation distribution over sentences.

Unanchored positions are filled left to right, each token drawn from
``P(next | previous emitted token)``; anchored positions are emitted as-is
and become the context for the next position.  Sentence length is fixed to
the explained sentence's length so position anchors stay meaningful.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .data import Predicate
from .errors import ConfigError, CorruptFileError, DataError

BOS = "<s>"
EOS = "</s>"


@dataclass(frozen=True, eq=False)
class BigramLM:
    vocab: tuple
    counts: np.ndarray  # counts[prev, next]
    add_k: float = 0.01

    def __post_init__(self):
        if len(set(self.vocab)) != len(self.vocab):
            raise DataError("duplicate vocabulary entries")
        if self.vocab[:2] != (BOS, EOS):
            raise DataError("vocabulary must start with the sentence markers")
        if self.add_k < 0:
            raise ConfigError("add_k must be >= 0")
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.vocab), len(self.vocab)):
            raise DataError("count table must be |V| x |V|")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @cached_property
    def index(self) -> dict:
        return {t: i for i, t in enumerate(self.vocab)}

    @cached_property
    def probs(self) -> np.ndarray:
        """``P(next | prev)`` for every context, add-k smoothed.

        A context with no mass (possible only when ``add_k == 0``) gets a
        uniform row so every row still sums to one.
        """
        V = len(self.vocab)
        table = self.counts + self.add_k
        totals = table.sum(axis=1, keepdims=True)
        return np.where(totals > 0, table / np.where(totals > 0, totals, 1), 1.0 / V)

    @cached_property
    def _emission(self) -> np.ndarray:
        # word-only conditionals used while filling fixed-length sentences
        P = self.probs.copy()
        P[:, :2] = 0.0
        uni = self.counts[:, 2:].sum(axis=0).astype(float)
        uni = uni / uni.sum() if uni.sum() > 0 else np.full(len(uni), 1.0 / max(len(uni), 1))
        rows = P.sum(axis=1)
        for i in np.flatnonzero(rows <= 0):
            P[i, 2:] = uni
        P /= P.sum(axis=1, keepdims=True)
        return np.cumsum(P, axis=1)

    def prob(self, prev: str, nxt: str) -> float:
        return float(self.probs[self.index[prev], self.index[nxt]])

    def to_json(self) -> dict:
        table = {}
        for i, j in zip(*np.nonzero(self.counts)):
            table.setdefault(self.vocab[i], {})[self.vocab[j]] = int(self.counts[i, j])
        return {"vocab": list(self.vocab), "counts": table, "add_k": self.add_k}

    @classmethod
    def from_json(cls, doc: Mapping) -> "BigramLM":
        try:
            vocab = tuple(doc["vocab"])
            idx = {t: i for i, t in enumerate(vocab)}
            counts = np.zeros((len(vocab), len(vocab)), dtype=np.int64)
            for prev, row in doc["counts"].items():
                for nxt, c in row.items():
                    counts[idx[prev], idx[nxt]] = c
            return cls(vocab, counts, float(doc["add_k"]))
        except (KeyError, TypeError, AttributeError) as exc:
            raise CorruptFileError(f"malformed language model document: {exc}") from exc


def tokenize(line: str) -> list[str]:
    return line.split()


def read_corpus(path) -> list[list[str]]:
    """One sentence per line, whitespace-tokenized; blank lines skipped."""
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line) for line in fh if line.strip()]


def fit_bigram_lm(corpus: Sequence[Sequence[str]], add_k: float = 0.01) -> BigramLM:
    """Count ``(prev, next)`` pairs over ``<s> w1 ... wn </s>`` for each sentence."""
    corpus = [list(s) for s in corpus]
    if not corpus or not any(corpus):
        raise DataError("cannot fit a language model on an empty corpus")
    words = sorted({w for s in corpus for w in s} - {BOS, EOS})
    vocab = (BOS, EOS, *words)
    idx = {t: i for i, t in enumerate(vocab)}
    counts = np.zeros((len(vocab), len(vocab)), dtype=np.int64)
    for s in corpus:
        seq = [BOS, *s, EOS]
        for a, b in zip(seq, seq[1:]):
            counts[idx[a], idx[b]] += 1
    return BigramLM(vocab, counts, add_k)


def save_lm(lm: BigramLM, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(lm.to_json(), fh, sort_keys=True)


def load_lm(path) -> BigramLM:
    try:
        with open(path, encoding="utf-8") as fh:
            return BigramLM.from_json(json.load(fh))
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc


def sample_text_conditional(lm: BigramLM, anchor_tokens: Mapping[int, str], length: int, n: int,
                            rng: np.random.Generator) -> list[list[str]]:
    """``n`` sentences of ``length`` tokens carrying ``anchor_tokens`` at their positions."""
    for pos, tok in anchor_tokens.items():
        if not 0 <= pos < length:
            raise DataError(f"anchored position {pos} outside sentence of length {length}")
        if tok not in lm.index:
            raise DataError(f"anchored token {tok!r} is not in the vocabulary")
    ids = _sample_ids(lm, {p: lm.index[t] for p, t in anchor_tokens.items()}, length, n, rng)
    vocab = lm.vocab
    return [[vocab[i] for i in row] for row in ids.tolist()]


def _sample_ids(lm, anchored: Mapping[int, int], length, n, rng) -> np.ndarray:
    cdf = lm._emission
    ids = np.empty((n, length), dtype=np.int64)
    prev = np.zeros(n, dtype=np.int64)  # BOS
    for pos in range(length):
        if pos in anchored:
            ids[:, pos] = anchored[pos]
        else:
            u = rng.random(n)
            rows = cdf[prev]
            pick = (u[:, None] >= rows).sum(axis=1)
            # guard against cdf rounding just below 1
            last = len(lm.vocab) - 1
            ids[:, pos] = np.minimum(pick, last)
        prev = ids[:, pos]
    return ids


class TextSampler:
    """Perturbation distribution over one sentence, for :func:`anchorkit.search.find_anchor`.

    "Features" are token positions; an anchor keeps the chosen positions'
    tokens and resamples the rest from the language model.
    """

    def __init__(self, lm: BigramLM):
        self.lm = lm

    def candidate_features(self, x: Sequence[str]) -> list[int]:
        return [i for i, t in enumerate(x) if t in self.lm.index]

    def predicate_for(self, x, feature: int) -> Predicate:
        return Predicate(int(feature), self.lm.index[x[feature]])

    def as_batch(self, x):
        return [list(x)]

    def draw(self, x, features, n, rng):
        anchored = {int(i): x[i] for i in features}
        return sample_text_conditional(self.lm, anchored, len(x), n, rng)


class KeywordClassifier:
    """Toy text model: label of the first rule keyword found, else ``default``.

    Mimics the question-answering behaviour in the anchor demos, e.g.
    ``KeywordClassifier([("many", 1), ("What", 2)], default=0)``.
    """

    def __init__(self, rules: Sequence[tuple[str, int]], default: int = 0, n_classes: int | None = None):
        self.rules = list(rules)
        self.default = default
        self.n_classes = n_classes or max([default] + [lab for _, lab in self.rules]) + 1

    def predict_batch(self, sentences) -> np.ndarray:
        out = np.full(len(sentences), self.default, dtype=np.int64)
        for k, s in enumerate(sentences):
            words = set(s)
            for kw, lab in self.rules:
                if kw in words:
                    out[k] = lab
                    break
        return out
