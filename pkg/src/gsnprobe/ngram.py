"""Interpolated Kneser-Ney n-gram model: training, left-to-right sentence
sampling, and a dependency-network adapter deriving P(w_k | w_-k) from the
n-gram joint."""

from __future__ import annotations

import hashlib
import json
from typing import Iterable, Sequence

import numpy as np

from .core import ConditionalModel, Vocabulary
from .errors import DataFormatError, UsageError

BOS = "<s>"
MASK_WORD = "[MASK]"


class NgramModel:
    """Word-level interpolated Kneser-Ney model with one discount per order.

    The top order keeps raw counts (line starts padded with BOS); every
    lower order uses continuation type counts, so the unigram level is the
    classic N1+(. w) / N1+(. .) distribution. BOS is context-only: it is
    never a prediction target and never counted as a left extension, which
    keeps every conditional summing to exactly one over the word vocabulary.
    """

    def __init__(self, order: int, discount: float, vocab: list[str],
                 levels: dict[int, dict[tuple[str, ...], dict[str, int]]]):
        if order < 1:
            raise UsageError(f"order must be >= 1, got {order}")
        if not 0.0 < discount < 1.0:
            raise UsageError(f"discount must lie in (0, 1), got {discount}")
        self.order = order
        self.discount = discount
        self.vocab = sorted(vocab)
        self._index = {w: i for i, w in enumerate(self.vocab)}
        self.levels = levels
        self._totals: dict[int, dict[tuple[str, ...], int]] = {}
        self._distinct: dict[int, dict[tuple[str, ...], int]] = {}
        for m, table in levels.items():
            self._totals[m] = {h: sum(c.values()) for h, c in table.items()}
            self._distinct[m] = {h: len(c) for h, c in table.items()}
        self._unigram = self._build_unigram()
        self._cache: dict[tuple[str, ...], np.ndarray] = {}

    def _build_unigram(self) -> np.ndarray:
        vec = np.zeros(len(self.vocab))
        table = self.levels.get(1, {})
        counts = table.get((), {})
        total = sum(counts.values())
        if total > 0:
            for w, c in counts.items():
                vec[self._index[w]] = c / total
        elif self.vocab:
            vec[:] = 1.0 / len(self.vocab)
        return vec

    def _level_vector(self, m: int, history: tuple[str, ...]) -> np.ndarray:
        if m <= 1:
            return self._unigram
        counts = self.levels.get(m, {}).get(history)
        lower = self._level_vector(m - 1, history[1:])
        if not counts:
            return lower
        total = self._totals[m][history]
        lam = self.discount * self._distinct[m][history] / total
        vec = lam * lower
        for w, c in counts.items():
            vec[self._index[w]] += max(c - self.discount, 0.0) / total
        return vec

    def conditional_vector(self, history: Sequence[str]) -> np.ndarray:
        """P(. | history) over the sorted word vocabulary."""
        h = tuple(history)
        if len(h) >= self.order:
            h = h[len(h) - self.order + 1:]
        if h in self._cache:
            return self._cache[h]
        vec = self._level_vector(len(h) + 1, h)
        if len(self._cache) < 200_000:
            self._cache[h] = vec
        return vec

    def prob(self, word: str, history: Sequence[str]) -> float:
        idx = self._index.get(word)
        if idx is None:
            return 0.0
        return float(self.conditional_vector(history)[idx])

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "discount": self.discount,
            "vocab": self.vocab,
            "levels": {
                str(m): [[list(h), sorted(c.items())] for h, c in sorted(table.items())]
                for m, table in self.levels.items()
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NgramModel":
        try:
            levels = {
                int(m): {tuple(h): {w: int(c) for w, c in counts} for h, counts in entries}
                for m, entries in doc["levels"].items()
            }
            return cls(int(doc["order"]), float(doc["discount"]),
                       list(doc["vocab"]), levels)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad ngram model document: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NgramModel":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"cannot read ngram model {path}: {exc}") from exc

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return "ngram:" + hashlib.sha256(blob).hexdigest()[:16]


def train_kn(lines: Iterable[str], order: int = 5, discount: float = 0.75) -> NgramModel:
    """Count n-grams over whitespace-tokenized lines and build the model."""
    if order < 1:
        raise UsageError(f"order must be >= 1, got {order}")
    if not 0.0 < discount < 1.0:
        raise UsageError(f"discount must lie in (0, 1), got {discount}")
    vocab: set[str] = set()
    top: dict[tuple[str, ...], dict[str, int]] = {}
    type_sets: dict[int, set[tuple[str, ...]]] = {m: set() for m in range(2, order + 1)}
    n_tokens = 0
    raw_unigram: dict[str, int] = {}
    for line in lines:
        words = line.split()
        if not words:
            continue
        n_tokens += len(words)
        vocab.update(words)
        for w in words:
            raw_unigram[w] = raw_unigram.get(w, 0) + 1
        padded = [BOS] * (order - 1) + words
        for i in range(order - 1, len(padded)):
            gram = tuple(padded[i - order + 1: i + 1])
            if order > 1:
                hist, target = gram[:-1], gram[-1]
                top.setdefault(hist, {})
                top[hist][target] = top[hist].get(target, 0) + 1
            for m in range(2, order + 1):
                sub = gram[order - m:]
                if sub[0] != BOS:
                    type_sets[m].add(sub)
    if not vocab:
        raise UsageError("empty corpus")

    levels: dict[int, dict[tuple[str, ...], dict[str, int]]] = {}
    if order > 1:
        levels[order] = top
        for m in range(order - 1, 0, -1):
            table: dict[tuple[str, ...], dict[str, int]] = {}
            for gram in type_sets[m + 1]:
                hist, target = gram[1:-1], gram[-1]
                table.setdefault(hist, {})
                table[hist][target] = table[hist].get(target, 0) + 1
            levels[m] = table
        if not levels[1].get((), {}):
            # degenerate corpus with no real-token bigrams: fall back to ML
            levels[1] = {(): dict(raw_unigram)}
    else:
        levels[1] = {(): dict(raw_unigram)}
    return NgramModel(order, discount, sorted(vocab), levels)


def sample_sentence(model: NgramModel, length: int, rng: np.random.Generator) -> list[str]:
    """Ancestral left-to-right sampling of a fixed word count (no end token)."""
    if length < 0:
        raise UsageError("length must be nonnegative")
    history = tuple([BOS] * (model.order - 1))
    out: list[str] = []
    for _ in range(length):
        vec = model.conditional_vector(history)
        cum = np.cumsum(vec)
        cum /= cum[-1]
        idx = min(int(np.searchsorted(cum, rng.random(), side="right")), len(vec) - 1)
        word = model.vocab[idx]
        out.append(word)
        history = (history + (word,))[1:] if model.order > 1 else ()
    return out


class NgramConditionalModel(ConditionalModel):
    """P(w_k | w_-k) derived from the n-gram joint over fixed-length word
    sequences: proportional to the product of the autoregressive factors
    whose window covers site k. The extra mask symbol has zero conditional
    mass everywhere; contexts containing it simply back off."""

    def __init__(self, model: NgramModel, length: int):
        if length < 1:
            raise UsageError("length must be >= 1")
        self.model = model
        self.length = length
        words = tuple(model.vocab)
        self.vocab = Vocabulary(tokens=words + (MASK_WORD,),
                                mask_id=len(words), unk_id=len(words))

    def _word(self, tid: int) -> str:
        return self.model.vocab[tid] if tid < len(self.model.vocab) else MASK_WORD

    def query(self, ids, site: int) -> np.ndarray:
        self._check_site(ids, site)
        W = len(self.model.vocab)
        order = self.model.order
        words = [self._word(int(t)) for t in ids]
        padded = [BOS] * (order - 1) + words
        scores = np.ones(W)
        for j in range(site, min(site + order - 1, self.length - 1) + 1):
            # history of sequence position j is padded[j : j + order - 1]
            history = padded[j: j + order - 1]
            if j == site:
                scores = scores * self.model.conditional_vector(history)
            else:
                offset = site + order - 1 - j
                probs = np.empty(W)
                for i, cand in enumerate(self.model.vocab):
                    hist = list(history)
                    hist[offset] = cand
                    probs[i] = self.model.prob(words[j], hist)
                scores = scores * probs
        out = np.zeros(W + 1)
        total = float(scores.sum())
        if total <= 0.0:
            out[:W] = 1.0 / W
        else:
            out[:W] = scores / total
        return out

    def fingerprint(self) -> str:
        return self.model.fingerprint()
