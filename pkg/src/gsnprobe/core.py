"""Vocabulary and sequence types, the conditional-model contract, and the
pseudo-likelihood energy scorer shared by every backend."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BackendError, DataFormatError, UsageError

NEG_INF = float("-inf")

DEFAULT_MASK_TOKEN = "[MASK]"
DEFAULT_UNK_TOKEN = "[UNK]"

# Absolute tolerance on |sum(p) - 1| for a vector to count as a distribution.
PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token inventory; token id == position in `tokens`."""

    tokens: tuple[str, ...]
    mask_id: int
    unk_id: int

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise UsageError("vocabulary must contain at least one token")
        if len(set(self.tokens)) != len(self.tokens):
            raise UsageError("vocabulary tokens must be unique")
        for name, value in (("mask_id", self.mask_id), ("unk_id", self.unk_id)):
            if not 0 <= value < len(self.tokens):
                raise UsageError(f"{name}={value} outside vocabulary of size {len(self.tokens)}")

    @property
    def size(self) -> int:
        return len(self.tokens)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def id_of(self, token: str) -> int | None:
        return self._index.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @classmethod
    def from_file(cls, path, mask_token: str = DEFAULT_MASK_TOKEN,
                  unk_token: str = DEFAULT_UNK_TOKEN) -> "Vocabulary":
        """Load the one-token-per-line format; line index is the token id."""
        with open(path, encoding="utf-8") as fh:
            tokens = tuple(line.rstrip("\n") for line in fh)
        if tokens and tokens[-1] == "":
            tokens = tokens[:-1]
        index = {tok: i for i, tok in enumerate(tokens)}
        if mask_token not in index:
            raise DataFormatError(f"vocabulary file {path} lacks mask token {mask_token!r}")
        if unk_token not in index:
            raise DataFormatError(f"vocabulary file {path} lacks unk token {unk_token!r}")
        return cls(tokens=tokens, mask_id=index[mask_token], unk_id=index[unk_token])

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length chain state: a tuple of token ids."""

    ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.ids) == 0:
            raise UsageError("token sequence must have at least one site")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n(self) -> int:
        return len(self.ids)

    def validate(self, vocab: Vocabulary) -> None:
        for i, tid in enumerate(self.ids):
            if not 0 <= tid < vocab.size:
                raise UsageError(f"token id {tid} at site {i} outside vocabulary of size {vocab.size}")


class ConditionalModel(ABC):
    """Source of per-site conditionals P(w_k | w_-k).

    `query` must be a pure function of (sequence with site k masked, k):
    the value at the queried site never influences the result. Backends
    that cannot serve concurrent read-only queries set `thread_safe` to
    False and the chain runner falls back to sequential execution.
    """

    vocab: Vocabulary
    length: int
    thread_safe: bool = True

    @abstractmethod
    def query(self, ids: Sequence[int], site: int) -> np.ndarray:
        """Return P(. | ids with `site` masked) as a vector over the vocabulary."""

    def fingerprint(self) -> str:
        return "unknown"

    def _check_site(self, ids: Sequence[int], site: int) -> None:
        if len(ids) != self.length:
            raise UsageError(f"sequence length {len(ids)} != model length {self.length}")
        if not 0 <= site < self.length:
            raise UsageError(f"site {site} outside sequence of length {self.length}")


def validate_distribution(p, size: int | None = None, tol: float = PROB_SUM_TOL) -> str | None:
    """Return None if `p` is a probability vector, else a reason string.

    Failure reasons name the offending index so backend errors stay
    debuggable from chain logs.
    """
    vec = np.asarray(p, dtype=float)
    if vec.ndim != 1:
        return f"expected 1-d vector, got shape {vec.shape}"
    if size is not None and vec.shape[0] != size:
        return f"expected length {size}, got {vec.shape[0]}"
    nan_idx = np.flatnonzero(np.isnan(vec))
    if nan_idx.size:
        return f"NaN entry at index {int(nan_idx[0])}"
    neg_idx = np.flatnonzero(vec < 0)
    if neg_idx.size:
        i = int(neg_idx[0])
        return f"negative entry {vec[i]!r} at index {i}"
    total = float(vec.sum())
    if abs(total - 1.0) > tol:
        return f"sum {total!r} deviates from 1 by more than {tol}"
    return None


def site_log_probs(model: ConditionalModel, ids: Sequence[int]) -> np.ndarray:
    """Per-site log P(w_k | w_-k), each term computed with site k masked."""
    if len(ids) != model.length:
        raise UsageError(f"sequence length {len(ids)} != model length {model.length}")
    out = np.empty(model.length)
    for k in range(model.length):
        p = model.query(ids, k)
        reason = validate_distribution(p, size=model.vocab.size)
        if reason is not None:
            raise BackendError(f"invalid conditional at site {k}: {reason}", site=k)
        prob = float(p[ids[k]])
        out[k] = math.log(prob) if prob > 0.0 else NEG_INF
    return out


def energy_score(model: ConditionalModel, seq: TokenSequence | Sequence[int]) -> float:
    """Pseudo-log-likelihood energy: sum over sites of ln P(w_k | w_-k).

    A conditional of exactly zero for the realized token yields -inf
    rather than raising, so chain-level diagnostics stay total.
    """
    ids = seq.ids if isinstance(seq, TokenSequence) else tuple(seq)
    terms = site_log_probs(model, ids)
    if np.isneginf(terms).any():
        return NEG_INF
    return float(terms.sum())
