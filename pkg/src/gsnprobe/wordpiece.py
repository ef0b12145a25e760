"""Greedy longest-match subword tokenizer and the sentence-pool pipeline
that buckets corpus sentences by exact token length."""

from __future__ import annotations

import csv
import json
import os
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import DEFAULT_MASK_TOKEN, DEFAULT_UNK_TOKEN, Vocabulary
from .errors import DataFormatError, UsageError

CONTINUATION_PREFIX = "##"

# terminal punctuation, optional closing quotes/brackets, whitespace, then a
# capital (or digit) opener: the multi-sentence heuristic
_SPLIT_RE = re.compile(r"[.!?][\"'”’)\]]*\s+[A-Z0-9]")


@dataclass(frozen=True)
class WordPieceVocab(Vocabulary):
    """Vocabulary with "##"-prefixed continuation pieces."""

    max_word_chars: int = 100

    @classmethod
    def from_file(cls, path, mask_token: str = DEFAULT_MASK_TOKEN,
                  unk_token: str = DEFAULT_UNK_TOKEN,
                  max_word_chars: int = 100) -> "WordPieceVocab":
        base = Vocabulary.from_file(path, mask_token=mask_token, unk_token=unk_token)
        return cls(tokens=base.tokens, mask_id=base.mask_id, unk_id=base.unk_id,
                   max_word_chars=max_word_chars)


def tokenize_word(vocab: Vocabulary, word: str,
                  max_word_chars: int = 100) -> list[int]:
    """Greedy longest-match-first split of a single whitespace-free word.

    The first piece is unprefixed, later pieces carry "##". A word with no
    admissible decomposition (or longer than max_word_chars) becomes one
    unk token. Continuation pieces are never matched word-initially.
    """
    if vocab.size == 0:
        raise UsageError("empty vocabulary")
    if len(word) > max_word_chars:
        return [vocab.unk_id]
    pieces: list[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION_PREFIX + piece
            elif piece.startswith(CONTINUATION_PREFIX):
                end -= 1
                continue
            tid = vocab.id_of(piece)
            if tid is not None:
                match = tid
                break
            end -= 1
        if match is None:
            return [vocab.unk_id]
        pieces.append(match)
        start = end
    return pieces


def wordpiece_tokenize(vocab: Vocabulary, text: str, lowercase: bool = True) -> list[int]:
    """Tokenize whitespace-pre-split text; lowercased by default to match
    the uncased model convention."""
    if lowercase:
        text = text.lower()
    max_chars = getattr(vocab, "max_word_chars", 100)
    ids: list[int] = []
    for word in text.split():
        ids.extend(tokenize_word(vocab, word, max_chars))
    return ids


def detokenize(vocab: Vocabulary, ids: Sequence[int]) -> str:
    """Concatenate pieces, stripping "##" joins; single spaces between words.

    A continuation piece with no word to attach to (sequence-initial ones
    arise in sampled chains) renders stripped, keeping every decoded
    surface re-tokenizable.
    """
    words: list[str] = []
    for tid in ids:
        tok = vocab.token(int(tid))
        if tok.startswith(CONTINUATION_PREFIX):
            stripped = tok[len(CONTINUATION_PREFIX):]
            if words:
                words[-1] += stripped
            else:
                words.append(stripped)
        else:
            words.append(tok)
    return " ".join(words)


def filter_sentence(text: str, denylist: set[str] | None = None) -> str | None:
    """Return None to keep the sentence, else the rejection reason.

    Rejects pipe-bearing lines, terminal colons/semicolons, operator
    denylist entries, and lines the terminal-punctuation-plus-capital
    heuristic flags as containing multiple sentences.
    """
    stripped = text.strip()
    if denylist and stripped in denylist:
        return "denylist"
    if "|" in stripped:
        return "pipe"
    if stripped.endswith(":"):
        return "terminal-colon"
    if stripped.endswith(";"):
        return "terminal-semicolon"
    if _SPLIT_RE.search(stripped):
        return "multi-sentence"
    return None


@dataclass
class SentencePool:
    """Length-bucketed sentences from one source, filters already applied."""

    source: str
    buckets: dict[int, list[str]] = field(default_factory=dict)
    histogram: Counter = field(default_factory=Counter)
    rejections: Counter = field(default_factory=Counter)

    def sentences(self, length: int | None = None) -> list[str]:
        if length is not None:
            return list(self.buckets.get(length, []))
        out: list[str] = []
        for n in sorted(self.buckets):
            out.extend(self.buckets[n])
        return out

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        files = {}
        for n in sorted(self.buckets):
            name = f"len_{n}.txt"
            with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
                for sentence in self.buckets[n]:
                    fh.write(sentence + "\n")
            files[str(n)] = name
        with open(os.path.join(directory, "histogram.csv"), "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["token_length", "count"])
            for n in sorted(self.histogram):
                writer.writerow([n, self.histogram[n]])
        manifest = {
            "source": self.source,
            "files": files,
            "counts": {str(n): len(v) for n, v in sorted(self.buckets.items())},
            "rejections": dict(sorted(self.rejections.items())),
        }
        with open(os.path.join(directory, "pool.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, directory, vocab: Vocabulary | None = None,
             lowercase: bool = True) -> "SentencePool":
        """Load a saved pool; with a vocabulary, self-check every sentence
        (filters pass, re-tokenization hits the bucket length)."""
        path = os.path.join(directory, "pool.json")
        try:
            with open(path, encoding="utf-8") as fh:
                manifest = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"cannot read pool manifest {path}: {exc}") from exc
        pool = cls(source=manifest.get("source", "unknown"))
        pool.rejections = Counter({k: int(v) for k, v in manifest.get("rejections", {}).items()})
        for key, name in manifest.get("files", {}).items():
            n = int(key)
            with open(os.path.join(directory, name), encoding="utf-8") as fh:
                sentences = [line.rstrip("\n") for line in fh if line.strip()]
            if vocab is not None:
                for sentence in sentences:
                    reason = filter_sentence(sentence)
                    if reason is not None:
                        raise DataFormatError(
                            f"pool {directory} bucket {n}: sentence fails filter ({reason}): {sentence!r}")
                    got = len(wordpiece_tokenize(vocab, sentence, lowercase=lowercase))
                    if got != n:
                        raise DataFormatError(
                            f"pool {directory} bucket {n}: sentence re-tokenizes to {got} tokens: {sentence!r}")
            pool.buckets[n] = sentences
        hist_path = os.path.join(directory, "histogram.csv")
        if os.path.exists(hist_path):
            with open(hist_path, encoding="utf-8", newline="") as fh:
                for row in list(csv.reader(fh))[1:]:
                    pool.histogram[int(row[0])] = int(row[1])
        else:
            pool.histogram = Counter({n: len(v) for n, v in pool.buckets.items()})
        return pool


def build_pool(lines: Iterable[str], vocab: Vocabulary, lengths: set[int],
               source: str = "corpus", lowercase: bool = True,
               denylist: set[str] | None = None) -> SentencePool:
    """Filter, tokenize, and bucket sentences by exact token length.

    All surviving lengths land in the histogram; only requested lengths
    are stored. An empty requested bucket warns rather than failing.
    """
    wanted = {int(n) for n in lengths}
    pool = SentencePool(source=source, buckets={n: [] for n in sorted(wanted)})
    for raw in lines:
        sentence = raw.rstrip("\n").strip()
        if not sentence:
            continue
        reason = filter_sentence(sentence, denylist=denylist)
        if reason is not None:
            pool.rejections[reason] += 1
            continue
        n = len(wordpiece_tokenize(vocab, sentence, lowercase=lowercase))
        pool.histogram[n] += 1
        if n in wanted:
            pool.buckets[n].append(sentence)
    for n in sorted(wanted):
        if not pool.buckets[n]:
            warnings.warn(f"no sentences of token length {n} in source {source!r}")
    return pool
