"""Distributional comparison engine: frequency tables with midrank ties,
Spearman correlation, Zipf tables, production ratios, CoNLL-U ingestion,
and dependency-length statistics."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError, UsageError


class FrequencyTable:
    """Label -> count with derived ranks (1 = most frequent, midrank ties)."""

    def __init__(self, counts: dict[str, int]):
        clean = {}
        for label, count in counts.items():
            c = int(count)
            if c < 1:
                raise UsageError(f"count for {label!r} must be >= 1, got {count}")
            clean[str(label)] = c
        self.counts = clean
        self.total = sum(clean.values())

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "FrequencyTable":
        counts = Counter(tokens)
        if not counts:
            raise UsageError("cannot build a frequency table from zero tokens")
        return cls(dict(counts))

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, label: str) -> bool:
        return label in self.counts

    def count(self, label: str) -> int:
        return self.counts.get(label, 0)

    def rel_freq(self, label: str) -> float:
        return self.counts.get(label, 0) / self.total

    def ranks(self, labels: Sequence[str] | None = None) -> dict[str, float]:
        """Midrank positions (descending count) over `labels` or the whole table."""
        chosen = list(self.counts) if labels is None else list(labels)
        missing = [l for l in chosen if l not in self.counts]
        if missing:
            raise UsageError(f"labels not in table: {missing[:3]}")
        return midranks({l: self.counts[l] for l in chosen})


def midranks(counts: dict[str, int]) -> dict[str, float]:
    """Rank 1 = highest count; ties share the average of their positions."""
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ranks: dict[str, float] = {}
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j][1] == ordered[i][1]:
            j += 1
        mid = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks[ordered[k][0]] = mid
        i = j
    return ranks


def shared_labels(a: FrequencyTable, b: FrequencyTable, min_count: int = 1) -> list[str]:
    return sorted(l for l in a.counts
                  if l in b.counts and a.counts[l] >= min_count and b.counts[l] >= min_count)


def spearman_rank_correlation(a: FrequencyTable, b: FrequencyTable,
                              min_count: int = 1) -> float | None:
    """Spearman rho over labels present in both tables with count >= min_count
    in each: Pearson correlation of midranks (the tie-corrected formula).
    Returns None when fewer than 3 labels qualify."""
    labels = shared_labels(a, b, min_count)
    if len(labels) < 3:
        return None
    ra = a.ranks(labels)
    rb = b.ranks(labels)
    x = np.array([ra[l] for l in labels])
    y = np.array([rb[l] for l in labels])
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        return None
    return float((dx @ dy) / math.sqrt(sx * sy))


@dataclass(frozen=True)
class ZipfRow:
    label: str
    rank_a: float
    freq_a: float
    rank_b: float
    freq_b: float


def zipf_table(a: FrequencyTable, b: FrequencyTable) -> list[ZipfRow]:
    """Rank/frequency rows over the shared-label subset, sorted by rank_a.

    Ranks are recomputed within the shared subset; frequencies are
    relative frequencies from the full tables.
    """
    labels = shared_labels(a, b)
    if not labels:
        warnings.warn("zipf table: the two tables share no labels")
        return []
    ra = a.ranks(labels)
    rb = b.ranks(labels)
    rows = [ZipfRow(l, ra[l], a.rel_freq(l), rb[l], b.rel_freq(l)) for l in labels]
    rows.sort(key=lambda r: (r.rank_a, r.label))
    return rows


def production_ratio(a: FrequencyTable, b: FrequencyTable,
                     smoothing: float = 1e-9) -> list[tuple[str, float]]:
    """log((p_a + s) / (p_b + s)) per label over the union, sorted descending.

    Positive values mean over-produced in `a`. With s = 0 a label missing
    from one side yields an infinite ratio.
    """
    if smoothing < 0:
        raise UsageError("smoothing must be nonnegative")
    labels = sorted(set(a.counts) | set(b.counts))
    out = []
    for label in labels:
        pa = a.rel_freq(label) + smoothing
        pb = b.rel_freq(label) + smoothing
        if pa == 0.0:
            value = float("-inf")
        elif pb == 0.0:
            value = float("inf")
        else:
            value = math.log(pa / pb)
        out.append((label, value))
    out.sort(key=lambda kv: (-kv[1], kv[0]))
    return out


@dataclass(frozen=True)
class ParsedSentence:
    """One dependency-parsed sentence; heads are 1-based, 0 marks the root."""

    forms: tuple[str, ...]
    upos: tuple[str, ...]
    heads: tuple[int, ...]
    deprels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.forms)


def _validate_tree(heads: Sequence[int]) -> str | None:
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h == 0]
    if len(roots) != 1:
        return f"expected exactly one root, found {len(roots)}"
    for h in heads:
        if not 0 <= h <= n:
            return f"head index {h} out of range 1..{n}"
    for start in range(n):
        seen = set()
        node = start
        while heads[node] != 0:
            if node in seen:
                return f"cyclic heads involving token {start + 1}"
            seen.add(node)
            node = heads[node] - 1
    return None


def ingest_conllu(source) -> list[ParsedSentence]:
    """Parse CoNLL-U text (path or iterable of lines) into ParsedSentences.

    Multiword-token ranges and empty nodes are skipped; enhanced
    dependencies and MISC are ignored. Structurally malformed lines raise
    with their line number; non-tree sentences (cycles, root count != 1)
    are dropped with a warning.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = list(source)

    sentences: list[ParsedSentence] = []
    forms: list[str] = []
    upos: list[str] = []
    heads: list[int] = []
    deprels: list[str] = []
    block_start = None

    def flush(lineno: int) -> None:
        nonlocal forms, upos, heads, deprels, block_start
        if not forms:
            block_start = None
            return
        problem = _validate_tree(heads)
        if problem is None:
            sentences.append(ParsedSentence(tuple(forms), tuple(upos),
                                            tuple(heads), tuple(deprels)))
        else:
            warnings.warn(f"line {block_start or lineno}: sentence rejected ({problem})")
        forms, upos, heads, deprels = [], [], [], []
        block_start = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise DataFormatError(f"line {lineno}: expected 10 tab-separated columns, got {len(cols)}")
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            continue
        if block_start is None:
            block_start = lineno
        try:
            int(token_id)
            head = int(cols[6])
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: non-integer ID or HEAD column") from exc
        forms.append(cols[1])
        upos.append(cols[3])
        heads.append(head)
        deprels.append(cols[7])
    flush(len(lines))
    return sentences


@dataclass(frozen=True)
class DependencyLengths:
    distances: tuple[int, ...]
    mean: float | None


def dependency_lengths(sentence: ParsedSentence) -> DependencyLengths:
    """Linear head-dependent distances, root arc excluded; mean over arcs.

    A single-token sentence has no non-root arcs and an undefined mean.
    """
    distances = []
    for pos, head in enumerate(sentence.heads, start=1):
        if head == 0:
            continue
        distances.append(abs(head - pos))
    mean = sum(distances) / len(distances) if distances else None
    return DependencyLengths(tuple(distances), mean)


def length_cdf(distances: Sequence[int]) -> list[tuple[int, float]]:
    """Empirical CDF over pooled arc distances: nondecreasing, ends at 1."""
    if not distances:
        return []
    counts = Counter(int(d) for d in distances)
    total = sum(counts.values())
    out = []
    running = 0
    for value in sorted(counts):
        running += counts[value]
        out.append((value, running / total))
    return out


@dataclass(frozen=True)
class LabelComparisonRow:
    label: str
    rel_a: float
    rel_b: float
    difference: float


def label_frequency_comparison(parses_a: Sequence[ParsedSentence],
                               parses_b: Sequence[ParsedSentence],
                               kind: str = "pos") -> list[LabelComparisonRow]:
    """Relative label frequencies per corpus, sorted by |difference|.

    kind "pos" compares UPOS tags, "dep" compares dependency relations.
    """
    if kind not in ("pos", "dep"):
        raise UsageError(f"kind must be 'pos' or 'dep', got {kind!r}")
    if not parses_a or not parses_b:
        raise UsageError("both parse sets must be nonempty")

    def collect(parses) -> Counter:
        c: Counter = Counter()
        for s in parses:
            c.update(s.upos if kind == "pos" else s.deprels)
        return c

    ca, cb = collect(parses_a), collect(parses_b)
    ta, tb = sum(ca.values()), sum(cb.values())
    rows = []
    for label in sorted(set(ca) | set(cb)):
        ra = ca.get(label, 0) / ta
        rb = cb.get(label, 0) / tb
        rows.append(LabelComparisonRow(label, ra, rb, ra - rb))
    rows.sort(key=lambda r: (-abs(r.difference), r.label))
    return rows
