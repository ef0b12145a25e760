"""Chain engines: GSN, fixed-order pseudo-Gibbs, and MH steps, plus the
epoch loop with the mixture reset kernel and burn-in/lag recording."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import NEG_INF, ConditionalModel, TokenSequence, energy_score, validate_distribution
from .errors import BackendError, DataFormatError, UsageError
from .wordpiece import detokenize

KERNELS = ("gsn", "fixed-order", "mh")

# The one generator the toolkit uses; recorded in chain metadata so runs
# stay reproducible across deployments.
RNG_NAME = "numpy-pcg64"


def make_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(chain_id,)))


@dataclass(frozen=True)
class ChainConfig:
    epochs: int
    burn_in: int = 1000
    lag: int = 500
    epsilon: float = 0.001
    kernel: str = "gsn"
    order: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.burn_in < 0 or self.lag < 0:
            raise UsageError("epochs, burn_in and lag must be nonnegative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise UsageError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.kernel not in KERNELS:
            raise UsageError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if self.order is not None:
            object.__setattr__(self, "order", tuple(int(k) for k in self.order))
            if self.kernel != "fixed-order":
                raise UsageError("order is only meaningful for the fixed-order kernel")

    def recorded_epochs(self) -> list[int]:
        """Epochs at which records are emitted: {m, m+l, ...} within the run."""
        if self.lag == 0:
            return [self.burn_in] if self.burn_in < self.epochs else []
        return list(range(self.burn_in, self.epochs, self.lag))

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "burn_in": self.burn_in,
            "lag": self.lag,
            "epsilon": self.epsilon,
            "kernel": self.kernel,
            "order": list(self.order) if self.order is not None else None,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ChainRecord:
    chain_id: int
    epoch: int
    tokens: TokenSequence
    text: str
    energy: float
    edits: int
    epochs_since_reset: int


@dataclass(frozen=True)
class TruncationMarker:
    """Emitted when a backend failure terminates a chain mid-run."""

    chain_id: int
    epoch: int
    reason: str


@dataclass
class MhStepResult:
    state: np.ndarray
    accepted: bool
    changed: bool
    energy: float


def _sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(p)
    cum /= cum[-1]
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(idx, p.shape[0] - 1)


def _checked_query(model: ConditionalModel, state, site: int) -> np.ndarray:
    p = model.query(state, site)
    total = float(p.sum())
    if p.min() < 0.0 or not abs(total - 1.0) <= 1e-9 or math.isnan(total):
        reason = validate_distribution(p, size=model.vocab.size) or f"bad sum {total!r}"
        raise BackendError(f"invalid conditional at site {site}: {reason}", site=site)
    return p


def _resample_site(model: ConditionalModel, state: np.ndarray, site: int,
                   rng: np.random.Generator) -> bool:
    p = _checked_query(model, state, site)
    new = _sample_index(p, rng)
    changed = new != int(state[site])
    state[site] = new
    return changed


def gsn_step(model: ConditionalModel, state: np.ndarray,
             rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """One GSN update: mask a uniformly chosen site, resample it in place."""
    site = int(rng.integers(model.length))
    changed = _resample_site(model, state, site, rng)
    return state, changed


def _energy_with_site_term(model: ConditionalModel, state, site: int,
                           site_term: float) -> float:
    """Energy of `state` reusing a precomputed log-term for one site."""
    if site_term == NEG_INF:
        return NEG_INF
    total = site_term
    for j in range(model.length):
        if j == site:
            continue
        p = _checked_query(model, state, j)
        prob = float(p[state[j]])
        if prob <= 0.0:
            return NEG_INF
        total += math.log(prob)
    return total


def mh_step(model: ConditionalModel, state: np.ndarray, rng: np.random.Generator,
            energy: float | None = None) -> MhStepResult:
    """One MH update with the GSN move as proposal.

    `energy` is the cached pseudo-log-likelihood of the current state;
    passing None recomputes it from scratch. The returned energy always
    matches the returned state, so callers can thread it through a chain
    and never rescore accepted states (the incremental scheme).
    """
    if energy is None:
        energy = energy_score(model, state)
    site = int(rng.integers(model.length))
    p = _checked_query(model, state, site)
    proposal = _sample_index(p, rng)
    accept_draw = rng.random()
    current = int(state[site])
    if proposal == current:
        return MhStepResult(state, True, False, energy)

    q_fwd = float(p[proposal])
    q_rev = float(p[current])
    state[site] = proposal
    term = math.log(q_fwd) if q_fwd > 0.0 else NEG_INF
    proposal_energy = _energy_with_site_term(model, state, site, term)
    state[site] = current

    if energy == NEG_INF:
        # a dead current state never blocks movement, even toward another
        # dead state (otherwise a reset would freeze the chain)
        alpha = 1.0
    elif proposal_energy == NEG_INF or q_rev <= 0.0:
        alpha = 0.0
    else:
        log_alpha = proposal_energy + math.log(q_rev) - energy - math.log(q_fwd)
        alpha = math.exp(min(log_alpha, 0.0))

    if alpha >= 1.0 or accept_draw < alpha:
        state[site] = proposal
        return MhStepResult(state, True, True, proposal_energy)
    return MhStepResult(state, False, False, energy)


def _record_energy(model: ConditionalModel, state: np.ndarray) -> float:
    # the all-mask reset state scores -inf by convention; backends whose
    # mask has zero conditional mass produce the same value naturally
    if (state == model.vocab.mask_id).all():
        return NEG_INF
    return energy_score(model, state)


def run_chain(model: ConditionalModel, config: ChainConfig,
              init: TokenSequence | None = None,
              chain_id: int = 0) -> Iterator[ChainRecord | TruncationMarker]:
    """Run one chain; yield a ChainRecord per scheduled epoch.

    One epoch is `n` single-site steps. Before each epoch the state
    resets to all-mask with probability epsilon. Records are never
    suppressed after a reset; `epochs_since_reset` is logged instead so
    post-reset transients can be filtered at analysis time. A backend
    failure ends the stream with a TruncationMarker.
    """
    n = model.length
    order = config.order if config.order is not None else tuple(range(n))
    if config.kernel == "fixed-order" and sorted(order) != list(range(n)):
        raise UsageError(f"order {order} is not a permutation of 0..{n - 1}")
    if init is not None:
        if len(init) != n:
            raise UsageError(f"init length {len(init)} != model length {n}")
        init.validate(model.vocab)
        state = np.asarray(init.ids, dtype=np.int64).copy()
    else:
        state = np.full(n, model.vocab.mask_id, dtype=np.int64)

    rng = make_rng(config.seed, chain_id)
    recorded = set(config.recorded_epochs())
    last_reset = 0
    cached_energy: float | None = None

    for epoch in range(config.epochs):
        try:
            if rng.random() < config.epsilon:
                state[:] = model.vocab.mask_id
                last_reset = epoch
                cached_energy = None
            edits = 0
            if config.kernel == "gsn":
                for _ in range(n):
                    _, changed = gsn_step(model, state, rng)
                    edits += changed
            elif config.kernel == "fixed-order":
                for site in order:
                    edits += _resample_site(model, state, site, rng)
            else:
                for _ in range(n):
                    step = mh_step(model, state, rng, cached_energy)
                    cached_energy = step.energy
                    edits += step.changed
            if epoch in recorded:
                yield ChainRecord(
                    chain_id=chain_id,
                    epoch=epoch,
                    tokens=TokenSequence(tuple(int(t) for t in state)),
                    text=detokenize(model.vocab, state),
                    energy=_record_energy(model, state),
                    edits=int(edits),
                    epochs_since_reset=epoch - last_reset,
                )
        except BackendError as exc:
            yield TruncationMarker(chain_id=chain_id, epoch=epoch, reason=str(exc))
            return


def record_to_json(rec: ChainRecord | TruncationMarker) -> dict:
    if isinstance(rec, TruncationMarker):
        return {"truncated": True, "chain": rec.chain_id, "epoch": rec.epoch,
                "reason": rec.reason}
    return {
        "chain": rec.chain_id,
        "epoch": rec.epoch,
        "ids": list(rec.tokens.ids),
        "text": rec.text,
        "energy": None if rec.energy == NEG_INF else rec.energy,
        "edits": rec.edits,
        "since_reset": rec.epochs_since_reset,
    }


def record_from_json(doc: dict) -> ChainRecord | TruncationMarker:
    try:
        if doc.get("truncated"):
            return TruncationMarker(chain_id=int(doc["chain"]), epoch=int(doc["epoch"]),
                                    reason=str(doc.get("reason", "")))
        energy = doc["energy"]
        return ChainRecord(
            chain_id=int(doc["chain"]),
            epoch=int(doc["epoch"]),
            tokens=TokenSequence(tuple(int(t) for t in doc["ids"])),
            text=str(doc["text"]),
            energy=NEG_INF if energy is None else float(energy),
            edits=int(doc["edits"]),
            epochs_since_reset=int(doc["since_reset"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad chain record {doc!r}: {exc}") from exc


def write_chain_jsonl(path, meta: dict, records) -> None:
    """One metadata header line, then one JSON object per record."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")


def read_chain_jsonl(path) -> tuple[dict, list]:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in (l.strip() for l in fh) if line]
    if not lines:
        raise DataFormatError(f"{path}: empty chain file")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}:1: {exc}") from exc
    if "meta" not in head:
        raise DataFormatError(f"{path}: first line must be the metadata header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            records.append(record_from_json(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return head["meta"], records
