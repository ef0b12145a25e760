"""Exact small-scale dependency networks and brute-force stationary
distribution oracles.

Everything here works on an enumerable state space of V**n sequences so
that the sampling theory (random-scan consistency, fixed-order order
dependence, the MH energy target) can be checked against power-iteration
ground truth instead of simulation noise.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .core import ConditionalModel, Vocabulary
from .errors import DataFormatError, NonConvergenceError, UsageError

# V**n above this is rejected outright; power iteration stays in memory.
STATE_CAP = 100_000

ROW_SUM_TOL = 1e-10
JOINT_SUM_TOL = 1e-12


def _check_cap(V: int, n: int) -> int:
    if V < 1 or n < 1:
        raise UsageError(f"need V >= 1 and n >= 1, got V={V}, n={n}")
    size = V ** n
    if size > STATE_CAP:
        raise UsageError(f"state space V^n = {size} exceeds cap {STATE_CAP}")
    return size


def state_index(ids, V: int) -> int:
    """Mixed-radix (big-endian) encoding of a sequence into a state index."""
    idx = 0
    for tid in ids:
        idx = idx * V + int(tid)
    return idx


def state_tuple(index: int, V: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        index, digit = divmod(index, V)
        out.append(digit)
    return tuple(reversed(out))


def _digit_matrix(V: int, n: int) -> np.ndarray:
    """(V**n, n) array of per-site values for every state index."""
    size = V ** n
    states = np.arange(size)
    digits = np.empty((size, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        states, digits[:, j] = np.divmod(states, V)
    return digits


@dataclass(frozen=True)
class ExactJoint:
    """Explicit probability table over all V**n sequences."""

    V: int
    n: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        size = _check_cap(self.V, self.n)
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (size,):
            raise UsageError(f"joint must have {size} entries, got shape {probs.shape}")
        if (probs < 0).any():
            raise UsageError("joint probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > JOINT_SUM_TOL:
            raise UsageError(f"joint sums to {probs.sum()!r}, not 1 within {JOINT_SUM_TOL}")
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.V ** self.n

    def prob(self, ids) -> float:
        return float(self.probs[state_index(ids, self.V)])

    @classmethod
    def uniform(cls, V: int, n: int) -> "ExactJoint":
        size = _check_cap(V, n)
        return cls(V, n, np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, V: int, n: int, ids) -> "ExactJoint":
        size = _check_cap(V, n)
        probs = np.zeros(size)
        probs[state_index(ids, V)] = 1.0
        return cls(V, n, probs)

    @classmethod
    def random_dirichlet(cls, V: int, n: int, seed: int, alpha: float = 1.0) -> "ExactJoint":
        size = _check_cap(V, n)
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.full(size, alpha))
        return cls(V, n, probs / probs.sum())

    def to_json(self) -> dict:
        return {"V": self.V, "n": self.n, "joint": self.probs.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "ExactJoint":
        try:
            return cls(int(doc["V"]), int(doc["n"]), np.asarray(doc["joint"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad ExactJoint document: {exc}") from exc


@dataclass(frozen=True)
class ConditionalTable:
    """Per-site conditionals P(w_k | w_-k), one vector per (site, context).

    `table[k, c]` is the distribution of site k given context index c,
    where c is the big-endian mixed-radix encoding of the other sites in
    site order. Tables may be mutually inconsistent by construction.
    """

    V: int
    n: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_cap(self.V, self.n)
        table = np.asarray(self.table, dtype=float)
        expected = (self.n, self.V ** (self.n - 1), self.V)
        if table.shape != expected:
            raise UsageError(f"conditional table must have shape {expected}, got {table.shape}")
        if (table < 0).any() or np.isnan(table).any():
            raise UsageError("conditional table entries must be nonnegative numbers")
        sums = table.sum(axis=2)
        if np.abs(sums - 1.0).max() > 1e-9:
            bad = np.unravel_index(int(np.abs(sums - 1.0).argmax()), sums.shape)
            raise UsageError(f"conditional vector at site {bad[0]}, context {bad[1]} sums to {sums[bad]!r}")
        object.__setattr__(self, "table", table)

    def context_index(self, ids, site: int) -> int:
        idx = 0
        for j, tid in enumerate(ids):
            if j != site:
                idx = idx * self.V + int(tid)
        return idx

    def query(self, ids, site: int) -> np.ndarray:
        return self.table[site, self.context_index(ids, site)]

    def perturbed(self, site: int = 0, context: int = 0, token: int = 0,
                  delta: float = 0.2) -> "ConditionalTable":
        """Inject inconsistency: bump one conditional entry by delta, renormalize.

        The result generally violates Bayes rule against the other sites'
        conditionals, which is exactly what the order-dependence checks need.
        """
        table = self.table.copy()
        row = table[site, context].copy()
        row[token] += delta
        table[site, context] = row / row.sum()
        return ConditionalTable(self.V, self.n, table)

    def to_json(self) -> dict:
        return {"V": self.V, "n": self.n, "conditionals": self.table.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "ConditionalTable":
        try:
            return cls(int(doc["V"]), int(doc["n"]), np.asarray(doc["conditionals"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad ConditionalTable document: {exc}") from exc

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(f"{self.V},{self.n};".encode())
        digest.update(np.ascontiguousarray(self.table).tobytes())
        return digest.hexdigest()[:16]


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic kernel over the V**n state space (sparse CSR)."""

    V: int
    n: int
    kernel: str
    matrix: sparse.csr_matrix = field(repr=False)

    def __post_init__(self):
        size = self.V ** self.n
        if self.matrix.shape != (size, size):
            raise UsageError(f"transition matrix must be {size}x{size}, got {self.matrix.shape}")
        if self.matrix.data.size and self.matrix.data.min() < -ROW_SUM_TOL:
            raise UsageError("transition matrix has negative entries")
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        worst = float(np.abs(rows - 1.0).max()) if rows.size else 0.0
        if worst > ROW_SUM_TOL:
            raise UsageError(f"transition matrix rows deviate from 1 by {worst!r}")

    @property
    def size(self) -> int:
        return self.V ** self.n

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def row(self, state: int) -> np.ndarray:
        return np.asarray(self.matrix.getrow(state).todense()).ravel()


def derive_conditionals(joint: ExactJoint) -> ConditionalTable:
    """Exact conditionals of a joint; zero-marginal contexts get uniform rows.

    Such contexts are unreachable under the joint, so any proper choice
    leaves the oracle results untouched.
    """
    V, n = joint.V, joint.n
    grid = joint.probs.reshape([V] * n) if n > 1 else joint.probs.reshape([V])
    rows = []
    for k in range(n):
        moved = np.moveaxis(grid, k, -1).reshape(V ** (n - 1), V) if n > 1 else grid.reshape(1, V)
        marg = moved.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = moved / marg[:, None]
        cond[marg == 0] = 1.0 / V
        rows.append(cond)
    return ConditionalTable(V, n, np.stack(rows))


def _site_entries(cond: ConditionalTable, digits: np.ndarray, site: int):
    """(source, target, prob) arrays for replacing `site` with every value."""
    V, n = cond.V, cond.n
    size = V ** n
    weight = V ** (n - 1 - site)
    others = [j for j in range(n) if j != site]
    ctx = np.zeros(size, dtype=np.int64)
    for j in others:
        ctx = ctx * V + digits[:, j]
    base = np.arange(size) - digits[:, site] * weight
    src = np.repeat(np.arange(size), V)
    dst = (base[:, None] + np.arange(V)[None, :] * weight).ravel()
    prob = cond.table[site, ctx, :].ravel()
    return src, dst, prob, ctx


def gsn_transition_matrix(cond: ConditionalTable) -> TransitionMatrix:
    """Random-scan kernel: pick a site uniformly, resample it from P(.|w_-k).

    T(x -> x') = (1/n) * sum_k 1[x'_-k = x_-k] * P(w_k = x'_k | x_-k);
    self-transitions from different sites accumulate on the diagonal.
    """
    V, n = cond.V, cond.n
    size = _check_cap(V, n)
    digits = _digit_matrix(V, n)
    srcs, dsts, vals = [], [], []
    for k in range(n):
        src, dst, prob, _ = _site_entries(cond, digits, k)
        srcs.append(src)
        dsts.append(dst)
        vals.append(prob / n)
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(srcs), np.concatenate(dsts))),
        shape=(size, size),
    ).tocsr()
    return TransitionMatrix(V, n, "gsn", mat)


def fixed_order_transition_matrix(cond: ConditionalTable, order) -> TransitionMatrix:
    """One full sweep of single-site updates in the given site order.

    Meant for small oracle instances: the sweep product fills in, so its
    memory cost grows with V**n even though each factor is sparse.
    """
    V, n = cond.V, cond.n
    size = _check_cap(V, n)
    order = tuple(int(k) for k in order)
    if sorted(order) != list(range(n)):
        raise UsageError(f"order {order} is not a permutation of 0..{n - 1}")
    digits = _digit_matrix(V, n)
    product = None
    for k in order:
        src, dst, prob, _ = _site_entries(cond, digits, k)
        step = sparse.coo_matrix((prob, (src, dst)), shape=(size, size)).tocsr()
        product = step if product is None else product @ step
    return TransitionMatrix(V, n, "fixed-order", product.tocsr())


def pseudo_loglik(cond: ConditionalTable) -> np.ndarray:
    """Energy s(x) = sum_k log P(x_k | x_-k) for every state (with -inf)."""
    V, n = cond.V, cond.n
    size = V ** n
    digits = _digit_matrix(V, n)
    energy = np.zeros(size)
    for k in range(n):
        others = [j for j in range(n) if j != k]
        ctx = np.zeros(size, dtype=np.int64)
        for j in others:
            ctx = ctx * V + digits[:, j]
        with np.errstate(divide="ignore"):
            energy += np.log(cond.table[k, ctx, digits[:, k]])
    return energy


def mh_transition_matrix(cond: ConditionalTable) -> TransitionMatrix:
    """Metropolis-Hastings kernel with the GSN move as proposal.

    Target is the energy-based pseudo-likelihood: acceptance
    alpha = min(1, exp(s(x')) q(x|x') / (exp(s(x)) q(x'|x))) with
    s = pseudo_loglik; rejected mass stays on the diagonal. States of
    zero target mass are never entered from live states, while moves
    between two zero-mass states are accepted so the kernel cannot trap
    a chain that was reset into the dead region.
    """
    V, n = cond.V, cond.n
    size = _check_cap(V, n)
    digits = _digit_matrix(V, n)
    energy = pseudo_loglik(cond)
    srcs, dsts, vals = [], [], []
    for k in range(n):
        src, dst, prob, ctx = _site_entries(cond, digits, k)
        q_fwd = prob / n
        # reverse proposal: from dst back to src, same context, source digit
        q_rev = cond.table[k, ctx, :][np.arange(size), digits[:, k]]
        q_rev = np.repeat(q_rev, V) / n
        e_src = energy[src]
        e_dst = energy[dst]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = e_dst + np.log(q_rev) - e_src - np.log(q_fwd)
        alpha = np.where(np.isnan(log_ratio), 1.0, np.exp(np.minimum(log_ratio, 0.0)))
        alpha = np.where(np.isneginf(e_dst) & np.isfinite(e_src), 0.0, alpha)
        alpha = np.where(np.isneginf(e_src) & np.isfinite(e_dst), 1.0, alpha)
        alpha = np.where(np.isneginf(e_src) & np.isneginf(e_dst), 1.0, alpha)
        alpha = np.where(q_rev == 0.0, np.where(np.isneginf(e_src), alpha, 0.0), alpha)
        keep = dst != src
        flow = q_fwd * alpha
        srcs.append(src[keep])
        dsts.append(dst[keep])
        vals.append(flow[keep])
    off = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(srcs), np.concatenate(dsts))),
        shape=(size, size),
    ).tocsr()
    diag = 1.0 - np.asarray(off.sum(axis=1)).ravel()
    mat = (off + sparse.diags(diag)).tocsr()
    return TransitionMatrix(V, n, "mh", mat)


def mh_target_distribution(cond: ConditionalTable) -> np.ndarray:
    """Normalized exp(pseudo_loglik): the distribution MH actually samples."""
    energy = pseudo_loglik(cond)
    finite = np.isfinite(energy)
    if not finite.any():
        raise UsageError("pseudo-likelihood is -inf everywhere; target undefined")
    out = np.zeros_like(energy)
    shifted = energy[finite] - energy[finite].max()
    out[finite] = np.exp(shifted)
    return out / out.sum()


def tv_distance(p, q) -> float:
    """Total variation distance: half the L1 distance between distributions."""
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    if pv.shape != qv.shape:
        raise UsageError(f"length mismatch: {pv.shape} vs {qv.shape}")
    return 0.5 * float(np.abs(pv - qv).sum())


def stationary_distribution(T: TransitionMatrix, start=None, tol: float = 1e-12,
                            max_iter: int = 10 ** 6) -> np.ndarray:
    """Power-iterate row vectors until successive iterates differ by < tol TV.

    Reducible kernels converge to a start-dependent fixed point; callers
    that need ergodicity must arrange it (mixture kernel or strictly
    positive conditionals).
    """
    size = T.size
    if start is None:
        rho = np.full(size, 1.0 / size)
    else:
        rho = np.asarray(start, dtype=float)
        if rho.shape != (size,):
            raise UsageError(f"start vector must have length {size}")
    transposed = T.matrix.T.tocsr()
    gap = None
    for _ in range(max_iter):
        nxt = transposed @ rho
        gap = tv_distance(nxt, rho)
        rho = nxt
        if gap < tol:
            return rho / rho.sum()
    raise NonConvergenceError(
        f"power iteration did not reach TV < {tol} in {max_iter} steps (last gap {gap!r})",
        last_gap=gap,
    )


class TabularModel(ConditionalModel):
    """ConditionalModel backend over an explicit conditional table.

    The vocabulary carries one extra symbol, "[MASK]", with id V. It has
    zero mass under every conditional, so it only ever enters a chain
    through the mixture-kernel reset; any context still containing masks
    falls back to the uniform distribution over the real tokens.
    """

    def __init__(self, cond: ConditionalTable, tokens=None):
        self.cond = cond
        real = tuple(tokens) if tokens is not None else tuple(f"w{i}" for i in range(cond.V))
        if len(real) != cond.V:
            raise UsageError(f"need {cond.V} token names, got {len(real)}")
        self.vocab = Vocabulary(tokens=real + ("[MASK]",), mask_id=cond.V, unk_id=cond.V)
        self.length = cond.n

    def query(self, ids, site: int) -> np.ndarray:
        self._check_site(ids, site)
        V = self.cond.V
        out = np.zeros(V + 1)
        if any(ids[j] >= V for j in range(self.length) if j != site):
            out[:V] = 1.0 / V
        else:
            out[:V] = self.cond.table[site, self.cond.context_index(ids, site)]
        return out

    def fingerprint(self) -> str:
        return "tabular:" + self.cond.fingerprint()


def save_fixture(path, joint: ExactJoint | None = None,
                 cond: ConditionalTable | None = None) -> None:
    """Write a JSON fixture holding a joint, a conditional table, or both."""
    if joint is None and cond is None:
        raise UsageError("fixture needs a joint or a conditional table")
    doc = {}
    if joint is not None:
        doc.update(joint.to_json())
    if cond is not None:
        doc.update(cond.to_json())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_fixture(path) -> tuple[ExactJoint | None, ConditionalTable]:
    """Read a fixture; derives the conditionals when only a joint is given."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read fixture {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataFormatError(f"fixture {path} must hold a JSON object")
    joint = ExactJoint.from_json(doc) if "joint" in doc else None
    if "conditionals" in doc:
        cond = ConditionalTable.from_json(doc)
    elif joint is not None:
        cond = derive_conditionals(joint)
    else:
        raise DataFormatError(f"fixture {path} holds neither a joint nor conditionals")
    if joint is not None and (joint.V != cond.V or joint.n != cond.n):
        raise DataFormatError(f"fixture {path} mixes incompatible joint and conditionals")
    return joint, cond
