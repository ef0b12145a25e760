"""Convergence, independence, and stickiness diagnostics over chain logs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonConvergenceError, UsageError
from .tabular import TransitionMatrix, stationary_distribution, tv_distance


@dataclass(frozen=True)
class AcfResult:
    lag: int
    r: float | None
    n_pairs: int
    reason: str | None = None


def autocorrelation(series: Sequence[float], lag: int) -> AcfResult:
    """Pearson correlation of (x_t, x_{t+lag}) over the energy series.

    -inf entries (reset states) are dropped pairwise, never imputed.
    Undefined (r=None, with reason) when fewer than 3 valid pairs remain
    or either slice has zero variance.
    """
    values = np.asarray(series, dtype=float)
    if lag < 0:
        raise UsageError("lag must be nonnegative")
    if lag >= values.shape[0]:
        raise UsageError(f"lag {lag} not below series length {values.shape[0]}")
    x = values[: values.shape[0] - lag] if lag else values
    y = values[lag:] if lag else values
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    n_pairs = int(x.shape[0])
    if n_pairs < 3:
        return AcfResult(lag, None, n_pairs, "fewer than 3 valid pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        return AcfResult(lag, None, n_pairs, "zero variance")
    if lag == 0:
        return AcfResult(lag, 1.0, n_pairs)
    r = float((dx @ dy) / math.sqrt(sx * sy))
    return AcfResult(lag, max(-1.0, min(1.0, r)), n_pairs)


def acf_profile(series: Sequence[float], lags: Sequence[int]) -> list[AcfResult]:
    return [autocorrelation(series, lag) for lag in lags]


@dataclass(frozen=True)
class EditProfile:
    edits: tuple[int, ...]
    max_zero_run: int


def edit_rate_profile(edits: Sequence[int]) -> EditProfile:
    """Per-epoch edit series plus the longest run of zero-edit epochs."""
    seq = tuple(int(e) for e in edits)
    longest = current = 0
    for e in seq:
        if e == 0:
            current += 1
            longest = max(longest, current)
        else:
            current = 0
    return EditProfile(seq, longest)


def _check_bound_params(delta: float, k: int, eps: float) -> None:
    if not 0.0 < delta < 1.0:
        raise UsageError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < eps < 1.0:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    if k < 1:
        raise UsageError(f"k must be at least 1, got {k}")


def _smallest_count(log_base: float, log_eps: float) -> int:
    """Smallest integer n with n * log_base < log_eps (log_base < 0)."""
    estimate = math.floor(log_eps / log_base) + 1
    if estimate < 1:
        estimate = 1
    # only trust +/-1 adjustment where integers are exact in float64
    if estimate < 2 ** 52:
        while estimate > 1 and (estimate - 1) * log_base < log_eps:
            estimate -= 1
        while not estimate * log_base < log_eps:
            estimate += 1
    return int(estimate)


def independence_epochs(delta: float, k: int, eps: float) -> int:
    """Smallest epoch count n with delta^(k*n) < eps.

    Worst-case bound on re-sampling the same length-k sentence when every
    per-site conditional keeps its token with probability < delta.
    """
    _check_bound_params(delta, k, eps)
    return _smallest_count(k * math.log(delta), math.log(eps))


def turnover_epochs(delta: float, k: int, eps: float) -> int:
    """Smallest n with [1 - (1-delta)^k]^n < eps: full-turnover worst case.

    The base sits next to 1, so its log goes through log1p; counts can be
    astronomically large and come back as exact ints only within float64
    integer range.
    """
    _check_bound_params(delta, k, eps)
    if k == 1:
        # identical reduction to the independence bound; share its rounding
        log_base = math.log(delta)
    else:
        log_base = math.log1p(-((1.0 - delta) ** k))
    if log_base == 0.0:
        raise UsageError("turnover bound degenerate: (1-delta)^k underflowed to 0")
    return _smallest_count(log_base, math.log(eps))


def mixing_time_estimate(T: TransitionMatrix, start, tol: float,
                         max_steps: int = 10 ** 6) -> int:
    """Steps until TV(start * T^t, stationary) < tol, by iterated multiplication."""
    if tol <= 0:
        raise UsageError("tol must be positive")
    pi = stationary_distribution(T)
    if isinstance(start, (int, np.integer)):
        rho = np.zeros(T.size)
        rho[int(start)] = 1.0
    else:
        rho = np.asarray(start, dtype=float)
        if rho.shape != (T.size,):
            raise UsageError(f"start must be a state index or a length-{T.size} vector")
    transposed = T.matrix.T.tocsr()
    for t in range(max_steps + 1):
        if tv_distance(rho, pi) < tol:
            return t
        rho = transposed @ rho
    raise NonConvergenceError(
        f"TV did not drop below {tol} within {max_steps} steps",
        last_gap=tv_distance(rho, pi),
    )
