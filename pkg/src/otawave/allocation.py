"""Closed-form MSE-optimal power control for sum computation over the air.

Devices are indexed in ascending order of channel gain.  The optimum puts the
``i_star`` weakest devices at full power and lets the rest invert their
channel; the solver enumerates every ``i`` and keeps the best feasible one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .moments import WaveformMoments


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelRealization:
    """Positive channel magnitudes; ``h`` is sorted, ``order`` maps back to input."""

    h: np.ndarray
    order: np.ndarray

    @classmethod
    def from_gains(cls, gains) -> ChannelRealization:
        g = np.asarray(gains, dtype=float).ravel()
        if g.size == 0 or np.any(~np.isfinite(g)) or np.any(g <= 0):
            raise AllocationError("channel gains must be finite and strictly positive")
        order = np.argsort(g, kind="stable")
        return cls(g[order], order)

    @property
    def K(self) -> int:
        return self.h.size


def _as_channels(h) -> ChannelRealization:
    return h if isinstance(h, ChannelRealization) else ChannelRealization.from_gains(h)


@dataclass(frozen=True)
class PowerAllocation:
    a: float
    b: np.ndarray
    i_star: int
    mse: float
    channels: ChannelRealization
    mse_candidates: np.ndarray | None = None

    def b_unsorted(self) -> np.ndarray:
        """Transmit gains in the caller's original device order."""
        out = np.empty_like(self.b)
        out[self.channels.order] = self.b
        return out


def kkt_batch(eps_check: float, eps_hat: float, h: np.ndarray, P: float, sigma2: float):
    """Vectorized policy for a stack of sorted channel rows ``h`` (n, K).

    Returns ``a`` (n,), ``b`` (n, K), ``i_star`` (n,) and the candidate
    objective table (n, K) with ``inf`` at infeasible ``i``.
    """
    if not eps_hat > 0:
        raise AllocationError("squared-amplitude moment must be positive")
    if not P > 0:
        raise AllocationError("P must be positive")
    if sigma2 < 0:
        raise AllocationError("sigma2 must be non-negative")
    h = np.atleast_2d(np.asarray(h, dtype=float))
    n, K = h.shape
    sp = np.sqrt(P)
    cs = np.cumsum(h, axis=1)
    cs2 = np.cumsum(h * h, axis=1)
    quad = P * eps_hat * cs2 + sigma2
    a_i = sp * eps_check * cs / quad
    i = np.arange(1, K + 1)
    mse_i = a_i**2 * quad - 2 * a_i * sp * eps_check * cs + (K - i) * (1 - eps_check**2 / eps_hat) + i
    feasible = np.ones((n, K), dtype=bool)
    # primal feasibility for the devices left inverting; vacuous at i = K
    feasible[:, :-1] = a_i[:, :-1] * sp * h[:, 1:] * eps_hat >= eps_check
    table = np.where(feasible, mse_i, np.inf)
    idx = np.argmin(table, axis=1)  # first minimum on ties
    rows = np.arange(n)
    a = a_i[rows, idx]
    i_star = idx + 1
    with np.errstate(divide="ignore"):
        inv = eps_check / (a[:, None] * h * eps_hat)
    b = np.where(i[None, :] <= i_star[:, None], sp, np.minimum(sp, inv))
    return a, b, i_star, table


def mse_closed_form(a: float, b, h, m: WaveformMoments, sigma2: float) -> float:
    """Average MSE of the received sum for gains ``a``, ``b`` on channels ``h``.

    ``h`` is taken in the same order as ``b``.
    """
    h = h.h if isinstance(h, ChannelRealization) else np.asarray(h, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape != h.shape:
        raise AllocationError("b and h must have the same length")
    g = a * b * h
    return float(np.sum(g * g * m.eps_tilde[0] + 1) - 2 * m.eps_check * np.sum(g)
                 + m.isi_sum * np.sum(g * g) + sigma2 * a * a)


def _solve(eps_check, eps_hat, m, h, P, sigma2) -> PowerAllocation:
    ch = _as_channels(h)
    a, b, i_star, table = kkt_batch(eps_check, eps_hat, ch.h[None, :], P, sigma2)
    a, b, i_star = float(a[0]), b[0], int(i_star[0])
    return PowerAllocation(a, b, i_star, mse_closed_form(a, b, ch, m, sigma2), ch, table[0])


def solve_no_isi(eps1: float, eps2: float, h, P: float, sigma2: float) -> PowerAllocation:
    """Optimal policy when sync errors are the only impairment."""
    m = WaveformMoments.from_scalars(eps1, eps2)
    return _solve(eps1, eps2, m, h, P, sigma2)


def solve_isi(m: WaveformMoments, h, P: float, sigma2: float) -> PowerAllocation:
    """Optimal policy under sync errors and ISI; depends on ``m`` only through
    ``eps_check`` and ``eps_hat``."""
    return _solve(m.eps_check, m.eps_hat, m, h, P, sigma2)


def oracle_grid_search(m: WaveformMoments, h, P: float, sigma2: float, grid: int = 2000) -> PowerAllocation:
    """Brute-force reference: scan the receiver gain, best-respond with ``b``.

    For fixed ``a`` the objective separates over devices and each ``b_k`` is
    clipped channel inversion.  The best grid point is polished with a
    bounded scalar search between its neighbours.
    """
    if grid < 1000:
        raise AllocationError("grid must be >= 1000")
    ch = _as_channels(h)
    sp = np.sqrt(P)
    ec, eh = m.eps_check, m.eps_hat

    def best_b(a):
        return np.minimum(sp, ec / (a * ch.h * eh))

    def objective(a):
        return mse_closed_form(a, best_b(a), ch, m, sigma2)

    cs, cs2 = np.cumsum(ch.h), np.cumsum(ch.h**2)
    cands = sp * ec * cs / (P * eh * cs2 + sigma2)
    lo, hi = cands.min() / 20, cands.max() * 20
    grid_a = np.geomspace(lo, hi, grid)
    g = grid_a[:, None] * np.minimum(sp, ec / (grid_a[:, None] * ch.h * eh)) * ch.h
    vals = ch.K + eh * np.sum(g * g, axis=1) - 2 * ec * g.sum(axis=1) + sigma2 * grid_a**2
    j = int(np.argmin(vals))
    left, right = grid_a[max(j - 1, 0)], grid_a[min(j + 1, grid - 1)]
    res = minimize_scalar(objective, bounds=(left, right), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, right)})
    a = float(res.x) if res.fun < vals[j] else float(grid_a[j])
    b = best_b(a)
    i_star = int(np.count_nonzero(b >= sp))
    return PowerAllocation(a, b, i_star, objective(a), ch)


def read_channels_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0].strip() != "h":
        raise AllocationError(f"{path}: expected header 'h'")
    return np.array([float(r[0]) for r in rows[1:] if r], dtype=float)


def write_allocation_csv(alloc: PowerAllocation, path) -> Path:
    """Per-device rows in the caller's order plus a key=value sidecar."""
    path = Path(path)
    h = np.empty_like(alloc.channels.h)
    h[alloc.channels.order] = alloc.channels.h
    b = alloc.b_unsorted()
    rank = np.empty(h.size, dtype=int)
    rank[alloc.channels.order] = np.arange(1, h.size + 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["device", "h", "b", "at_max_power"])
        for k in range(h.size):
            w.writerow([k, repr(float(h[k])), repr(float(b[k])), int(rank[k] <= alloc.i_star)])
    side = path.with_suffix(".txt")
    side.write_text(f"a={alloc.a!r}\ni_star={alloc.i_star}\nmse={alloc.mse!r}\n")
    return side
