"""Statistics of a pulse sampled at Gaussian-jittered instants.

The production path is Gauss-Hermite quadrature (:func:`moment_quadrature`,
:func:`all_moments`).  The power series for the raised cosine are kept as an
independent check on the quadrature and on the first-order approximation of
``1 / (1 - 4 alpha^2 eps^2)`` they are built on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np

from .waveforms import WaveformSpec, sample

MAX_SERIES_SIGMA = 0.25
INNER_CUTOFF = 1e-16


class MomentDomainError(ValueError):
    pass


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def gaussian_even_moment(k: int, sigma: float) -> float:
    """E[X^(2k)] for X ~ N(0, sigma^2)."""
    return sigma ** (2 * k) * double_factorial(2 * k - 1)


def _check_sigma(sigma_eps: float) -> None:
    if sigma_eps < 0:
        raise MomentDomainError("sigma_eps must be non-negative")
    if sigma_eps >= 0.5:
        raise MomentDomainError(
            "geometric expansion of 1/(1 - 4 alpha^2 eps^2) diverges for sigma_eps >= 0.5"
        )


@lru_cache(maxsize=None)
def kappa(m: int, alpha: float) -> float:
    """Coefficient of eps^(2m) in sinc(eps) * cos(pi alpha eps)."""
    return math.fsum(
        (-1) ** m * math.pi ** (2 * m) * alpha ** (2 * (m - n))
        / (math.factorial(2 * n + 1) * math.factorial(2 * m - 2 * n))
        for n in range(m + 1)
    )


@lru_cache(maxsize=None)
def lam(p: int, alpha: float) -> float:
    """Coefficient of eps^(2p) in [sinc(eps) * cos(pi alpha eps)]^2."""
    terms = []
    for n in range(p + 1):
        for l in range(p - n + 1):
            for k in range(p - n - l + 1):
                terms.append(
                    (-1) ** p * math.pi ** (2 * p) * alpha ** (2 * (p - l - n))
                    / (
                        math.factorial(2 * n + 1)
                        * math.factorial(2 * l + 1)
                        * math.factorial(2 * k)
                        * math.factorial(2 * (p - n - l - k))
                    )
                )
    return math.fsum(terms)


def mean_amp_series(alpha: float, sigma_eps: float, m_max: int = 16) -> float:
    """E[z_RC(eps)] from the first-order geometric approximation.

    Keeps ``1 + 4 alpha^2 eps^2`` of the expansion of the RC denominator, so the
    result is exact for the integrand ``g(eps) (1 + 4 alpha^2 eps^2)`` but
    carries an O(alpha^4 sigma^4) bias relative to the true pulse.
    """
    _check_sigma(sigma_eps)
    if m_max < 1:
        raise MomentDomainError("m_max must be >= 1")
    s = sigma_eps
    head = [1.0] + [kappa(m, alpha) * gaussian_even_moment(m, s) for m in range(1, m_max + 1)]
    tail = [kappa(m, alpha) * gaussian_even_moment(m + 1, s) for m in range(m_max + 1)]
    return math.fsum(head) + 4 * alpha**2 * math.fsum(tail)


def mean_sq_series(alpha: float, sigma_eps: float, p_max: int = 16) -> float:
    """E[z_RC(eps)^2] from the same first-order approximation, squared."""
    _check_sigma(sigma_eps)
    if p_max < 1:
        raise MomentDomainError("p_max must be >= 1")
    s = sigma_eps
    t0 = [1.0] + [lam(p, alpha) * gaussian_even_moment(p, s) for p in range(1, p_max + 1)]
    t1 = [lam(p, alpha) * gaussian_even_moment(p + 1, s) for p in range(p_max + 1)]
    t2 = [lam(p, alpha) * gaussian_even_moment(p + 2, s) for p in range(p_max + 1)]
    return math.fsum(t0) + 8 * alpha**2 * math.fsum(t1) + 16 * alpha**4 * math.fsum(t2)


def rc_taylor_coeffs(alpha: float, n_terms: int) -> np.ndarray:
    """Coefficients c_m of eps^(2m) in the exact Taylor series of z_RC.

    Cauchy product of sinc*cos with the full geometric series, done in
    extended precision: the partial sums cancel by ~(4 alpha^2)^m.
    z_RC is entire, so the resulting series converges for every sigma.
    """
    with mpmath.workdps(30 + int(n_terms * 0.7)):
        a2 = mpmath.mpf(alpha) ** 2
        pi2 = mpmath.pi**2
        kap = [
            mpmath.fsum(
                (-1) ** m * pi2**m * a2 ** (m - n)
                / (mpmath.factorial(2 * n + 1) * mpmath.factorial(2 * m - 2 * n))
                for n in range(m + 1)
            )
            for m in range(n_terms)
        ]
        geo = [(4 * a2) ** j for j in range(n_terms)]
        c = [mpmath.fsum(kap[j] * geo[m - j] for j in range(m + 1)) for m in range(n_terms)]
        return np.array([float(v) for v in c])


def rc_moment_exact_series(alpha: float, sigma_eps: float, power: int = 1, n_terms: int = 64) -> float:
    """E[z_RC(eps)^power] summing the exact Taylor series of the pulse."""
    if sigma_eps < 0:
        raise MomentDomainError("sigma_eps must be non-negative")
    c = rc_taylor_coeffs(alpha, n_terms)
    if power == 2:
        c = np.convolve(c, c)[:n_terms]
    elif power != 1:
        raise ValueError("power must be 1 or 2")
    mom = np.array([gaussian_even_moment(m, sigma_eps) for m in range(n_terms)], dtype=float)
    return math.fsum(c * mom)


@lru_cache(maxsize=None)
def _sinc_shift_coeffs(n_terms: int, n_max: int) -> tuple[float, ...]:
    # s_k: coefficient of eps^k in sinc(1 + eps); odd k are the A_k, even k the B_k
    out = []
    for k in range(n_terms):
        terms = []
        for l in range((k + 1) // 2, n_max + 1):
            t = (-1) ** l * math.pi ** (2 * l) / math.factorial(2 * l + 1) * math.comb(2 * l, k)
            terms.append(t)
            if abs(t) < INNER_CUTOFF and 2 * l > k + 10:
                break
        out.append(math.fsum(terms))
    return tuple(out)


def isi_series_coeffs(n_terms: int, n_max: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """A_n (odd n) and B_n (even n) of the shifted-sinc expansion."""
    s = np.array(_sinc_shift_coeffs(n_terms, n_max))
    odd = np.arange(n_terms) % 2 == 1
    return np.where(odd, s, 0.0), np.where(~odd, s, 0.0)


def isi_sq_series_alpha0(sigma_eps: float, m_max: int = 16, n_max: int = 60) -> float:
    """E[sinc^2(1 + eps)], the neighbour-symbol ISI moment of the alpha = 0 pulse.

    The m = 0 term is B_0^2 = sinc(1)^2 = 0.
    """
    if not 0 <= sigma_eps <= MAX_SERIES_SIGMA:
        raise MomentDomainError(f"sigma_eps must lie in [0, {MAX_SERIES_SIGMA}]")
    A, B = isi_series_coeffs(2 * m_max + 1, n_max)
    total = []
    for m in range(m_max + 1):
        n = np.arange(2 * m + 1)
        c = math.fsum(A[n] * A[2 * m - n]) + math.fsum(B[n] * B[2 * m - n])
        total.append(c * gaussian_even_moment(m, sigma_eps))
    return math.fsum(total)


@lru_cache(maxsize=16)
def _hermite_nodes(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2 * math.pi)


def moment_quadrature(spec: WaveformSpec, q: int, power: int, sigma_eps: float, nodes: int = 64) -> float:
    """E[z(q + eps)^power], eps ~ N(0, sigma_eps^2), by Gauss-Hermite quadrature."""
    if nodes < 8:
        raise ValueError("nodes must be >= 8")
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    if sigma_eps < 0:
        raise MomentDomainError("sigma_eps must be non-negative")
    if sigma_eps == 0:
        return sample(spec, float(q)) ** power
    x, w = _hermite_nodes(nodes)
    vals = sample(spec, q + sigma_eps * x) ** power
    return math.fsum(w * vals)


@dataclass(frozen=True)
class WaveformMoments:
    eps_check: float
    eps_tilde: dict[int, float]
    sigma_eps: float
    mu: int
    eps_hat: float = field(default=None)

    def __post_init__(self):
        if self.eps_hat is None:
            object.__setattr__(self, "eps_hat", math.fsum(self.eps_tilde.values()))

    @property
    def eps1(self) -> float:
        return self.eps_check

    @property
    def eps2(self) -> float:
        return self.eps_tilde[0]

    @property
    def isi_sum(self) -> float:
        """Sum of the q != 0 squared-amplitude moments."""
        return math.fsum(v for q, v in self.eps_tilde.items() if q != 0)

    def without_isi(self) -> WaveformMoments:
        return WaveformMoments(self.eps_check, {0: self.eps_tilde[0]}, self.sigma_eps, 0)

    @classmethod
    def from_scalars(cls, eps_check: float, eps_hat: float, eps0: float | None = None) -> WaveformMoments:
        """Moments carrying only the quantities the power policy needs.

        The ISI mass ``eps_hat - eps0`` is lumped onto q = 1.
        """
        eps0 = eps_hat if eps0 is None else eps0
        tilde = {0: eps0}
        mu = 0
        if eps_hat != eps0:
            tilde[1] = eps_hat - eps0
            mu = 2
        return cls(eps_check, tilde, 0.0, mu, eps_hat=eps_hat)


def all_moments(spec: WaveformSpec, sigma_eps: float, mu: int, nodes: int = 64) -> WaveformMoments:
    if mu < 0 or mu % 2:
        raise ValueError("mu must be even")
    check = moment_quadrature(spec, 0, 1, sigma_eps, nodes)
    tilde = {q: moment_quadrature(spec, q, 2, sigma_eps, nodes) for q in range(-mu // 2, mu // 2 + 1)}
    return WaveformMoments(check, tilde, float(sigma_eps), int(mu))


def write_moments(m: WaveformMoments, csv_path) -> Path:
    """Write ``q,eps_tilde_q`` rows plus a ``.txt`` key=value sidecar."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "eps_tilde_q"])
        for q in sorted(m.eps_tilde):
            w.writerow([q, repr(float(m.eps_tilde[q]))])
    side = csv_path.with_suffix(".txt")
    side.write_text(
        f"eps_check={m.eps_check!r}\neps_hat={m.eps_hat!r}\n"
        f"sigma_eps={m.sigma_eps!r}\nmu={m.mu}\n"
    )
    return side


def read_moments(csv_path) -> WaveformMoments:
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if [c.strip() for c in rows[0]] != ["q", "eps_tilde_q"]:
        raise ValueError(f"{csv_path}: expected header 'q,eps_tilde_q'")
    tilde = {int(r[0]): float(r[1]) for r in rows[1:] if r}
    meta = {}
    for line in csv_path.with_suffix(".txt").read_text().splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    return WaveformMoments(
        float(meta["eps_check"]), tilde, float(meta["sigma_eps"]), int(meta["mu"]),
        eps_hat=float(meta["eps_hat"]),
    )
