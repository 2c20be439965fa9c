"""Coherence of the unit-zeta sensing matrix and its probabilistic guarantees.

The normalised inner product of two columns of the restricted matrix
depends only on their grid offset (dm, dn):

    chi(dm, dn) = sum_{n in Lambda} (1/K) sum_k exp(-j 2 pi dm c_{n,k} / M - j 2 pi dn n / N)

and the coherence is ``max |chi| / |Lambda|`` over the MN - 1 nonzero
offsets. Everything here assumes pulse-selective masks, where Lambda is a
set of kept pulses.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from math import comb, floor

import numpy as np

from .errors import ConfigError, DegenerateProblemError, DomainError
from .model import FrequencyPlan, RadarConfig
from .synth import AvailabilityMask, OBSERVATION

ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    argmax_offset: tuple[int, int]
    lambda_size: int


@dataclass(frozen=True)
class ChiMoments:
    """Per-pulse means of chi_n and the sum of their variances.

    Standard errors are zero for closed-form and enumerated moments.
    """

    mean: np.ndarray
    var_sum: float
    mean_se: np.ndarray | None = None
    var_sum_se: float = 0.0


def _check_params(M: int, N: int, K: int, u: float) -> None:
    if not (M >= 1 and N >= 1 and 1 <= K <= M):
        raise ConfigError(f"need 1 <= K <= M and N >= 1, got M={M}, N={N}, K={K}")
    if not 0 < u <= 1:
        raise ConfigError(f"survival rate must lie in (0, 1], got {u}")


def coherence_direct(Phi: np.ndarray, M: int | None = None, K: int = 1) -> CoherenceReport:
    """Exhaustive maximum of normalised column-pair correlations.

    When ``M`` is given the columns are read as ``l + m*N`` and the offset of
    the maximising pair is reported as ``(dm mod M, dn mod N)``; otherwise it
    is the raw column pair.
    """
    Phi = np.asarray(Phi, dtype=complex)
    if Phi.ndim != 2 or Phi.shape[1] < 2:
        raise ConfigError("coherence needs at least two columns")
    norms = np.linalg.norm(Phi, axis=0)
    if np.any(norms == 0):
        raise DegenerateProblemError("zero column cannot be normalised")
    A = Phi / norms
    G = np.abs(A.conj().T @ A)
    np.fill_diagonal(G, -1.0)
    i, j = np.unravel_index(np.argmax(G), G.shape)
    mu = float(min(G[i, j], 1.0))
    if M is None:
        offset = (int(i), int(j))
    else:
        N = Phi.shape[1] // M
        offset = (int((j // N - i // N) % M), int((j % N - i % N) % N))
    return CoherenceReport(mu=mu, argmax_offset=offset, lambda_size=Phi.shape[0] // K)


def chi_table(codes: np.ndarray, kept: np.ndarray, M: int) -> np.ndarray:
    """chi(dm, dn) for every offset, shape (..., M, N).

    ``codes`` has shape (..., N, K) and ``kept`` is a boolean (..., N) pulse
    indicator. The sum over pulses is an FFT along n.
    """
    dm = np.arange(M)
    carrier = np.exp(-2j * np.pi * dm[:, None, None] * codes[..., None, :, :] / M).mean(axis=-1)
    g = carrier * kept[..., None, :]
    return np.fft.fft(g, axis=-1)


def _mu_from_table(chi: np.ndarray, size) -> np.ndarray:
    mag = np.abs(chi).copy()
    mag[..., 0, 0] = 0.0
    return mag.reshape(mag.shape[:-2] + (-1,)).max(axis=-1) / size


def coherence_fast(plan: FrequencyPlan, mask: AvailabilityMask | None, config: RadarConfig) -> CoherenceReport:
    """Coherence of the restricted unit-zeta matrix from offset classes, O(MN log N)."""
    N, M = config.N, config.M
    if mask is None:
        kept = np.ones(N, dtype=bool)
    else:
        if mask.pattern == OBSERVATION or mask.pulses is None:
            raise ConfigError("fast coherence needs a pulse-selective mask")
        kept = np.zeros(N, dtype=bool)
        kept[np.asarray(mask.pulses, dtype=int)] = True
    size = int(kept.sum())
    if size == 0:
        raise DegenerateProblemError("no pulse survives the mask")
    chi = chi_table(plan.codes, kept, M)
    mag = np.abs(chi)
    mag[0, 0] = -1.0
    dm, dn = np.unravel_index(np.argmax(mag), mag.shape)
    return CoherenceReport(mu=float(min(mag[dm, dn] / size, 1.0)), argmax_offset=(int(dm), int(dn)),
                           lambda_size=size)


def chi_moments_closed_form(M: int, N: int, K: int, u: float, delta_m_zero: bool,
                            delta_n: int = 0) -> ChiMoments:
    """Exact mean sequence and variance sum of chi_n for a random plan and mask.

    For dm = 0 the mean is ``u exp(-j 2 pi dn n / N)``, matching the
    definition of chi above; otherwise it vanishes.
    """
    _check_params(M, N, K, u)
    n = np.arange(N)
    if delta_m_zero:
        mean = u * np.exp(-2j * np.pi * delta_n * n / N)
        return ChiMoments(mean=mean, var_sum=u * (1 - u) * N)
    if M == 1:
        raise DomainError("no nonzero range offset exists for M = 1")
    return ChiMoments(mean=np.zeros(N, dtype=complex), var_sum=(M - K) / ((M - 1) * K) * u * N)


def sample_codes(M: int, N: int, K: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform K-subsets of the M carriers per pulse, sorted, shape (size, N, K)."""
    shape = (N, M) if size is None else (size, N, M)
    return np.sort(np.argsort(rng.random(shape), axis=-1)[..., :K], axis=-1)


def _chi_n(codes, kept, M, N, offset):
    dm, dn = offset
    n = np.arange(N)
    carrier = np.exp(-2j * np.pi * dm * codes / M).mean(axis=-1)
    return kept * carrier * np.exp(-2j * np.pi * dn * n / N)


def chi_empirical_moments(M: int, N: int, K: int, u: float, offset: tuple[int, int], trials: int,
                          rng: np.random.Generator) -> ChiMoments:
    """Monte Carlo moments of chi_n over independent plan and pulse-mask draws."""
    _check_params(M, N, K, u)
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    codes = sample_codes(M, N, K, rng, size=trials)
    kept = rng.random((trials, N)) < u
    x = _chi_n(codes, kept, M, N, offset)
    mean = x.mean(axis=0)
    dev2 = np.abs(x - mean) ** 2
    var = dev2.mean(axis=0)
    mean_se = np.sqrt(var / trials)
    var_sum_se = float(np.sqrt(np.sum(dev2.var(axis=0)) / trials))
    return ChiMoments(mean=mean, var_sum=float(var.sum()), mean_se=mean_se, var_sum_se=var_sum_se)


def chi_enumerated_moments(M: int, N: int, K: int, u: float, offset: tuple[int, int]) -> ChiMoments:
    """Exact moments by enumerating every plan and pulse mask (small sizes only)."""
    _check_params(M, N, K, u)
    states = comb(M, K) ** N * 2**N
    if states > ENUMERATION_CAP:
        raise ConfigError(f"{states} states exceed the enumeration cap")
    subsets = np.array(list(itertools.combinations(range(M), K)))
    mean = np.zeros(N, dtype=complex)
    second = np.zeros(N)
    for choice in itertools.product(range(len(subsets)), repeat=N):
        codes = subsets[list(choice)]
        for bits in itertools.product((0, 1), repeat=N):
            kept = np.array(bits, dtype=bool)
            w = u ** kept.sum() * (1 - u) ** (N - kept.sum()) / comb(M, K) ** N
            x = _chi_n(codes, kept, M, N, offset)
            mean += w * x
            second += w * np.abs(x) ** 2
    return ChiMoments(mean=mean, var_sum=float(np.sum(second - np.abs(mean) ** 2)))


def variance_proxy(M: int, N: int, K: int, u: float) -> float:
    """V = max{u(1-u)N, (M-K)/((M-1)K) u N}."""
    _check_params(M, N, K, u)
    hop = (M - K) / ((M - 1) * K) * u * N if M > 1 else 0.0
    return max(u * (1 - u) * N, hop)


@dataclass(frozen=True)
class BoundTerms:
    V: float
    log_term: float
    leading: float
    correction: float
    value: float


def sparsity_bound_terms(M: int, N: int, K: int, u: float, delta: float) -> BoundTerms:
    if not 0 < delta < 1:
        raise DomainError(f"failure probability must lie in (0, 1), got {delta}")
    V = variance_proxy(M, N, K, u)
    if V <= 0:
        raise DomainError("variance proxy V is zero (u = 1 and K = M); the bound is undefined")
    xi = M * N - 1
    log_term = np.sqrt(2 * (np.log(2 * xi) - np.log(delta)))
    leading = (u * N / np.sqrt(V)) / (1 + log_term) * (1 + 1 / (2 * np.sqrt(2 * N) * u)) / 2
    correction = np.sqrt(N / (32 * V))
    return BoundTerms(V=V, log_term=float(log_term), leading=float(leading),
                      correction=float(correction), value=float(leading - correction + 0.5))


def sparsity_bound(M: int, N: int, K: int, u: float, delta: float) -> float:
    """Largest S (real valued) for which mu <= 1/(2S-1) holds with probability 1 - delta.

    May be non-positive in hostile regimes; callers floor it.
    """
    return sparsity_bound_terms(M, N, K, u, delta).value


def tail_bounds(V: float, N: int, u: float, epsilon: float, t: float) -> tuple[float, float]:
    """(P(|chi| >= sqrt(V) + eps) bound, P(|Lambda| <= uN - t) bound)."""
    if V <= 0:
        raise DomainError("V must be positive")
    if not 0 <= epsilon <= V:
        raise DomainError(f"epsilon must lie in [0, V] = [0, {V}], got {epsilon}")
    if t < 0:
        raise DomainError("t must be non-negative")
    if not 0 < u <= 1:
        raise ConfigError(f"survival rate must lie in (0, 1], got {u}")
    return float(np.exp(-epsilon**2 / (4 * V))), float(np.exp(-2 * t**2 / N))


def coherence_samples(M: int, N: int, K: int, u: float, trials: int, rng: np.random.Generator,
                      batch: int = 256) -> np.ndarray:
    """Coherence of the restricted unit-zeta matrix over random (plan, pulse mask) draws.

    Draws that lose every pulse get coherence 1.
    """
    _check_params(M, N, K, u)
    out = np.empty(trials)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        codes = sample_codes(M, N, K, rng, size=b)
        kept = rng.random((b, N)) < u
        size = kept.sum(axis=1)
        chi = chi_table(codes, kept, M)
        with np.errstate(invalid="ignore", divide="ignore"):
            mu = _mu_from_table(chi, size)
        out[done:done + b] = np.where(size > 0, np.minimum(mu, 1.0), 1.0)
        done += b
    return out


def analysis_report(M: int, N: int, K: int, u: float, delta: float, trials: int,
                    rng: np.random.Generator) -> dict:
    """JSON-ready summary: parameters, V, the sparsity bound and empirical coherence."""
    terms = sparsity_bound_terms(M, N, K, u, delta)
    S = floor(terms.value)
    mu = coherence_samples(M, N, K, u, trials, rng)
    report = {
        "params": {"M": M, "N": N, "K": K, "u": u, "delta": delta, "trials": trials},
        "bound": asdict(terms),
        "S": S,
        "mu": {"mean": float(mu.mean()), "std": float(mu.std()), "min": float(mu.min()),
               "median": float(np.median(mu)), "max": float(mu.max())},
    }
    if S >= 1:
        report["p_mu_below_threshold"] = float(np.mean(mu <= 1 / (2 * S - 1)))
        report["threshold"] = 1 / (2 * S - 1)
    return report
