"""Radar configuration, per-CPI frequency plans and on-grid scenes.

All three schemes share one configuration type. FAR is represented as the
single-carrier case (``K = 1``) and uses the same element-by-pulse data
layout as CAESAR.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from .errors import ConfigError, InfeasibleSceneError

SPEED_OF_LIGHT = 299792458.0

FAR = "FAR"
WMAR = "WMAR"
CAESAR = "CAESAR"
MODES = (FAR, WMAR, CAESAR)


@dataclass(frozen=True)
class RadarConfig:
    """Scalar radar parameters.

    Attributes:
      - fc: first carrier frequency (Hz)
      - delta_f: carrier spacing (Hz)
      - M: number of available carriers
      - N: pulses per CPI
      - K: carriers transmitted per pulse
      - L: number of array elements
      - d: element spacing (m); defaults to half a wavelength at ``fc``
      - theta: beam direction (rad)
      - mode: one of ``FAR``, ``WMAR``, ``CAESAR``
      - kappa2: noise variance per complex sample
      - seed: base RNG seed
    """

    fc: float = 9e9
    delta_f: float = 1e6
    M: int = 8
    N: int = 32
    K: int = 2
    L: int = 10
    d: float | None = None
    theta: float = 0.0
    mode: str = CAESAR
    kappa2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d is None:
            object.__setattr__(self, "d", SPEED_OF_LIGHT / (2.0 * self.fc))
        mode = str(self.mode).upper()
        object.__setattr__(self, "mode", mode)
        if mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        for name in ("M", "N", "K", "L"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not self.K <= self.M:
            raise ConfigError(f"K={self.K} exceeds M={self.M}")
        if mode == FAR and self.K != 1:
            raise ConfigError("FAR transmits a single carrier per pulse (K must be 1)")
        if self.L % self.K:
            raise ConfigError(f"L={self.L} is not a multiple of K={self.K}")
        if not (self.fc > 0 and self.delta_f > 0 and self.d > 0):
            raise ConfigError("fc, delta_f and d must be positive")
        if self.kappa2 < 0:
            raise ConfigError("kappa2 must be non-negative")

    @property
    def beam_halfwidth(self) -> float:
        """Half-width of the angular search interval around ``theta``."""
        return np.pi / (2 * self.L)

    @property
    def alpha(self) -> float:
        """Round-trip beamformed amplitude of a unit scatterer at boresight."""
        if self.mode == WMAR:
            return self.L**2 / np.sqrt(self.K)
        return (self.L / self.K) ** 2

    def with_mode(self, mode: str) -> "RadarConfig":
        """Same radar under another scheme; FAR forces ``K = 1``."""
        mode = mode.upper()
        K = 1 if mode == FAR else self.K
        return replace(self, mode=mode, K=K)

    def replace(self, **changes) -> "RadarConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class FrequencyPlan:
    """Carrier codes and antenna allocation for one CPI.

    ``codes[n, k]`` is the index of the k-th carrier of pulse n, sorted
    ascending within each pulse. ``alloc[n, l]`` is the slot k used by
    element l in pulse n; it is all zeros for FAR and ``None`` for WMAR,
    where every element carries every tone.
    """

    codes: np.ndarray
    alloc: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.codes.shape[0]

    @property
    def K(self) -> int:
        return self.codes.shape[1]

    def omega(self, config: RadarConfig) -> np.ndarray:
        """Carrier frequencies, shape (N, K)."""
        return config.fc + self.codes * config.delta_f

    def zeta(self, config: RadarConfig) -> np.ndarray:
        """Relative frequency factors, shape (N, K)."""
        return self.omega(config) / config.fc

    def selection(self, n: int, k: int) -> np.ndarray:
        """Sub-array indicator of slot k in pulse n (the diagonal of P(n, k))."""
        if self.alloc is None:
            raise ConfigError("plan has no antenna allocation")
        return (self.alloc[n] == k).astype(float)

    def validate(self, config: RadarConfig) -> None:
        codes = self.codes
        if codes.shape != (config.N, config.K):
            raise ConfigError(f"codes shape {codes.shape} != (N, K) = {(config.N, config.K)}")
        if codes.min() < 0 or codes.max() >= config.M:
            raise ConfigError("carrier codes outside 0..M-1")
        if config.K > 1 and np.any(np.diff(np.sort(codes, axis=1), axis=1) == 0):
            raise ConfigError("carrier codes within a pulse must be distinct")
        if config.mode == WMAR:
            return
        alloc = self.alloc
        if alloc is None or alloc.shape != (config.N, config.L):
            raise ConfigError("CAESAR/FAR plans need an (N, L) allocation table")
        counts = np.stack([(alloc == k).sum(axis=1) for k in range(config.K)], axis=1)
        if np.any(counts != config.L // config.K):
            raise ConfigError("every carrier must drive exactly L/K elements in every pulse")


@dataclass(frozen=True)
class Target:
    beta: complex
    m_idx: int
    n_idx: int
    angle: float


@dataclass(frozen=True)
class Scene:
    """On-grid point scatterers."""

    targets: tuple[Target, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def betas(self) -> np.ndarray:
        return np.array([t.beta for t in self.targets], dtype=complex)

    @property
    def m_idx(self) -> np.ndarray:
        return np.array([t.m_idx for t in self.targets], dtype=int)

    @property
    def n_idx(self) -> np.ndarray:
        return np.array([t.n_idx for t in self.targets], dtype=int)

    @property
    def angles(self) -> np.ndarray:
        return np.array([t.angle for t in self.targets], dtype=float)

    def flat_indices(self, N: int) -> np.ndarray:
        """Positions in the vectorised scene, ``n + m*N``."""
        return self.n_idx + self.m_idx * N

    def normalized_range(self, M: int) -> np.ndarray:
        return 2 * np.pi * self.m_idx / M

    def normalized_doppler(self, N: int) -> np.ndarray:
        return 2 * np.pi * self.n_idx / N

    def union(self, other: "Scene") -> "Scene":
        return Scene(self.targets + other.targets)

    def validate(self, config: RadarConfig) -> None:
        cells = {(t.m_idx, t.n_idx) for t in self.targets}
        if len(cells) != len(self.targets):
            raise ConfigError("two scatterers share a range-Doppler cell")
        for t in self.targets:
            if not (0 <= t.m_idx < config.M and 0 <= t.n_idx < config.N):
                raise ConfigError(f"target {t} lies off the grid")
            if abs(t.angle - config.theta) > config.beam_halfwidth * (1 + 1e-12):
                raise ConfigError(f"target angle {t.angle} outside the beam")


def grid_cell(flat_index: int, N: int) -> tuple[int, int]:
    """(m, n) grid indices of a vectorised scene position."""
    return int(flat_index) // N, int(flat_index) % N


def sample_frequency_plan(config: RadarConfig, rng: np.random.Generator) -> FrequencyPlan:
    """Draw carrier subsets (and CAESAR sub-arrays) independently per pulse.

    Each pulse takes a uniformly random K-subset of the M carriers. CAESAR
    additionally partitions the L elements uniformly into K blocks of L/K.
    Codes are drawn before the allocation, so WMAR and CAESAR runs fed the
    same generator state see the same carriers.
    """
    N, M, K, L = config.N, config.M, config.K, config.L
    codes = np.sort(np.argsort(rng.random((N, M)), axis=1)[:, :K], axis=1)
    if config.mode == WMAR:
        return FrequencyPlan(codes=codes, alloc=None)
    if K == 1:
        return FrequencyPlan(codes=codes, alloc=np.zeros((N, L), dtype=int))
    slots = np.tile(np.repeat(np.arange(K), L // K), (N, 1))
    return FrequencyPlan(codes=codes, alloc=rng.permuted(slots, axis=1))


def sample_scene(config: RadarConfig, S: int, rng: np.random.Generator,
                 angle_spread: float = 1.0) -> Scene:
    """S unit-intensity scatterers on distinct grid cells, angles uniform in the beam.

    ``angle_spread`` shrinks the angle interval to that fraction of the beam
    (0 puts every scatterer on the beam axis).
    """
    if not 0 <= angle_spread <= 1:
        raise ConfigError("angle_spread must lie in [0, 1]")
    M, N = config.M, config.N
    if S < 0:
        raise ConfigError("S must be non-negative")
    if S > M * N:
        raise InfeasibleSceneError(f"S={S} exceeds the {M * N} range-Doppler cells")
    flat = rng.choice(M * N, size=S, replace=False)
    h = config.beam_halfwidth
    angles = config.theta + angle_spread * rng.uniform(-h, h, size=S)
    targets = tuple(
        Target(beta=1.0 + 0j, m_idx=int(s) // N, n_idx=int(s) % N, angle=float(a))
        for s, a in zip(flat, angles)
    )
    return Scene(targets)


def n_subsets(config: RadarConfig) -> int:
    return comb(config.M, config.K)
