"""Discrete echo synthesis for FAR, WMAR and CAESAR.

Data are produced directly at the post-sampling level for a single coarse
range cell: an (L, N) matrix for CAESAR and FAR, an (L, N, K) cube for WMAR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import SPEED_OF_LIGHT, WMAR, FrequencyPlan, RadarConfig, Scene

PULSE = "pulse"
OBSERVATION = "observation"
NONE = "none"
PATTERNS = (NONE, PULSE, OBSERVATION)


@dataclass(frozen=True)
class EchoData:
    mode: str
    samples: np.ndarray
    kappa2: float = 0.0

    def validate(self, config: RadarConfig) -> None:
        if self.samples.shape != data_shape(config):
            raise ConfigError(f"samples shape {self.samples.shape} does not match {config.mode}")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigError("echo data contain non-finite entries")

    def save_csv(self, path) -> None:
        """Row-major dump: a shape/mode header then ``re,im`` pairs per line."""
        flat = self.samples.ravel()
        header = f"mode={self.mode} shape={'x'.join(map(str, self.samples.shape))} kappa2={self.kappa2}"
        np.savetxt(path, np.column_stack([flat.real, flat.imag]), delimiter=",",
                   header=header, fmt="%.17g")


def data_shape(config: RadarConfig) -> tuple[int, ...]:
    if config.mode == WMAR:
        return (config.L, config.N, config.K)
    return (config.L, config.N)


def _element_phase(plan: FrequencyPlan, config: RadarConfig) -> np.ndarray:
    """2*pi*Omega*l*d/c per (n, k, l), to be multiplied by a direction sine."""
    omega = plan.omega(config)
    l = np.arange(config.L)
    return 2 * np.pi * omega[:, :, None] * l[None, None, :] * config.d / SPEED_OF_LIGHT


def _selection_tensor(plan: FrequencyPlan, config: RadarConfig) -> np.ndarray:
    """Indicator p(n, k) as an (N, K, L) array; all ones for WMAR."""
    if config.mode == WMAR:
        return np.ones((config.N, config.K, config.L))
    return (plan.alloc[:, None, :] == np.arange(config.K)[None, :, None]).astype(float)


def transmit_gains(plan: FrequencyPlan, config: RadarConfig, delta) -> np.ndarray:
    """Transmit gain rho(n, k, delta) for every pulse and slot.

    ``delta`` is a direction-sine offset, scalar or 1-d; the result has shape
    ``np.shape(delta) + (N, K)``.
    """
    delta = np.asarray(delta, dtype=float)
    phase = _element_phase(plan, config)
    p = _selection_tensor(plan, config)
    expo = np.exp(-1j * phase[None] * delta.reshape(-1, 1, 1, 1))
    rho = np.einsum("nkl,ankl->ank", p, expo)
    return rho.reshape(delta.shape + rho.shape[1:])


def transmit_gain(plan: FrequencyPlan, config: RadarConfig, n: int, k: int, delta: float) -> complex:
    if not (0 <= n < config.N and 0 <= k < config.K):
        raise IndexError(f"(n, k) = {(n, k)} outside {config.N} x {config.K}")
    phase = _element_phase(plan, config)[n, k]
    p = _selection_tensor(plan, config)[n, k]
    return complex(np.sum(p * np.exp(-1j * phase * delta)))


def angle_factor(plan: FrequencyPlan, config: RadarConfig, angles) -> np.ndarray:
    """Direction-dependent part of the echo, shape (A, L, N, K).

    Entry is rho(n, k, sin(a) - sin(theta)) * exp(-j 2 pi Omega l d sin(a) / c).
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    sines = np.sin(angles)
    rho = transmit_gains(plan, config, sines - np.sin(config.theta))  # (A, N, K)
    phase = _element_phase(plan, config)  # (N, K, L)
    steer = np.exp(-1j * phase[None] * sines[:, None, None, None])  # (A, N, K, L)
    return np.transpose(steer * rho[..., None], (0, 3, 1, 2))


def range_doppler_factor(plan: FrequencyPlan, config: RadarConfig, r, v) -> np.ndarray:
    """exp(j r c_{n,k}) exp(j v n zeta_{n,k}) per scatterer, shape (S, N, K)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    n = np.arange(config.N)[:, None]
    nz = n * plan.zeta(config)
    return np.exp(1j * (r[:, None, None] * plan.codes[None] + v[:, None, None] * nz[None]))


def to_data_layout(tensor: np.ndarray, plan: FrequencyPlan, config: RadarConfig) -> np.ndarray:
    """Map (..., L, N, K) onto the scheme's data layout.

    CAESAR/FAR keep, for element l in pulse n, only its allocated slot; WMAR
    keeps the full cube and applies the 1/sqrt(K) power split.
    """
    if config.mode == WMAR:
        return tensor / np.sqrt(config.K)
    idx = plan.alloc.T[:, :, None]  # (L, N, 1)
    idx = np.broadcast_to(idx, tensor.shape[:-1] + (1,))
    return np.take_along_axis(tensor, idx, axis=-1)[..., 0]


def echo_signatures(plan: FrequencyPlan, config: RadarConfig, r, v, angles) -> np.ndarray:
    """Unit-intensity echoes of scatterers at (r, v, angle), in data layout."""
    rd = range_doppler_factor(plan, config, r, v)  # (S, N, K)
    ang = angle_factor(plan, config, angles)  # (S, L, N, K)
    return to_data_layout(rd[:, None] * ang, plan, config)


def synthesize(scene: Scene, plan: FrequencyPlan, config: RadarConfig,
               rng: np.random.Generator | None = None) -> EchoData:
    """Received data matrix (CAESAR/FAR) or cube (WMAR) plus circular Gaussian noise."""
    plan.validate(config)
    shape = data_shape(config)
    samples = np.zeros(shape, dtype=complex)
    if len(scene):
        sig = echo_signatures(plan, config, scene.normalized_range(config.M),
                              scene.normalized_doppler(config.N), scene.angles)
        samples += np.tensordot(scene.betas, sig, axes=1)
    if config.kappa2 > 0:
        if rng is None:
            raise ConfigError("a generator is required for noisy synthesis")
        scale = np.sqrt(config.kappa2 / 2)
        samples += scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return EchoData(mode=config.mode, samples=samples, kappa2=config.kappa2)


@dataclass(frozen=True)
class AvailabilityMask:
    """Beamformed observations that survived jamming.

    ``indices`` is the sorted set of available positions ``n*K + k`` in the
    beamformed vector; ``pulses`` is the available pulse set for
    pulse-selective masks and ``None`` otherwise.
    """

    pattern: str
    indices: np.ndarray
    N: int
    K: int
    pulses: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.indices)

    def as_table(self) -> np.ndarray:
        """Boolean (N, K) availability of every (pulse, slot)."""
        table = np.zeros(self.N * self.K, dtype=bool)
        table[self.indices] = True
        return table.reshape(self.N, self.K)

    def sample_availability(self, plan: FrequencyPlan, config: RadarConfig) -> np.ndarray:
        """Boolean availability of every raw sample, in data layout."""
        table = self.as_table()
        full = np.broadcast_to(table[None], (config.L, config.N, config.K))
        return to_data_layout(full.astype(float), plan, config) != 0


def full_mask(config: RadarConfig) -> AvailabilityMask:
    N, K = config.N, config.K
    return AvailabilityMask(NONE, np.arange(N * K), N, K, pulses=np.arange(N))


def pulse_mask(pulses, config: RadarConfig) -> AvailabilityMask:
    """Pulse-selective mask from an explicit available-pulse set."""
    K = config.K
    pulses = np.unique(np.asarray(pulses, dtype=int))
    indices = (pulses[:, None] * K + np.arange(K)[None, :]).ravel()
    return AvailabilityMask(PULSE, indices, config.N, K, pulses=pulses)


def apply_jamming(config: RadarConfig, u: float, pattern: str,
                  rng: np.random.Generator) -> AvailabilityMask:
    """Random missing-or-not mask with survival probability ``u``.

    Pulse-selective drops whole pulses; observation-selective drops single
    beamformed observations. Both draw one uniform per unit in index order,
    so for K = 1 the two patterns coincide draw for draw.
    """
    if not 0 < u <= 1:
        raise ConfigError(f"survival rate must lie in (0, 1], got {u}")
    N, K = config.N, config.K
    if pattern == NONE:
        return full_mask(config)
    if pattern == PULSE:
        keep = np.flatnonzero(rng.random(N) < u)
        return pulse_mask(keep, config)
    if pattern == OBSERVATION:
        keep = np.flatnonzero(rng.random(N * K) < u)
        return AvailabilityMask(OBSERVATION, keep, N, K, pulses=None)
    raise ConfigError(f"unknown jamming pattern {pattern!r}")
