"""Receive beamforming, the range-Doppler sensing matrix, and row restriction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateProblemError
from .model import SPEED_OF_LIGHT, WMAR, FrequencyPlan, RadarConfig
from .synth import AvailabilityMask, EchoData, full_mask

EXACT = "exact"
UNIT = "unit"


@dataclass(frozen=True)
class BeamformedData:
    """Beamformed K x N matrix and its vectorisation ``z[k + n*K] = Z[k, n]``."""

    Z: np.ndarray
    mask: AvailabilityMask

    @property
    def z(self) -> np.ndarray:
        return self.Z.T.ravel()


@dataclass(frozen=True)
class SensingMatrix:
    Phi: np.ndarray
    zeta_mode: str = EXACT

    @property
    def shape(self):
        return self.Phi.shape


def steering_weights(plan: FrequencyPlan, config: RadarConfig) -> np.ndarray:
    """w_l(theta, Omega_{n,k}) as an (N, K, L) array."""
    omega = plan.omega(config)
    l = np.arange(config.L)
    phase = 2 * np.pi * omega[:, :, None] * l * config.d * np.sin(config.theta) / SPEED_OF_LIGHT
    return np.exp(1j * phase)


def beamform(data: EchoData, plan: FrequencyPlan, config: RadarConfig) -> BeamformedData:
    """Point the receive beam at ``theta`` separately for each (pulse, carrier)."""
    if data.mode != config.mode:
        raise ConfigError(f"data were synthesised for {data.mode}, config is {config.mode}")
    data.validate(config)
    w = steering_weights(plan, config)
    Y = data.samples
    if config.mode == WMAR:
        Z = np.einsum("nkl,lnk->kn", w, Y)
    else:
        p = plan.alloc[:, None, :] == np.arange(config.K)[None, :, None]  # (N, K, L)
        Z = np.einsum("nkl,nkl,ln->kn", w, p, Y)
    return BeamformedData(Z=Z, mask=full_mask(config))


def build_sensing_matrix(plan: FrequencyPlan, config: RadarConfig,
                         zeta_mode: str = EXACT) -> SensingMatrix:
    """KN x MN matrix linking the vectorised scene ``beta[n + m*N]`` to ``z``.

    Entry (k + n*K, l + m*N) is exp(j 2 pi m c_{n,k} / M + j 2 pi l n zeta_{n,k} / N),
    with zeta set to one in ``unit`` mode.
    """
    M, N = config.M, config.N
    if zeta_mode == EXACT:
        zeta = plan.zeta(config)
    elif zeta_mode == UNIT:
        zeta = np.ones(plan.codes.shape)
    else:
        raise ConfigError(f"unknown zeta mode {zeta_mode!r}")
    c = plan.codes.ravel().astype(float)  # row n*K + k
    nz = (np.arange(N)[:, None] * zeta).ravel()
    m = np.arange(M)
    l = np.arange(N)
    phase = (2 * np.pi / M) * c[:, None, None] * m[None, :, None] \
        + (2 * np.pi / N) * nz[:, None, None] * l[None, None, :]
    return SensingMatrix(Phi=np.exp(1j * phase).reshape(len(c), M * N), zeta_mode=zeta_mode)


def restrict(bf: BeamformedData, phi: SensingMatrix, mask: AvailabilityMask | None = None):
    """Keep the observations listed in ``mask`` (default: the one carried by ``bf``)."""
    mask = bf.mask if mask is None else mask
    idx = np.asarray(mask.indices, dtype=int)
    if idx.size == 0:
        raise DegenerateProblemError("every observation was removed by the mask")
    if idx.min() < 0 or idx.max() >= phi.Phi.shape[0]:
        raise ConfigError("mask indices outside the observation range")
    idx = np.sort(idx)
    return bf.z[idx], phi.Phi[idx]
