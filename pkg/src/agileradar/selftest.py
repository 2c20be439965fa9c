"""Small invariant suite behind ``agileradar selftest``."""

from __future__ import annotations

import numpy as np

from .analysis import (chi_enumerated_moments, chi_moments_closed_form, coherence_direct,
                       coherence_fast)
from .angle import estimate_angles, isolate_echoes, refine_intensities
from .beamform import UNIT, BeamformedData, beamform, build_sensing_matrix, restrict
from .model import MODES, RadarConfig, sample_frequency_plan, sample_scene
from .recovery import basis_pursuit, extract_support, hit_rate
from .synth import apply_jamming, synthesize


def _model_consistency(rng):
    worst = 0.0
    for mode in MODES:
        cfg = RadarConfig().with_mode(mode)
        plan = sample_frequency_plan(cfg, rng)
        scene = sample_scene(cfg, 4, rng, angle_spread=0.0)
        bf = beamform(synthesize(scene, plan, cfg), plan, cfg)
        beta = np.zeros(cfg.M * cfg.N, dtype=complex)
        beta[scene.flat_indices(cfg.N)] = cfg.alpha * scene.betas
        phi = build_sensing_matrix(plan, cfg)
        worst = max(worst, np.linalg.norm(bf.z - phi.Phi @ beta) / np.linalg.norm(bf.z))
    return worst < 1e-10, f"max relative mismatch {worst:.1e}"


def _coherence(rng):
    cfg = RadarConfig(M=8, N=8, K=2, L=2)
    worst = 0.0
    for _ in range(20):
        plan = sample_frequency_plan(cfg, rng)
        mask = apply_jamming(cfg, 0.7, "pulse", rng)
        if not len(mask):
            continue
        bf = BeamformedData(Z=np.zeros((cfg.K, cfg.N), dtype=complex), mask=mask)
        _, Phi = restrict(bf, build_sensing_matrix(plan, cfg, UNIT))
        worst = max(worst, abs(coherence_direct(Phi, M=cfg.M, K=cfg.K).mu - coherence_fast(plan, mask, cfg).mu))
    return worst <= 1e-10, f"max |fast - direct| {worst:.1e}"


def _moments(rng):
    err = 0.0
    for offset, zero in (((1, 1), False), ((0, 1), True)):
        e = chi_enumerated_moments(3, 2, 2, 0.4, offset)
        c = chi_moments_closed_form(3, 2, 2, 0.4, zero, delta_n=offset[1])
        err = max(err, np.max(np.abs(e.mean - c.mean)), abs(e.var_sum - c.var_sum))
    return err < 1e-12, f"max deviation {err:.1e}"


def _recovery(rng):
    cfg = RadarConfig()
    plan = sample_frequency_plan(cfg, rng)
    scene = sample_scene(cfg, 3, rng, angle_spread=0.0)
    data = synthesize(scene, plan, cfg)
    z, Phi = restrict(beamform(data, plan, cfg), build_sensing_matrix(plan, cfg))
    support = extract_support(basis_pursuit(z, Phi, tol=1e-8), 3)
    rate = hit_rate(support, scene, cfg.N)
    est = estimate_angles(isolate_echoes(data, support, plan, cfg), plan, cfg)
    beta, _ = refine_intensities(data, est, support, plan, cfg)
    err = float(np.max(np.abs(beta - 1)))
    return rate == 1 and err < 1e-6, f"hit rate {rate:.2f}, intensity error {err:.1e}"


def run_checks(seed: int = 0):
    rng = np.random.default_rng(seed)
    for name, check in (("model consistency z = Phi beta", _model_consistency),
                        ("fast coherence equals direct", _coherence),
                        ("chi moments by enumeration", _moments),
                        ("noiseless CAESAR recovery", _recovery)):
        ok, detail = check(rng)
        yield name, bool(ok), detail
