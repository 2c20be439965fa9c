import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agileradar.analysis import coherence_direct
from agileradar.beamform import UNIT, beamform, build_sensing_matrix, restrict
from agileradar.errors import ConfigError, DegenerateProblemError, SolverError, UndefinedMetricError
from agileradar.model import FAR, RadarConfig, Scene, Target, sample_frequency_plan, sample_scene
from agileradar.recovery import (RecoveryResult, basis_pursuit, default_lambda, extract_support,
                                 hit_count, hit_rate, lasso, lasso_kkt_residual, soft_threshold,
                                 threshold_support)
from agileradar.synth import synthesize


def problem(cfg, rng, S, kappa2=0.0):
    cfg = cfg.replace(kappa2=kappa2)
    plan = sample_frequency_plan(cfg, rng)
    scene = sample_scene(cfg, S, rng, angle_spread=0.0)
    data = synthesize(scene, plan, cfg, rng)
    z, Phi = restrict(beamform(data, plan, cfg), build_sensing_matrix(plan, cfg))
    return z, Phi, scene


def test_soft_threshold_keeps_phase():
    v = np.array([3 + 4j, 0.1j, 0])
    out = soft_threshold(v, 1.0)
    assert out[0] == pytest.approx(0.8 * (3 + 4j))
    assert out[1] == 0 and out[2] == 0


def test_zero_data_gives_zero(cfg, rng):
    _, Phi, _ = problem(cfg, rng, 1)
    assert np.all(basis_pursuit(np.zeros(64), Phi) == 0)
    assert np.all(lasso(np.zeros(64), Phi, lam=1.0) == 0)


def test_single_atom_matches_brute_force(cfg, rng):
    for _ in range(10):
        z, Phi, scene = problem(cfg, rng, 1)
        oracle = np.argmax(np.abs(Phi.conj().T @ z) / np.linalg.norm(Phi, axis=0) ** 2)
        beta = basis_pursuit(z, Phi)
        assert extract_support(beta, 1)[0] == oracle == scene.flat_indices(cfg.N)[0]
        assert np.count_nonzero(beta) == 1


def test_two_atoms_residual_and_support(cfg):
    rng = np.random.default_rng(1)
    plan = sample_frequency_plan(cfg, rng)
    Phi = build_sensing_matrix(plan, cfg).Phi
    beta = np.zeros(256, dtype=complex)
    beta[[3, 3 + 4 * 32 + 16]] = [1.0, -0.7j]
    z = Phi @ beta
    est = basis_pursuit(z, Phi)
    assert np.linalg.norm(Phi @ est - z) <= 1e-6 * np.linalg.norm(z)
    assert {3, 147} <= set(np.flatnonzero(np.abs(est) > 1e-3 * np.abs(est).max()))


def test_exhaustive_oracle_tiny_scale(rng):
    # plans whose codes step through 0, 1, 2 make columns collinear up to the
    # tiny zeta offset; one-sparse l1 recovery is only promised when mu < 1
    cfg = RadarConfig(M=3, N=3, K=1, L=1, mode=FAR)
    agreed = 0
    for _ in range(100):
        plan = sample_frequency_plan(cfg, rng)
        Phi = build_sensing_matrix(plan, cfg).Phi
        if coherence_direct(Phi).mu > 1 - 1e-6:
            continue
        s = rng.integers(9)
        z = Phi[:, s] * (0.5 + rng.random())
        fits = [j for j in range(9)
                if np.linalg.norm(Phi[:, j] * (Phi[:, j].conj() @ z) / 3 - z) < 1e-9 * np.linalg.norm(z)]
        est = basis_pursuit(z, Phi, tol=1e-8)
        assert fits == [s]
        assert extract_support(est, 1)[0] == s
        agreed += 1
    assert agreed >= 50


def test_mip_guarantee_realised(cfg, rng):
    # whenever mu < 1/(2S - 1) the S-sparse scene is the unique l1 solution
    S = 2
    checked = 0
    for _ in range(40):
        plan = sample_frequency_plan(cfg, rng)
        Phi = build_sensing_matrix(plan, cfg, UNIT).Phi
        if coherence_direct(Phi, M=cfg.M, K=cfg.K).mu >= 1 / (2 * S - 1):
            continue
        checked += 1
        beta = np.zeros(256, dtype=complex)
        idx = rng.choice(256, S, replace=False)
        beta[idx] = np.exp(2j * np.pi * rng.random(S))
        est = basis_pursuit(Phi @ beta, Phi, tol=1e-8)
        assert np.array_equal(extract_support(est, S), np.sort(idx))
        assert np.allclose(est, beta, atol=1e-6)
    assert checked > 20


def test_bp_nonconvergence_reported(cfg, rng):
    z, Phi, _ = problem(cfg.with_mode("WMAR"), rng, 20)
    with pytest.raises(SolverError) as info:
        basis_pursuit(z, Phi, tol=1e-12, max_iter=40)
    assert info.value.iterations == 40 and np.isfinite(info.value.residual)


def test_bp_handles_uneven_columns(cfg, rng):
    z, Phi, scene = problem(cfg, rng, 3)
    scale = 1 + rng.random(Phi.shape[1])
    est = basis_pursuit(z, Phi * scale, tol=1e-8)
    assert np.array_equal(extract_support(est, 3), np.sort(scene.flat_indices(cfg.N)))


def test_input_validation(cfg, rng):
    z, Phi, _ = problem(cfg, rng, 1)
    with pytest.raises(ConfigError):
        basis_pursuit(z[:-1], Phi)
    with pytest.raises(ConfigError):
        basis_pursuit(np.full(64, np.nan), Phi)
    with pytest.raises(DegenerateProblemError):
        basis_pursuit(z, np.zeros((64, 3)))
    with pytest.raises(ConfigError):
        lasso(z, Phi, lam=0.0)


def test_lasso_large_lambda_is_zero(cfg, rng):
    z, Phi, _ = problem(cfg, rng, 3, kappa2=0.01)
    lam = np.max(np.abs(Phi.conj().T @ z))
    est = lasso(z, Phi, lam=lam)
    assert np.all(est == 0)
    assert lasso_kkt_residual(est, z, Phi, lam) <= 1e-9


def test_lasso_kkt(cfg, rng):
    z, Phi, _ = problem(cfg, rng, 6, kappa2=1.0)
    lam = default_lambda(z, Phi)
    assert lam == pytest.approx(0.1 * np.max(np.abs(Phi.conj().T @ z)))
    est = lasso(z, Phi, lam=lam, tol=1e-6)
    g = np.abs(Phi.conj().T @ (Phi @ est - z))
    ref = np.max(np.abs(Phi.conj().T @ z))
    assert np.all(g <= lam + 1e-6 * ref)
    on = est != 0
    assert np.allclose(g[on], lam, atol=1e-6 * ref)


def test_lasso_small_lambda_approaches_bp(cfg):
    rng = np.random.default_rng(5)
    z, Phi, _ = problem(cfg, rng, 3)
    bp = basis_pursuit(z, Phi, tol=1e-9)
    ref = np.max(np.abs(Phi.conj().T @ z))
    residuals, gaps = [], []
    for ratio in (1e-1, 1e-2, 1e-3):
        est = lasso(z, Phi, lam=ratio * ref, tol=1e-8, max_iter=200000)
        residuals.append(np.linalg.norm(Phi @ est - z))
        gaps.append(abs(np.abs(est).sum() - np.abs(bp).sum()))
    assert residuals[0] > residuals[1] > residuals[2]
    assert gaps[0] > gaps[2] and gaps[2] <= 1e-2 * np.abs(bp).sum()


def test_lasso_single_target_high_snr(cfg):
    rng = np.random.default_rng(8)
    z, Phi, scene = problem(cfg, rng, 1, kappa2=10 ** (-1.0))
    est = lasso(z, Phi)
    assert extract_support(est, 1)[0] == scene.flat_indices(cfg.N)[0]


def test_lasso_nonconvergence(cfg, rng):
    z, Phi, _ = problem(cfg, rng, 10, kappa2=1.0)
    with pytest.raises(SolverError):
        lasso(z, Phi, lam=1e-3, tol=1e-14, max_iter=20)


def test_extract_support_examples():
    onehot = np.zeros(10)
    onehot[7] = 2
    assert list(extract_support(onehot, 1)) == [7]
    assert list(extract_support(np.zeros(5), 2)) == [0, 1]
    assert list(extract_support(np.array([3, 1, 2, 0, 0]), 2)) == [0, 2]
    with pytest.raises(ConfigError):
        extract_support(onehot, 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=3, max_size=40), st.floats(1e-3, 1e3), st.integers(1, 3))
def test_extract_support_scale_equivariant(mags, c, S):
    beta = np.array(mags)
    assert np.array_equal(extract_support(c * beta, S), extract_support(beta, S))


def test_threshold_support():
    assert list(threshold_support(np.array([1.0, 0.2, 0.5, 0.0]))) == [0, 2]
    assert threshold_support(np.zeros(3)).size == 0


def test_hit_rate_examples():
    N = 32
    scene = Scene(tuple(Target(1, m, m + 1, 0.0) for m in range(5)))
    cells = scene.flat_indices(N)
    assert hit_rate(cells, scene, N) == 1.0
    assert hit_rate([0, 2], scene, N) == 0.0
    assert hit_rate(list(cells[:3]) + [0, 2], scene, N) == pytest.approx(0.6)
    assert hit_count(cells[:2], scene, N) == 2
    with pytest.raises(UndefinedMetricError):
        hit_rate([1], Scene(), N)


def test_recovery_result_grid_map():
    res = RecoveryResult.from_beta(np.zeros(256), [40], 8, 32)
    assert res.rd_estimates[0] == pytest.approx((2 * np.pi / 8, 2 * np.pi * 8 / 32))
