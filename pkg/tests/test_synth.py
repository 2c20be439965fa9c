import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agileradar.errors import ConfigError
from agileradar.model import (FAR, SPEED_OF_LIGHT, WMAR, FrequencyPlan, RadarConfig, Scene, Target,
                              sample_frequency_plan, sample_scene)
from agileradar.synth import (NONE, OBSERVATION, PULSE, EchoData, apply_jamming, pulse_mask,
                              synthesize, transmit_gain, transmit_gains)


def boresight_target(cfg, m=0, n=0, beta=1.0):
    return Scene((Target(beta, m, n, cfg.theta),))


def test_caesar_gain_at_boresight(cfg, rng):
    plan = sample_frequency_plan(cfg, rng)
    assert transmit_gain(plan, cfg, 3, 1, 0.0) == pytest.approx(5 + 0j)


def test_wmar_gain_at_boresight(cfg, rng):
    w = cfg.with_mode(WMAR)
    assert transmit_gain(sample_frequency_plan(w, rng), w, 0, 0, 0.0) == pytest.approx(10 + 0j)


def test_two_element_null():
    # 2 pi Omega d delta / c = pi with Omega = fc, d = c / (2 fc) means delta = 1
    cfg = RadarConfig(M=1, K=1, L=2, N=1, mode=FAR)
    plan = FrequencyPlan(codes=np.zeros((1, 1), dtype=int), alloc=np.zeros((1, 2), dtype=int))
    assert abs(transmit_gain(plan, cfg, 0, 0, 1.0)) < 1e-12


def test_gain_against_scalar_sum(cfg, rng):
    plan = sample_frequency_plan(cfg, rng)
    delta = 0.07
    omega = cfg.fc + plan.codes[4, 1] * cfg.delta_f
    expect = sum(np.exp(-2j * np.pi * omega * l * cfg.d * delta / SPEED_OF_LIGHT)
                 for l in range(cfg.L) if plan.alloc[4, l] == 1)
    assert transmit_gain(plan, cfg, 4, 1, delta) == pytest.approx(expect)
    assert transmit_gains(plan, cfg, [0.0, delta])[1, 4, 1] == pytest.approx(expect)


def test_gain_index_checked(cfg, rng):
    plan = sample_frequency_plan(cfg, rng)
    with pytest.raises(IndexError):
        transmit_gain(plan, cfg, cfg.N, 0, 0.0)
    with pytest.raises(IndexError):
        transmit_gain(plan, cfg, 0, cfg.K, 0.0)


@settings(max_examples=25, deadline=None)
@given(delta=st.floats(-2, 2), seed=st.integers(0, 10**6))
def test_gain_magnitude_bounds(delta, seed):
    cfg = RadarConfig()
    rng = np.random.default_rng(seed)
    assert np.all(np.abs(transmit_gains(sample_frequency_plan(cfg, rng), cfg, delta)) <= 5 + 1e-9)
    w = cfg.with_mode(WMAR)
    assert np.all(np.abs(transmit_gains(sample_frequency_plan(w, rng), w, delta)) <= 10 + 1e-9)


def test_caesar_single_target_data(cfg, rng):
    data = synthesize(boresight_target(cfg), sample_frequency_plan(cfg, rng), cfg)
    assert data.samples.shape == (10, 32)
    assert np.allclose(data.samples, 5)


def test_wmar_single_target_data(cfg, rng):
    w = cfg.with_mode(WMAR)
    data = synthesize(boresight_target(w), sample_frequency_plan(w, rng), w)
    assert data.samples.shape == (10, 32, 2)
    assert np.allclose(data.samples, 10 / np.sqrt(2))


def test_caesar_entry_against_scalar_formula(cfg, rng):
    plan = sample_frequency_plan(cfg, rng)
    t = Target(0.5 - 0.2j, 3, 7, 0.06)
    data = synthesize(Scene((t,)), plan, cfg)
    l, n = 6, 11
    k = plan.alloc[n, l]
    c = plan.codes[n, k]
    omega = cfg.fc + c * cfg.delta_f
    zeta = omega / cfg.fc
    rho = transmit_gain(plan, cfg, n, k, np.sin(t.angle) - np.sin(cfg.theta))
    expect = (t.beta * np.exp(1j * 2 * np.pi * 3 / 8 * c) * np.exp(1j * 2 * np.pi * 7 / 32 * n * zeta)
              * np.exp(-2j * np.pi * omega * l * cfg.d * np.sin(t.angle) / SPEED_OF_LIGHT) * rho)
    assert data.samples[l, n] == pytest.approx(expect)


def test_superposition(cfg, rng):
    plan = sample_frequency_plan(cfg, rng)
    a = Scene((Target(1, 1, 2, 0.05),))
    b = Scene((Target(1, 4, 9, -0.1),))
    joint = synthesize(a.union(b), plan, cfg).samples
    assert np.allclose(joint, synthesize(a, plan, cfg).samples + synthesize(b, plan, cfg).samples)


def test_k1_caesar_matches_k1_wmar(rng):
    far = RadarConfig(K=1, mode=FAR)
    scene = sample_scene(far, 4, rng)
    plan = sample_frequency_plan(far, rng)
    w = far.replace(mode=WMAR)
    y_far = synthesize(scene, plan, far).samples
    y_w = synthesize(scene, FrequencyPlan(plan.codes, None), w).samples
    assert np.allclose(y_far, y_w[..., 0])


def test_noise_variance(rng):
    cfg = RadarConfig(kappa2=0.3)
    plan = sample_frequency_plan(cfg, rng)
    samples = np.concatenate([synthesize(Scene(), plan, cfg, rng).samples.ravel() for _ in range(50)])
    # 16000 samples: the variance estimate has relative sd about 1/sqrt(16000)
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(0.3, rel=0.04)
    assert np.var(samples.real) == pytest.approx(0.15, rel=0.05)
    assert abs(np.mean(samples)) < 0.02


def test_noisy_synthesis_needs_generator(rng):
    cfg = RadarConfig(kappa2=0.1)
    with pytest.raises(ConfigError):
        synthesize(Scene(), sample_frequency_plan(cfg, rng), cfg)


def test_echo_validation(cfg):
    with pytest.raises(ConfigError):
        EchoData(cfg.mode, np.zeros((10, 31), dtype=complex)).validate(cfg)
    bad = np.zeros((10, 32), dtype=complex)
    bad[0, 0] = np.nan
    with pytest.raises(ConfigError):
        EchoData(cfg.mode, bad).validate(cfg)


def test_csv_dump(tmp_path, cfg, rng):
    data = synthesize(boresight_target(cfg), sample_frequency_plan(cfg, rng), cfg)
    path = tmp_path / "y.csv"
    data.save_csv(path)
    header = path.read_text().splitlines()[0]
    assert "shape=10x32" in header and "mode=CAESAR" in header
    back = np.loadtxt(path, delimiter=",")
    assert np.allclose(back[:, 0] + 1j * back[:, 1], data.samples.ravel())


def test_full_survival_keeps_everything(cfg, rng):
    for pattern in (PULSE, OBSERVATION):
        mask = apply_jamming(cfg, 1.0, pattern, rng)
        assert np.array_equal(mask.indices, np.arange(64))


def test_survival_mean(rng):
    cfg = RadarConfig()
    sizes = np.array([len(apply_jamming(cfg, 0.4, PULSE, rng).pulses) for _ in range(10000)])
    # binomial(32, 0.4): mean 12.8, sd sqrt(32 * 0.24); 3 sigma band on the sample mean
    assert abs(sizes.mean() - 12.8) <= 3 * np.sqrt(32 * 0.24 / 10000)


def test_pulse_selective_drops_whole_pulses(cfg, rng):
    mask = apply_jamming(cfg, 0.5, PULSE, rng)
    table = mask.as_table()
    assert np.all(table.all(axis=1) | ~table.any(axis=1))
    assert np.array_equal(np.flatnonzero(table.any(axis=1)), mask.pulses)


def test_patterns_coincide_for_single_carrier():
    far = RadarConfig(K=1, mode=FAR)
    a = apply_jamming(far, 0.4, PULSE, np.random.default_rng(2))
    b = apply_jamming(far, 0.4, OBSERVATION, np.random.default_rng(2))
    assert np.array_equal(a.indices, b.indices)


def test_jamming_rejects_bad_rate(cfg, rng):
    for u in (0.0, 1.2, -0.1):
        with pytest.raises(ConfigError):
            apply_jamming(cfg, u, PULSE, rng)
    with pytest.raises(ConfigError):
        apply_jamming(cfg, 0.5, "burst", rng)
    assert len(apply_jamming(cfg, 0.5, NONE, rng)) == 64


def test_sample_availability_layout(cfg, rng):
    plan = sample_frequency_plan(cfg, rng)
    mask = pulse_mask([0, 5], cfg)
    avail = mask.sample_availability(plan, cfg)
    assert avail.shape == (10, 32)
    assert np.all(avail[:, [0, 5]]) and avail.sum() == 20
    w = cfg.with_mode(WMAR)
    assert mask.sample_availability(sample_frequency_plan(w, rng), w).shape == (10, 32, 2)
