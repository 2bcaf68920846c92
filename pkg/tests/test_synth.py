import numpy as np
import pytest

from thermospec.analysis import absorbed_power, analyze_trace
from thermospec.circuit import power_to_bolometer_lorentzian, quality_factors
from thermospec.constants import dbm_to_watts
from thermospec.synth import NoiseSpec, SynthConfig, SynthesisError, round_trip, synthesize_trace
from thermospec.trace import ValueKind


@pytest.fixture(scope="module")
def cfg(device):
    return SynthConfig.from_device(device, dbm_to_watts(-110))


def test_noiseless_power_is_eq1(cfg):
    tr = synthesize_trace(cfg, NoiseSpec.none(), "bolometer_power")
    qf = quality_factors(cfg.truth_assembly)
    assert np.array_equal(tr.values, power_to_bolometer_lorentzian(cfg.frequency_grid, qf, cfg.p_in))
    assert tr.metadata["truth_gamma_t_hz"] == qf.gamma_t
    assert tr.metadata["noise"]["rng"] == "numpy.random.PCG64"


def test_determinism(cfg):
    a = synthesize_trace(cfg, NoiseSpec(seed=4))
    b = synthesize_trace(cfg, NoiseSpec(seed=4))
    c = synthesize_trace(cfg, NoiseSpec(seed=5))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_stage_consistency_exact_thermometer(device):
    cfg = SynthConfig.from_device(device, dbm_to_watts(-115), points=17)
    exact = synthesize_trace(cfg, NoiseSpec.none(), exact_thermometer=True)
    p_exact = absorbed_power(exact, cfg.model())
    p_true = synthesize_trace(cfg, NoiseSpec.none(), "bolometer_power").values
    assert np.max(np.abs(p_exact - p_true)) < 1e-6 * np.max(p_true)


def test_noise_sqrt_time_law(cfg):
    n1 = NoiseSpec(integration_time=1.0, seed=1)
    n4 = NoiseSpec(integration_time=4.0, seed=2)
    assert n4.sigma_power == pytest.approx(n1.sigma_power / 2)
    clean = synthesize_trace(cfg, NoiseSpec.none(), "bolometer_power").values
    s1 = np.std(synthesize_trace(cfg, n1, "bolometer_power").values - clean)
    s4 = np.std(synthesize_trace(cfg, n4, "bolometer_power").values - clean)
    assert s1 / s4 == pytest.approx(2.0, rel=0.15)


def test_voltage_noise(cfg):
    clean = synthesize_trace(cfg, NoiseSpec.none()).values
    noisy = synthesize_trace(cfg, NoiseSpec(mode="voltage_std", voltage_std=1e-7, seed=1)).values
    assert np.std(noisy - clean) == pytest.approx(1e-7, rel=0.15)
    with pytest.raises(SynthesisError):
        synthesize_trace(cfg, NoiseSpec(mode="voltage_std", voltage_std=1e-7), "bolometer_power")


def test_config_errors(cfg):
    with pytest.raises(SynthesisError):
        NoiseSpec(mode="pink")
    with pytest.raises(SynthesisError):
        NoiseSpec(nep=-1.0)
    with pytest.raises(SynthesisError):
        SynthConfig(cfg.assembly, cfg.body, cfg.thermometer, 0.05, 5000.0, cfg.frequency_grid[::-1], 1e-14)
    with pytest.raises(SynthesisError):
        SynthConfig(cfg.assembly, cfg.body, cfg.thermometer, 0.05, -1.0, cfg.frequency_grid, 1e-14)


def test_single_photon_scale(device):
    cfg = SynthConfig.from_device(device, dbm_to_watts(-120))
    res = analyze_trace(synthesize_trace(cfg, NoiseSpec.none()), cfg.model(), cfg.p_in)
    assert 0.1 < res.photon_number_simplified < 10


def test_third_mode_visible_in_voltage(device):
    cfg = SynthConfig.from_device(device, dbm_to_watts(-100), mode_index=3)
    tr = synthesize_trace(cfg, NoiseSpec.none())
    res = analyze_trace(tr, cfg.model(), cfg.p_in)
    assert res.voltage_fit.center_f0 == pytest.approx(3 * 7.026e9, rel=1e-6)
    assert res.gamma_t == pytest.approx(tr.metadata["truth_gamma_t_hz"], rel=1e-6)


def test_round_trip_noiseless(cfg):
    rep = round_trip(cfg, NoiseSpec.none())
    s = rep.summary
    assert s["n_failed"] == 0
    assert abs(s["f0_abs_error_hz"][0]) < 1e3
    assert abs(s["gamma_t_rel_error"][0]) < 1e-3
    assert abs(s["q_internal_rel_error"][0]) < 1e-2


def test_zero_signal_fails_gracefully(device):
    cfg = SynthConfig.from_device(device, 1e-24)
    rep = round_trip(cfg, NoiseSpec(seed=3), output_kind="bolometer_power")
    # No resonance above the noise: the run is scored as a failure or carries a huge error bar.
    run = rep.runs[0]
    assert len(rep.runs) == 1
    assert run.error is not None or not run.gamma_t_stderr < 0.5 * run.gamma_t


def test_coverage_band(cfg):
    rep = round_trip(cfg, NoiseSpec(nep=2e-16), seeds=range(100), output_kind=ValueKind.BOLOMETER_POWER)
    assert 0.55 <= rep.summary["gamma_t_1sigma_coverage"] <= 0.80
