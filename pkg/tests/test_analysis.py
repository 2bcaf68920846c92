import numpy as np
import pytest

from thermospec.analysis import analyze_power_sweep, analyze_trace, electron_temperature
from thermospec.constants import dbm_to_watts
from thermospec.nis import calibration_curve, linear_calibration_fit
from thermospec.synth import NoiseSpec, SynthConfig, synthesize_trace
from thermospec.trace import SpectralTrace


def sweep(device, dbms, noise=NoiseSpec.none()):
    out = []
    for p in dbms:
        cfg = SynthConfig.from_device(device, dbm_to_watts(p))
        out.append((cfg.p_in, synthesize_trace(cfg, noise)))
    return out, cfg.model()


def test_kinds_agree(device):
    cfg = SynthConfig.from_device(device, dbm_to_watts(-112))
    res = [analyze_trace(synthesize_trace(cfg, NoiseSpec.none(), k), cfg.model(), cfg.p_in)
           for k in ("bolometer_power", "bolometer_temperature", "thermometer_voltage")]
    for r in res[1:]:
        assert r.gamma_t == pytest.approx(res[0].gamma_t, rel=1e-7)
    assert res[2].voltage_fit is not None and res[0].voltage_fit is None
    d = res[2].to_dict()
    assert "calibration_free_comparison" in d


def test_single_trace_sweep_skips_loss_fit(device):
    traces, model = sweep(device, [-110])
    rep = analyze_power_sweep(traces, model)
    assert len(rep.traces) == 1 and rep.loss_fit is None
    assert any("skipped" in n for n in rep.notices)


def test_failure_is_isolated(device):
    traces, model = sweep(device, np.linspace(-130, -95, 8))
    f = traces[0][1].frequencies
    flat = SpectralTrace(f, np.full(f.size, 3e-4), "thermometer_voltage")
    rep = analyze_power_sweep(traces + [(1e-14, flat)], model)
    assert len(rep.failures) == 1 and rep.failures[0]["index"] == 8
    assert rep.loss_fit is not None


def test_calibration_path(device, model):
    t, v = calibration_curve(model.thermometer, 0.05, 0.4, 15)
    cal = linear_calibration_fit(list(zip(t, v)))
    cfg = SynthConfig.from_device(device, dbm_to_watts(-110))
    tr = synthesize_trace(cfg, NoiseSpec.none())
    res = analyze_trace(tr, model, cfg.p_in, calibration=cal)
    assert res.conversion == "linear calibration"
    # The linear calibration ignores the low-T curvature, so the answer moves, but stays sane.
    assert res.gamma_t == pytest.approx(tr.metadata["truth_gamma_t_hz"], rel=0.3)
    assert np.all(electron_temperature(tr, model, cal) > 0)


def test_unphysical_linewidth_reported(device, model):
    cfg = SynthConfig.from_device(device, dbm_to_watts(-110))
    tr = synthesize_trace(cfg, NoiseSpec.none(), "bolometer_power")
    f0 = tr.metadata["truth_f0_hz"]
    squeezed = SpectralTrace(f0 + (tr.frequencies - f0) * 0.5, tr.values, "bolometer_power")
    res = analyze_trace(squeezed, model, cfg.p_in)
    assert res.internal_q is None
    assert any("narrower than the coupling" in d for d in res.diagnostics)
