import json

import pytest

from thermospec.config import ConfigError, DeviceConfig, dump_config, load_config, reference_device, parse_config


def test_reference_device_parses():
    cfg = reference_device()
    assert cfg.assembly().resonator.capacitance_C == pytest.approx(355.8e-15, rel=1e-3)
    assert cfg.mode_index == 1 and cfg.internal_q is None


def test_round_trip_lossless(device):
    again = parse_config(dump_config(device))
    assert again == device
    with_q = device.replace(internal_q=4321.5, mode_index=3)
    assert parse_config(dump_config(with_q)) == with_q


def test_unknown_key_suggestion(device):
    data = device.to_dict()
    data["cf_pf"] = data.pop("cf_farad")
    with pytest.raises(ConfigError, match="cf_farad"):
        DeviceConfig.from_dict(data)


@pytest.mark.parametrize("text", ["", "   \n", "[1, 2]", "{not json"])
def test_bad_documents(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_field_validation(device):
    with pytest.raises(ConfigError, match="rb_ohm"):
        device.replace(rb_ohm=-1.0)
    with pytest.raises(ConfigError, match="mode_index"):
        device.replace(mode_index=2)
    with pytest.raises(ConfigError, match="z0_ohm"):
        device.replace(z0_ohm="50")
    data = device.to_dict()
    del data["delta_ev"]
    with pytest.raises(ConfigError, match="delta_ev"):
        DeviceConfig.from_dict(data)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.json")
    p = tmp_path / "dev.json"
    p.write_text(json.dumps(reference_device().to_dict()))
    assert load_config(p) == reference_device()
