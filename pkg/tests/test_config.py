import json

import pytest

from murmurscope.config import Config, load_config, load_priors
from murmurscope.errors import ValidationError


def test_defaults_are_valid():
    cfg = Config()
    cfg.validate()
    assert cfg.signal.grid_hz > 0
    assert cfg.hypothesis.optimizer == "nelder-mead"


def test_load_from_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "signal": {"grid_hz": 100.0},
        "hypothesis": {"max_iters": 300},
    }))
    cfg = load_config(path, overrides=["segmentation.threshold_factor=2.5"])
    assert cfg.signal.grid_hz == 100.0
    assert cfg.hypothesis.max_iters == 300
    assert cfg.segmentation.threshold_factor == 2.5


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"nonsense": {}}))
    with pytest.raises(ValidationError, match="unknown config section"):
        load_config(path)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"signal": {"grid": 100}}))
    with pytest.raises(ValidationError, match="unknown config key"):
        load_config(path)


def test_bad_value_rejected():
    with pytest.raises(ValidationError):
        load_config(None, overrides=["signal.grid_hz=fast"])


def test_invalid_override_shape():
    with pytest.raises(ValidationError):
        load_config(None, overrides=["grid_hz=100"])


def test_validation_catches_bad_values():
    with pytest.raises(ValidationError):
        load_config(None, overrides=["hypothesis.blend_weight=1.5"])
    with pytest.raises(ValidationError):
        load_config(None, overrides=["hypothesis.optimizer=sgd"])


def test_bool_coercion():
    cfg = load_config(None, overrides=["hypothesis.free_endpoints=true"])
    assert cfg.hypothesis.free_endpoints is True


def test_priors_file(tmp_path):
    path = tmp_path / "priors.json"
    path.write_text(json.dumps({"ms_median_dtau12_s": 0.05, "ms_median_dtau4L_s": 0.12}))
    priors = load_priors(path)
    assert priors.ms_median_dtau12_s == 0.05
    assert priors.ms_median_dtau4L_s == 0.12


def test_priors_file_rejects_nonpositive(tmp_path):
    path = tmp_path / "priors.json"
    path.write_text(json.dumps({"ms_median_dtau12_s": -1.0}))
    with pytest.raises(ValidationError):
        load_priors(path)
