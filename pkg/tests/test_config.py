import pytest

from hyperimage.config import config_from_dict, load_config
from hyperimage.engine import ConfigError, ExperimentConfig
from hyperimage.pattern import save_pattern, generate_checkerboard


def field_of(doc, tmp_path=None):
    with pytest.raises(ConfigError) as err:
        config_from_dict(doc, tmp_path or ".")
    return err.value.field


def test_empty_document_gives_defaults():
    cfg, extras = config_from_dict({})
    assert cfg.config_hash() == ExperimentConfig().config_hash()
    assert extras == {"chsh": {}, "fringe": {}, "slit": {}}


def test_full_document(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        """
seed = 7
[source]
sigma_x = 0.2
[pattern]
kind = "checkerboard"
square_mm = 0.5
n_squares = 6
[telescope]
demag = 0.6
invert = false
[detector]
visibility = 0.94
[setting]
delta1 = "absent"
delta2 = 30
gate = "coincidence"
photon1_mode = "point"
x0_mm = 0.1
aperture_mm = 0.2
[grid]
pitch_mm = 0.1
[backend]
kind = "montecarlo"
n_pairs = 1000
workers = 2
[geometry]
d1_m = 2.0
d2_m = 1.0
[chsh]
angles = [0, 45, 22.5, 67.5]
"""
    )
    cfg, extras = load_config(path)
    assert cfg.seed == 7
    assert cfg.pattern.shape == (6, 6) and cfg.pattern.pitch == 0.5
    assert cfg.telescope.demag == 0.6 and not cfg.telescope.invert
    assert cfg.detector.visibility == 0.94
    assert cfg.setting.delta1 is None and cfg.setting.delta2 == 30.0
    assert cfg.setting.photon1_mode.kind == "point" and cfg.setting.photon1_mode.aperture_mm == 0.2
    assert cfg.backend.kind == "montecarlo" and cfg.backend.workers == 2
    assert cfg.d1_mm == 2000.0 and cfg.d2_mm == 1000.0
    assert extras["chsh"]["angles"] == [0, 45, 22.5, 67.5]


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"bogus": {}}, "bogus"),
        ({"source": {"sigmax": 1}}, "source.sigmax"),
        ({"detector": {"visibility": 2.0}}, "detector.visibility"),
        ({"setting": {"delta1": "left"}}, "setting.delta1"),
        ({"setting": {"gate": "open"}}, "setting.gate"),
        ({"geometry": {"d1_m": "far"}}, "geometry.d1_m"),
        ({"geometry": {"d2_m": -1.0}}, "geometry.d2_m"),
        ({"seed": -3}, "seed"),
        ({"seed": 1.5}, "seed"),
        ({"pattern": {"kind": "spiral"}}, "pattern.kind"),
        ({"pattern": {"kind": "file", "pitch_mm": 1.0}}, "pattern.path"),
        ({"chsh": {"angle": [1]}}, "chsh.angle"),
        ({"backend": "fast"}, "backend"),
    ],
)
def test_errors_name_the_field(doc, field):
    assert field_of(doc) == field


def test_file_pattern_relative_to_config(tmp_path):
    save_pattern(generate_checkerboard(1.0, 2), tmp_path / "board.pgm")
    cfg, _ = config_from_dict({"pattern": {"kind": "file", "path": "board.pgm", "pitch_mm": 0.5}}, tmp_path)
    assert cfg.pattern.shape == (2, 2) and cfg.pattern.pitch == 0.5
    assert cfg.pattern_source.endswith("board.pgm")


def test_missing_pattern_file_names_path(tmp_path):
    with pytest.raises(ConfigError) as err:
        config_from_dict({"pattern": {"path": "nowhere.pgm", "pitch_mm": 1.0}}, tmp_path)
    assert err.value.field == "pattern.path"
    assert "nowhere.pgm" in str(err.value)


def test_malformed_pattern_file(tmp_path):
    (tmp_path / "bad.pgm").write_bytes(b"P5\n2 x\n255\n")
    assert field_of({"pattern": {"path": "bad.pgm", "pitch_mm": 1.0}}, tmp_path) == "pattern.path"


def test_bad_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("seed = = 1\n")
    with pytest.raises(ConfigError, match="broken.toml"):
        load_config(path)
    with pytest.raises(ConfigError, match="file not found"):
        load_config(tmp_path / "absent.toml")
