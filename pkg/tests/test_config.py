import pytest

from aortatrack.config import PipelineConfig, load_config, parse_config, with_overrides
from aortatrack.errors import ConfigError


def test_defaults_validate():
    cfg = PipelineConfig().validate()
    assert cfg.track_params.lo == 600 and cfg.track_params.hi == 4000
    assert cfg.criteria.circularity_min == 0.40
    assert cfg.render_window == (0, 2500)


def test_parse_values_and_comments():
    cfg = parse_config(
        """
        # window
        threshold_lo = 700   # inline
        threshold_hi=3000
        seed_point = 120, 110
        classify_mode = otsu
        fixed_threshold = none
        separability_min = 0.7
        """
    )
    assert (cfg.threshold_lo, cfg.threshold_hi) == (700, 3000)
    assert cfg.seed_point == (120, 110)
    assert cfg.classify_params.mode == "otsu"
    assert cfg.fixed_threshold is None
    assert cfg.separability_min == 0.7


def test_text_roundtrip():
    cfg = PipelineConfig(seed_point=(3, 4), fixed_threshold=1400.0, gap_tolerance=2)
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize(
    "text, needle",
    [
        ("threshold_low = 5", "threshold_low"),
        ("threshold_lo = 5\nthreshold_lo = 6", "duplicate"),
        ("threshold_lo", "key = value"),
        ("area_min = several", "area_min"),
        ("seed_point = 1", "seed_point"),
    ],
)
def test_parse_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_window_order_names_both_keys():
    with pytest.raises(ConfigError) as exc:
        parse_config("threshold_lo = 5000\nthreshold_hi = 100").validate()
    assert "threshold_lo" in str(exc.value) and "threshold_hi" in str(exc.value)


@pytest.mark.parametrize(
    "override",
    [
        dict(overlap_min=0),
        dict(separability_min=1.5),
        dict(classify_mode="kmeans"),
        dict(circularity_min=-0.1),
        dict(render_lo=10, render_hi=10),
        dict(threshold_hi=70000),
    ],
)
def test_invalid_values(override):
    with pytest.raises(ConfigError):
        with_overrides(PipelineConfig(), **override).validate()


def test_overrides_skip_none(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("output_dir = from_file\n")
    cfg = load_config(path)
    assert with_overrides(cfg, output_dir=None).output_dir == "from_file"
    assert with_overrides(cfg, output_dir="flag").output_dir == "flag"
