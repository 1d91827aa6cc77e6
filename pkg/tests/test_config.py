import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liftns.config import ConfigError, ExperimentConfig, parse_config, parse_config_text


class TestParse:
    def test_minimal_file_fills_defaults(self, tmp_path):
        path = tmp_path / "min.cfg"
        path.write_text("grid_n = 32\n")
        cfg = parse_config(path)
        assert cfg.grid_n == 32
        assert cfg.nu == 0.01
        assert cfg.period == 2 * math.pi
        assert cfg.rate_mode == "constant"
        assert cfg.r0 == 2.0

    def test_odd_grid_rejected_with_line(self):
        with pytest.raises(ConfigError, match="grid_n must be even") as info:
            parse_config_text("# header\ngrid_n = 31\n")
        assert info.value.line == 2 and info.value.field == "grid_n"

    def test_empty_file_is_default(self):
        cfg = parse_config_text("")
        assert cfg == ExperimentConfig()
        assert parse_config_text(cfg.to_text()) == cfg

    def test_comments_and_blank_lines(self):
        cfg = parse_config_text("\n  # nothing\nnu = 0.02   # thinner\n\nT = 1\n")
        assert (cfg.nu, cfg.T) == (0.02, 1.0)

    @pytest.mark.parametrize(
        "text, match, line",
        [
            ("foo = 1", "unknown key", 1),
            ("nu = 0.1\nnu = 0.2", "duplicate", 2),
            ("dt = fast", "bad value", 1),
            ("just words", "key = value", 1),
            ("grid_n = 16\nrate_mode = wiggly", "rate_mode", 2),
            ("r_min = 0", "r_min", 1),
            ("amplitude = nan", "bad value", 1),
        ],
    )
    def test_errors_name_line(self, text, match, line):
        with pytest.raises(ConfigError, match=match) as info:
            parse_config_text(text)
        assert info.value.line == line

    def test_auto_fields(self):
        cfg = parse_config_text("amplitude = auto\ndtau = auto")
        assert cfg.amplitude is None and cfg.dtau is None
        assert cfg.tg_amplitude == pytest.approx(math.sqrt(5.0 / (2 * math.pi) ** 3))

    def test_pq_list(self):
        cfg = parse_config_text("pq = 4,6; 8,4")
        assert cfg.pq == ((4.0, 6.0), (8.0, 4.0))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            parse_config(tmp_path / "nope.cfg")

    def test_affine_intercept_may_leave_clamp(self):
        cfg = parse_config_text("rate_mode = affine\nr0 = 0.0\nr1 = 0.3")
        assert cfg.r0 == 0.0


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    r_min = draw(st.floats(1e-3, 1.0, **finite))
    r_max = draw(st.floats(1.0, 100.0, **finite))
    mode = draw(st.sampled_from(["constant", "affine"]))
    return ExperimentConfig(
        grid_n=2 * draw(st.integers(4, 64)),
        period=draw(st.floats(0.1, 100.0, **finite)),
        nu=draw(st.floats(1e-6, 1.0, **finite)),
        dt=draw(st.floats(1e-6, 0.1, **finite)),
        T=draw(st.floats(0.0, 10.0, **finite)),
        amplitude=draw(st.one_of(st.none(), st.floats(0.0, 10.0, **finite))),
        rate_mode=mode,
        r0=draw(st.floats(r_min, r_max, **finite)),
        r1=draw(st.floats(-5.0, 5.0, **finite)),
        norm_kind=draw(st.sampled_from(["grad-L2", "vort-sup"])),
        r_min=r_min,
        r_max=r_max,
        lift_mode=draw(st.sampled_from(["locked", "free"])),
        dtau=draw(st.one_of(st.none(), st.floats(1e-6, 1.0, **finite))),
        sample_every=draw(st.integers(1, 100)),
        table_rows=draw(st.integers(1, 20)),
        output_dir=draw(st.sampled_from(["out", "results/run one", "/tmp/x"])),
        seed=draw(st.integers(0, 2**31)),
        energy_convention=draw(st.sampled_from(["full", "half"])),
        pq=tuple(draw(st.lists(st.tuples(st.floats(1, 20, **finite), st.floats(1, 20, **finite)), min_size=1, max_size=3))),
    )


class TestRoundTrip:
    @settings(max_examples=100, deadline=None)
    @given(cfg=configs())
    def test_lossless(self, cfg):
        assert parse_config_text(cfg.to_text()) == cfg
