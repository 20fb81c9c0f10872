from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landau_mhd import io
from landau_mhd.errors import ConfigurationError
from landau_mhd.specfield import NormSeries
from landau_mhd.weaklp import Sampled1D


def test_field_round_trip(tmp_path):
    data = np.random.default_rng(0).standard_normal((3, 16, 16, 16))
    p = io.write_field(tmp_path / "f.bin", data, 12.5)
    back, L = io.read_field(p)
    np.testing.assert_array_equal(back, data)
    assert L == 12.5
    assert p.stat().st_size == 32 + data.size * 8


def test_field_layout_is_x_fastest(tmp_path):
    data = np.zeros((2, 16, 16, 16))
    data[0, 1, 0, 0] = 1.0
    data[1, 0, 0, 0] = 2.0
    p = io.write_field(tmp_path / "f.bin", data, 1.0)
    body = np.frombuffer(p.read_bytes()[32:], dtype="<f8")
    # node (1,0,0) is the second node; components are interleaved
    assert body[1] == 2.0 and body[2] == 1.0


def test_field_errors(tmp_path):
    (tmp_path / "bad.bin").write_bytes(b"x" * 40)
    with pytest.raises(ValueError):
        io.read_field(tmp_path / "bad.bin")
    p = io.write_field(tmp_path / "f.bin", np.ones((16, 16, 16)), 1.0)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError):
        io.read_field(p)
    with pytest.raises(ValueError):
        io.write_field(tmp_path / "g.bin", np.ones((1, 4, 4, 5)), 1.0)


def test_series_round_trip(tmp_path):
    s = NormSeries()
    s.append(0.0, a=1.0, b=0.1)
    s.append(0.5, a=1.0 / 3.0, b=0.2)
    p = io.write_series_long(tmp_path / "s.csv", s)
    back = io.read_series_long(p)
    np.testing.assert_array_equal(back["a"][1], s["a"])
    io.write_series_long(p, s, append=True)
    assert len(io.read_series_long(p)["a"][0]) == 4
    wide = io.write_series_wide(tmp_path / "w.csv", s).read_text().splitlines()
    assert wide[0] == "t,a,b" and len(wide) == 3


def test_sampled_round_trip(tmp_path):
    f = Sampled1D([0.5, 1.0, 2.0], [3.0, 2.0, 0.0])
    g = io.read_sampled(io.write_sampled(tmp_path / "f.csv", f))
    np.testing.assert_array_equal(g.nodes, f.nodes)
    np.testing.assert_array_equal(g.values, f.values)


def test_json_fractions_and_nonfinite(tmp_path):
    p = io.write_json(tmp_path / "r.json", {"rate": Fraction(2, 5), "x": np.float64(1.5),
                                            "bad": float("inf"), "arr": np.arange(3)})
    assert io.read_json(p) == {"rate": "2/5", "x": 1.5, "bad": "inf", "arr": [0, 1, 2]}


SCHEMA = dict(N=64, L=32.0, cases=["plain:1"], verbose=False, name="x")


def test_config_parsing():
    cfg = io.parse_config("# comment\nN = 32\nL = 16   # inline\ncases = ['div:2']\n"
                          "verbose = yes\nname = run_a\n", SCHEMA)
    assert cfg == dict(N=32, L=16.0, cases=["div:2"], verbose=True, name="run_a")
    assert io.parse_config("", SCHEMA) == SCHEMA
    assert io.parse_config(io.format_config(cfg), SCHEMA) == cfg


@pytest.mark.parametrize("text, key", [("Nx = 3", "Nx"), ("N = 2.5", "N"), ("verbose = 3", "verbose"),
                                       ("L = 'abc'", "L")])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigurationError, match=f"'{key}'"):
        io.parse_config(text, SCHEMA)


def test_config_malformed_line():
    with pytest.raises(ConfigurationError, match="line 2"):
        io.parse_config("N = 3\njust words\n", SCHEMA)


@settings(max_examples=50, deadline=None)
@given(st.integers(16, 1024), st.floats(0.1, 1e3, allow_nan=False),
       st.lists(st.sampled_from(["plain:1", "div:2", "plain:3/2"]), max_size=4))
def test_config_format_round_trip(N, L, cases):
    cfg = dict(SCHEMA, N=N, L=L, cases=cases)
    assert io.parse_config(io.format_config(cfg), SCHEMA) == cfg


def test_gnuplot_script(tmp_path):
    p = io.write_gnuplot(tmp_path / "a.gp", "a.csv", ["l2", "grad_l2"], "demo")
    text = p.read_text()
    assert "using 't':'l2'" in text and "using 't':'grad_l2'" in text
    assert "set logscale xy" in text
