import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ksdft1d import ConfigurationError, Grid, PotentialField
from ksdft1d import io as kio


@given(arrays(np.float64, 8, elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_field_csv_roundtrip_is_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("f") / "rho.csv"
    kio.write_field_csv(path, Grid(8), values)
    x, back = kio.read_field_csv(path)
    np.testing.assert_array_equal(back, values)
    np.testing.assert_array_equal(x, Grid(8).nodes)


def test_complex_csv_roundtrip(tmp_path, rng):
    z = rng.normal(size=8) + 1j * rng.normal(size=8)
    kio.write_complex_csv(tmp_path / "z.csv", Grid(8), z)
    _, back = kio.read_complex_csv(tmp_path / "z.csv")
    np.testing.assert_array_equal(back, z)


def test_potential_json_roundtrip(tmp_path):
    v = PotentialField(np.linspace(-1, 1, 8) / 3, ((2, 0.125),))
    kio.save_potential(tmp_path / "v.json", v)
    w = kio.load_potential(tmp_path / "v.json")
    np.testing.assert_array_equal(w.smooth, v.smooth)
    assert w.atoms == v.atoms


def test_state_container_roundtrip(tmp_path, rng):
    c = rng.normal(size=28) + 0j
    kio.save_state(tmp_path / "s.bin", 8, 2, c)
    n, N, back = kio.load_state(tmp_path / "s.bin")
    assert (n, N) == (8, 2)
    np.testing.assert_array_equal(back, c)
    (tmp_path / "t.bin").write_bytes((tmp_path / "s.bin").read_bytes()[:-16])
    with pytest.raises(ConfigurationError):
        kio.load_state(tmp_path / "t.bin")


def test_matrix_container_roundtrip(tmp_path, rng):
    M = rng.normal(size=(5, 5))
    kio.save_matrix(tmp_path / "m.bin", M)
    np.testing.assert_array_equal(kio.load_matrix(tmp_path / "m.bin"), M)
    with pytest.raises(ConfigurationError):
        kio.load_state(tmp_path / "m.bin")


def test_json_handles_numpy_and_complex(tmp_path):
    kio.write_json(tmp_path / "a.json", {"x": np.float64(0.1), "z": 1 + 2j, "a": np.arange(3), "f": np.inf})
    data = kio.read_json(tmp_path / "a.json")
    assert data == {"a": [0, 1, 2], "f": "inf", "x": 0.1, "z": {"im": 2.0, "re": 1.0}}


def test_pair_csv_has_all_entries(tmp_path):
    kio.write_pair_csv(tmp_path / "p.csv", Grid(8), np.ones((8, 8)))
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 65


def test_atomic_write_leaves_no_temporaries(tmp_path):
    kio.atomic_write(tmp_path / "a.txt", "one")
    kio.atomic_write(tmp_path / "a.txt", "two")
    assert (tmp_path / "a.txt").read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_read_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        kio.read_json(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigurationError):
        kio.read_json(tmp_path / "bad.json")
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        kio.read_field_csv(tmp_path / "bad.csv")
