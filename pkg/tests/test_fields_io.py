import json

import numpy as np
import pytest

from nodal import (GridWindow, field_from_function, read_field, write_field,
                   sample_trigonometric)


def test_window_round_trip():
    w = GridWindow.box([1.0, -2.0], [3.0, 4.0], [0.5, 0.25])
    w2 = GridWindow.from_config(w.to_config())
    assert np.allclose(w.origin, w2.origin)
    assert w.shape == w2.shape


def test_window_axis_and_upper():
    w = GridWindow.make([0.0], [0.5], (5,))
    assert np.allclose(w.axis(0), [0, 0.5, 1.0, 1.5, 2.0])
    assert w.upper[0] == pytest.approx(2.0)
    assert w.contains_ball([1.0], 1.0)
    assert not w.contains_ball([1.0], 1.1)


def test_field_binary_round_trip(tmp_path):
    f = sample_trigonometric(6, 2, grid_step=0.2, seed=3)
    path = tmp_path / "field.bin"
    write_field(f, path)
    g = read_field(path)
    assert np.array_equal(f.values, g.values)
    assert np.array_equal(f.gradients, g.gradients)
    assert g.wrap
    assert g.meta["degree"] == 6


def test_field_file_size_arithmetic(tmp_path):
    win = GridWindow.box([0.0, 0.0], 1.0, 0.5)
    f = field_from_function(win, lambda p: p[..., 0],
                            lambda p: np.stack([np.ones(p.shape[:-1]),
                                                np.zeros(p.shape[:-1])]))
    path = tmp_path / "f.bin"
    write_field(f, path)
    n = int(np.prod(win.shape))
    assert path.stat().st_size == 16 + 8 * n * (1 + 2)
    sidecar = json.loads((tmp_path / "f.bin.json").read_text())
    assert sidecar["window"]["shape"] == list(win.shape)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTAFLD0" + b"\x00" * 64)
    (tmp_path / "junk.bin.json").write_text(json.dumps(
        {"window": {"origin": [0.0], "spacing": [1.0], "shape": [2]}}))
    with pytest.raises(ValueError):
        read_field(path)


def test_same_seed_identical_bytes(tmp_path):
    p1 = tmp_path / "a.bin"
    p2 = tmp_path / "b.bin"
    write_field(sample_trigonometric(5, 1, grid_step=0.1, seed=9), p1)
    write_field(sample_trigonometric(5, 1, grid_step=0.1, seed=9), p2)
    assert p1.read_bytes() == p2.read_bytes()
