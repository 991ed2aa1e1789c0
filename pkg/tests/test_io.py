import json
import os

import numpy as np
import pytest

from afdm_shaping import AfdmConfig
from afdm_shaping.baselines import conventional_afdm
from afdm_shaping.io import (
    MAGIC,
    WaveformFormatError,
    atomic_write,
    config_hash,
    csv_text,
    decode_waveform,
    design_from_dict,
    design_to_dict,
    encode_waveform,
    read_csv,
    read_waveform,
    write_csv,
    write_manifest,
    write_waveform,
)


class TestWaveformFormat:
    def test_round_trip(self, tmp_path, rng):
        x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        write_waveform(tmp_path / "w.afdm", x, 8, 4)
        y, n, lp = read_waveform(tmp_path / "w.afdm")
        np.testing.assert_array_equal(x, y)
        assert (n, lp) == (8, 4)

    def test_layout(self):
        blob = encode_waveform([1 + 2j, -3j], 2, 1)
        assert blob[:16] == MAGIC
        assert blob[16:24] == (2).to_bytes(4, "little") + (1).to_bytes(4, "little")
        assert np.frombuffer(blob[24:], "<f8").tolist() == [1.0, 2.0, 0.0, -3.0]
        assert len(blob) == 24 + 32

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            encode_waveform(np.ones(5), 2, 2)

    @pytest.mark.parametrize("mutate", [
        lambda b: b[:10],
        lambda b: b"XXXXXXXX" + b[8:],
        lambda b: b[:-1],
        lambda b: b + b"\0" * 16,
        lambda b: b[:16] + bytes(8),
    ])
    def test_corrupt(self, mutate):
        blob = encode_waveform(np.ones(8), 4, 2)
        with pytest.raises(WaveformFormatError):
            decode_waveform(mutate(blob))


class TestAtomicWrite:
    def test_replaces_and_leaves_no_temp(self, tmp_path):
        p = tmp_path / "sub" / "f.txt"
        atomic_write(p, "one")
        atomic_write(p, b"two")
        assert p.read_text() == "two"
        assert os.listdir(p.parent) == ["f.txt"]

    def test_failure_keeps_old_file(self, tmp_path):
        p = tmp_path / "f.txt"
        atomic_write(p, "keep")
        with pytest.raises(TypeError):
            atomic_write(p, object())
        assert p.read_text() == "keep"
        assert os.listdir(tmp_path) == ["f.txt"]


class TestCsv:
    def test_float_precision(self, tmp_path):
        v = 0.1 + 0.2
        write_csv(tmp_path / "a.csv", ["x", "n"], [(v, np.int64(3))])
        header, rows = read_csv(tmp_path / "a.csv")
        assert header == ["x", "n"] and float(rows[0][0]) == v and rows[0][1] == "3"

    def test_stable_text(self):
        assert csv_text(["a"], [(1.5,), (np.float64(2.0),)]) == "a\n1.5\n2.0\n"

    def test_empty(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(ValueError):
            read_csv(tmp_path / "e.csv")


class TestDesignJson:
    def test_round_trip(self):
        cfg = AfdmConfig.create(16, 0.25)
        d = conventional_afdm(cfg, 3)
        blob = json.loads(json.dumps(design_to_dict(d, seed=3)))
        assert blob["seed"] == 3
        e = design_from_dict(blob, 16)
        np.testing.assert_array_equal(e.u, d.u)
        np.testing.assert_array_equal(e.b, d.b)
        np.testing.assert_array_equal(e.partition.R, d.partition.R)


class TestManifest:
    def test_fields(self, tmp_path):
        write_manifest(tmp_path, "design", "[a]\nb = 1\n", 7, [tmp_path / "x.csv"], failures=["s1"])
        m = json.loads((tmp_path / "manifest.json").read_text())
        assert m["seed"] == 7 and m["command"] == "design"
        assert m["config_sha256"] == config_hash("[a]\nb = 1\n")
        assert m["failures"] == ["s1"]
        assert {"version", "python", "numpy", "created", "outputs"} <= set(m)
