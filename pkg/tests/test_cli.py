import csv
import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from friedrichs import cli, modelfile
from friedrichs.errors import ModelError
from friedrichs.export import FMT, write_csv
from friedrichs.model import FlatWindow, LevelSet, Lorentzian, Ohmic, SpectralDensityModel

DATA = resources.files("friedrichs") / "data"


def bundled(name):
    return str(DATA / f"{name}.toml")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path)])


# model files

real = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
amp = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).map(lambda p: complex(*p))


@st.composite
def models(draw):
    n = draw(st.integers(1, 3))
    levels = draw(st.lists(real, min_size=n, max_size=n))
    g = lambda: tuple(draw(st.lists(amp, min_size=n, max_size=n)))
    chans = []
    for kind in draw(st.lists(st.sampled_from(["flat", "lorentz", "ohmic", "markov"]),
                              min_size=1, max_size=3)):
        if kind == "flat":
            lo = draw(real)
            chans.append(FlatWindow(g(), lo, lo + draw(st.floats(0.1, 10))))
        elif kind == "lorentz":
            chans.append(Lorentzian(g(), draw(real), draw(st.floats(1e-3, 5))))
        elif kind == "ohmic":
            chans.append(Ohmic(g(), draw(st.floats(0.1, 3)), draw(st.floats(0.1, 10))))
        else:
            chans.append(FlatWindow(g(), -np.inf, np.inf))
    return SpectralDensityModel(LevelSet(tuple(levels)), tuple(chans))


class TestModelFile:
    @settings(max_examples=60, deadline=None)
    @given(models())
    def test_round_trip(self, model):
        text = modelfile.dumps(model)
        again = modelfile.loads(text)
        assert again == model
        assert modelfile.dumps(again) == text
        assert modelfile.model_hash(again) == modelfile.model_hash(model)

    @pytest.mark.parametrize("name", ["one_level_lorentzian", "markov_two_level",
                                      "narrow_two_level", "half_line_flat", "zero_coupling"])
    def test_bundled_models_load(self, name):
        assert modelfile.load(bundled(name)).n >= 1

    @pytest.mark.parametrize("text", [
        "levels = [",
        'units = "SI"\nlevels = [1.0]',
        "foo = 1\nlevels = [1.0]",
        "spectrum = 'full_line'",
        'levels = [1.0]\n[[channel]]\nkind = "gaussian"\ng = [[1, 0]]',
        'levels = [1.0]\n[[channel]]\nkind = "lorentzian"\ng = [[1, 0]]\ncenter = 0.0',
        'levels = [1.0]\n[[channel]]\nkind = "lorentzian"\ng = [1]\ncenter = 0.0\nwidth = 1.0',
        'levels = [1.0]\n[[channel]]\nkind = "lorentzian"\ng = [[1, 0]]\ncenter = 0.0\n'
        'width = 1.0\nextra = 2',
    ])
    def test_invalid(self, text):
        with pytest.raises(ModelError):
            modelfile.loads(text)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ModelError):
            modelfile.load(tmp_path / "missing.toml")

    def test_hash_sensitive(self):
        a = modelfile.load(bundled("one_level_lorentzian"))
        b = a.replace_channels((Lorentzian((0.1 + 1e-12,), 1.0, 0.05),))
        assert modelfile.model_hash(a) != modelfile.model_hash(b)


def test_csv_full_precision(tmp_path):
    x = 0.1 + 1e-17
    write_csv(tmp_path / "x.csv", ["a", "b"], [[x, 3]])
    rows = read_csv(tmp_path / "x.csv")
    assert float(rows[0]["a"]) == x
    assert rows[0]["a"] == FMT.format(x)


# command line

class TestCommands:
    def test_check_golden_model(self, tmp_path):
        assert run(tmp_path, "check", "--model", bundled("one_level_lorentzian")) == 0
        report = json.loads((tmp_path / "check.json").read_text())
        assert report and all(item["passed"] for item in report)
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["model_hash"] == modelfile.model_hash(
            modelfile.load(bundled("one_level_lorentzian")))
        assert meta["version"]
        assert meta["options"]["seed"] == 12345

    def test_evolve_zero_coupling(self, tmp_path):
        assert run(tmp_path, "evolve", "--model", bundled("zero_coupling"),
                   "--tmax", "5", "--step", "0.1") == 0
        rows = read_csv(tmp_path / "trajectory_volterra.csv")
        assert len(rows) == 51
        assert all(float(r["survival_probability"]) == pytest.approx(1.0, abs=1e-14)
                   for r in rows)

    def test_poles_markov(self, tmp_path):
        model = modelfile.load(bundled("markov_two_level"))
        assert run(tmp_path, "poles", "--model", bundled("markov_two_level")) == 0
        assert len(read_csv(tmp_path / "poles.csv")) == model.n
        meta = json.loads((tmp_path / "metadata.json").read_text())
        cross = np.array(meta["report"]["cross_pole_orthogonality"])
        assert np.all(cross < 1e-10)

    def test_background_needs_half_line(self, tmp_path, capsys):
        assert run(tmp_path, "background", "--model", bundled("one_level_lorentzian")) == 2
        assert "error" in capsys.readouterr().err

    def test_background_and_oracle(self, tmp_path):
        args = ["--model", bundled("half_line_flat"), "--tmax", "10", "--step", "0.5",
                "--grid-m", "400"]
        assert run(tmp_path, "background", *args) == 0
        assert run(tmp_path, "oracle", *args, "--lambda-sweep", "3,4") == 0
        assert (tmp_path / "oracle_summary.csv").exists()

    def test_kernel_and_semigroup(self, tmp_path):
        args = ["--model", bundled("narrow_two_level"), "--tmax", "5", "--step", "0.05",
                "--grid-m", "400"]
        assert run(tmp_path, "kernel", *args) == 0
        assert (tmp_path / "alpha_z_second_sheet.csv").exists()
        assert run(tmp_path, "semigroup", *args, "--mode", "ww") == 0
        assert json.loads((tmp_path / "semigroup.json").read_text())["reports"]

    def test_state_flag(self, tmp_path):
        assert run(tmp_path, "evolve", "--model", bundled("narrow_two_level"), "--tmax", "1",
                   "--step", "0.1", "--state", "0.6,0.8i") == 0
        assert run(tmp_path, "evolve", "--model", bundled("narrow_two_level"),
                   "--state", "1,0,0") == 2

    def test_missing_model_file(self, tmp_path):
        assert run(tmp_path, "poles", "--model", str(tmp_path / "nope.toml")) == 2

    def test_unknown_subcommand(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            run(tmp_path, "explode")
        assert info.value.code != 0

    def test_bad_tolerance(self, tmp_path):
        assert run(tmp_path, "poles", "--model", bundled("one_level_lorentzian"),
                   "--tol-root", "0") == 2

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
        assert cli.main(["poles", "--model", bundled("one_level_lorentzian")]) == 0
        assert (tmp_path / "env" / "metadata.json").exists()

    @pytest.mark.parametrize("sub", ["kernel", "evolve", "poles"])
    def test_deterministic(self, tmp_path, sub):
        args = [sub, "--model", bundled("narrow_two_level"), "--tmax", "3", "--step", "0.05"]
        run(tmp_path / "a", *args)
        run(tmp_path / "b", *args)
        files = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert files
        for name in files:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
