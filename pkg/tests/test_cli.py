"""End-to-end CLI behavior: exit codes, files, provenance, formats."""

import re

import pytest

from crlab.cli import main
from crlab.codec import Bitstream


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsageErrors:
    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate"],
        ["sweep", "--p", "1.5"],
        ["sweep", "--M", "1"],
        ["codec", "--p", "0.5"],  # paradigm missing
        ["codec", "--p", "0.5", "--paradigm", "residual", "--n", "0"],
        ["rd", "--M", "128"],
        ["verify", "--trials", "0"],
        ["verify", "--shape", "8by8"],
        ["sweep", "--seed", "-1"],
    ])
    def test_exit_64(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 64
        assert err != ""

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_out_path_is_a_file(self, capsys, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code, _, err = run(capsys, "sweep", "--p", "0.5", "--Q", "2",
                           "--M", "16", "--out", str(blocker))
        assert code == 64
        assert "cannot use --out" in err


class TestSweep:
    def test_plain_single_point(self, capsys):
        code, out, _ = run(capsys, "sweep", "--p", "1.0", "--Q", "1",
                           "--M", "256", "--plain")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("# crlab ")
        assert lines[1].split(",")[:3] == ["Q", "p", "H_R"]
        h_r = float(lines[2].split(",")[2])
        assert abs(h_r - 8.7213) < 1e-3

    def test_csv_written_with_provenance(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sweep", "--p", "0.2", "0.8", "--Q", "2",
                           "--M", "16", "--out", str(tmp_path), "--seed", "9")
        assert code == 0
        text = (tmp_path / "sweep.csv").read_text()
        first = text.splitlines()[0]
        assert first.startswith("# crlab ")
        assert "seed=9" in first
        assert "sweep" in first
        assert len(text.splitlines()) == 2 + 2  # provenance + header + rows

    def test_crossover_printed(self, capsys, tmp_path):
        # conditional loses below the crossover, wins above it
        code, out, _ = run(capsys, "sweep", "--Q", "2", "--M", "64",
                           "--p", *[f"{k / 20:.2f}" for k in range(1, 21)],
                           "--out", str(tmp_path))
        assert code == 0
        assert re.search(r"crossover: Q=2 .* changes sign between p=", out)

    def test_out_dir_from_environment(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("CRLAB_OUT", str(tmp_path / "envdir"))
        code, _, _ = run(capsys, "sweep", "--p", "0.5", "--Q", "1", "--M", "8")
        assert code == 0
        assert (tmp_path / "envdir" / "sweep.csv").exists()


class TestVerify:
    def test_small_run_passes(self, capsys, tmp_path):
        code, out, _ = run(capsys, "verify", "--trials", "12",
                           "--shape", "5x4", "--seed", "3",
                           "--out", str(tmp_path))
        assert code == 0
        assert "pass 12/12" in out
        header = (tmp_path / "verify.csv").read_text().splitlines()[1]
        assert header == "check_id,kind,worst,pass_count,trial_count"

    def test_vacuous_shape(self, capsys, tmp_path):
        code, _, _ = run(capsys, "verify", "--trials", "1", "--shape", "1x1",
                         "--out", str(tmp_path))
        assert code == 0


class TestRd:
    def test_writes_curves_and_matrix(self, capsys, tmp_path):
        code, out, _ = run(capsys, "rd", "--M", "8", "--p", "0.3", "--Q", "2",
                           "--slopes", "16", "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "rd_curves.csv").exists()
        bd_text = (tmp_path / "bd_matrix.csv").read_text()
        assert "fit=cubic-poly" in bd_text.splitlines()[0]
        # BD percentages printed with exactly 4 decimals
        printed = re.findall(r"= ([+-]\d+\.\d+)%", out)
        assert printed and all(len(v.split(".")[1]) == 4 for v in printed)

    def test_force_needed_beyond_64(self, capsys, tmp_path):
        code, _, err = run(capsys, "rd", "--M", "65", "--out", str(tmp_path))
        assert code == 64
        assert "--force" in err


class TestCodec:
    def test_roundtrip_writes_bitstream(self, capsys, tmp_path):
        code, out, _ = run(capsys, "codec", "--p", "0.5", "--Q", "2",
                           "--M", "16", "--n", "2000", "--paradigm", "condres",
                           "--seed", "4", "--out", str(tmp_path))
        assert code == 0
        assert "round trip exact over 2000 symbols" in out
        files = list(tmp_path.glob("*.crlb"))
        assert len(files) == 1
        stream = Bitstream.from_bytes(files[0].read_bytes())
        assert stream.n == 2000 and stream.M == 16

    def test_condres_alias_maps_to_full_name(self, capsys, tmp_path):
        code, out, _ = run(capsys, "codec", "--p", "0.25", "--M", "8",
                           "--n", "500", "--paradigm", "condres",
                           "--out", str(tmp_path))
        assert code == 0
        assert "conditional-residual" in out

    def test_near_free_stream(self, capsys, tmp_path):
        code, out, _ = run(capsys, "codec", "--p", "0", "--paradigm",
                           "condres", "--n", "10000", "--M", "64",
                           "--out", str(tmp_path))
        assert code == 0
        rate = float(re.search(r"measured rate\s+(\S+)", out).group(1))
        assert rate < 0.01

    def test_plain_skips_bitstream_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "codec", "--p", "0.5", "--M", "8",
                         "--n", "200", "--paradigm", "residual", "--plain",
                         "--out", str(tmp_path))
        assert code == 0
        assert list(tmp_path.glob("*.crlb")) == []

    def test_reports_entropy_bound(self, capsys, tmp_path):
        from crlab.pixel_model import PixelModelParams, entropy_report

        code, out, _ = run(capsys, "codec", "--p", "0.5", "--Q", "2",
                           "--M", "16", "--n", "4000",
                           "--paradigm", "conditional", "--out", str(tmp_path))
        assert code == 0
        bound = float(re.search(r"entropy bound\s+(\S+)", out).group(1))
        want = entropy_report(PixelModelParams(p=0.5, Q=2, M=16)).H_X_given_Xphat
        assert abs(bound - want) < 1e-9
