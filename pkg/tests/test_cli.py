import os

import numpy as np
import pytest

from aeplab.cli import main
from aeplab.codebook import deserialize
from aeplab.channel import Alphabet
from aeplab.report import parse_csv

BSC01 = (
    "input: 0 1\n"
    "output: 0 1\n"
    "row 0: 0.9 0.1\n"
    "row 1: 0.1 0.9\n"
    "p0: 0.5 0.5\n"
    "epsilon: 0.1\n"
    "R: 0.8\n"
)


@pytest.fixture()
def channel_file(tmp_path):
    path = tmp_path / "bsc01.ch"
    path.write_text(BSC01)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestInfo:
    def test_prints_quantities(self, capsys, channel_file):
        code, out, _ = run(capsys, "info", "--channel", channel_file)
        assert code == 0
        assert "H0(Y)=1" in out
        assert "I0(X;Y)=0.531004406411" in out
        assert "C=0.531004406411" in out

    def test_missing_file(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["info", "--channel", "/does/not/exist"])
        assert exc.value.code == 2


class TestArgErrors:
    def test_unknown_flag_exits_2(self, channel_file):
        with pytest.raises(SystemExit) as exc:
            main(["info", "--channel", channel_file, "--bogus"])
        assert exc.value.code == 2

    def test_missing_seed_exits_2(self, channel_file):
        with pytest.raises(SystemExit) as exc:
            main(["aep", "theorem3", "--channel", channel_file, "--n", "4"])
        assert exc.value.code == 2


class TestExitCodes:
    def test_config_error_exit_2(self, capsys, channel_file):
        code, _, err = run(
            capsys, "aep", "theorem3", "--channel", channel_file,
            "--R", "0.531004", "--n", "4", "--seed", "1",
        )
        assert code == 2 and "I0" in err

    def test_cap_exceeded_exit_3(self, capsys, channel_file, tmp_path):
        code, _, err = run(
            capsys, "codebook", "gen", "--channel", channel_file,
            "--n", "64", "--R", "0.5", "--seed", "1",
            "--out", str(tmp_path / "cb.aepc"),
        )
        assert code == 3 and "cap" in err


class TestCodebookCommands:
    def test_gen_and_check(self, capsys, channel_file, tmp_path):
        out_path = tmp_path / "cb.aepc"
        code, _, _ = run(
            capsys, "codebook", "gen", "--channel", channel_file,
            "--n", "8", "--R", "0.5", "--epsilon", "0.3", "--seed", "11",
            "--out", str(out_path),
        )
        assert code == 0
        cb = deserialize(out_path.read_bytes(), Alphabet.of("01"))
        assert cb.num_words == 16 and cb.n == 8

        code, out, _ = run(
            capsys, "codebook", "check", "--channel", channel_file,
            "--codebook", str(out_path),
        )
        assert code == 0
        cols, rows, _ = parse_csv(out)
        values = dict(zip(cols, rows[0]))
        assert values["num_words"] == "16"
        assert values["all_words_typical"] == "1"

    def test_gen_requires_out(self, capsys, channel_file):
        code, _, err = run(
            capsys, "codebook", "gen", "--channel", channel_file,
            "--n", "8", "--R", "0.5", "--seed", "11",
        )
        assert code == 2 and "--out" in err


class TestDeterminism:
    def test_byte_identical_reruns(self, capsys, channel_file):
        args = [
            "aep", "theorem3", "--channel", channel_file,
            "--R", "0.3", "--n", "4,6", "--codebooks", "2", "--seed", "7",
        ]
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2 and out1

    def test_workers_do_not_change_output(self, capsys, channel_file):
        base = [
            "aep", "theorem1", "--channel", channel_file,
            "--R", "0.3,0.8", "--n", "6", "--codebooks", "2", "--seed", "7",
        ]
        _, out1, _ = run(capsys, *base, "--workers", "1")
        _, out8, _ = run(capsys, *base, "--workers", "8")
        assert out1 == out8

    def test_out_file_matches_stdout(self, capsys, channel_file, tmp_path):
        args = [
            "aep", "lemma4", "--channel", channel_file, "--n", "8,12", "--seed", "3",
        ]
        _, out, _ = run(capsys, *args)
        path = tmp_path / "r.csv"
        code = main(args + ["--out", str(path)])
        assert code == 0
        assert path.read_text() == out


class TestCsvRoundTrip:
    def test_values_survive_reparse_at_12_digits(self, capsys, channel_file):
        code, out, _ = run(
            capsys, "aep", "theorem3", "--channel", channel_file,
            "--R", "0.3", "--n", "6", "--codebooks", "2", "--seed", "7",
        )
        assert code == 0
        cols, rows, meta = parse_csv(out)
        assert meta["seed"] == "7"
        for row in rows:
            for col, val in zip(cols, row):
                if col in ("H_rate_exact", "ref_H0Y", "ref_RplusH0YgX"):
                    again = f"{float(val):.12g}"
                    assert again == val


class TestSweepCommand:
    def test_sweep_runs(self, capsys, channel_file):
        code, out, _ = run(
            capsys, "sweep", "--channel", channel_file,
            "--R", "0.3,0.8", "--n", "6", "--codebooks", "2", "--seed", "5",
        )
        assert code == 0
        cols, rows, _ = parse_csv(out)
        assert cols[0] == "R" and len(rows) == 2
