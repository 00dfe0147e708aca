import json
import subprocess
import sys

import pytest

from lyricsync.cli import RunConfig, main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fixture_dir(tmp_path, capsys):
    d = tmp_path / "song"
    code, _, _ = run(["synth", "--dir", d, "--seed", 3, "--lines", 2], capsys)
    assert code == 0
    return d


def align_args(d, *extra):
    return ["align", "--lyrics", d / "lyrics.txt", "--phoneme", d / "joint.pgrm",
            "--boundary", d / "boundary.pgrm", "--dict", d / "dict.txt", *extra]


class TestAlign:
    def test_noiseless_matches_truth(self, fixture_dir, capsys, tmp_path):
        est = tmp_path / "est.json"
        code, _, _ = run(align_args(fixture_dir, "--out", est, "--lrc", tmp_path / "out.lrc"), capsys)
        assert code == 0
        truth = json.loads((fixture_dir / "truth_alignment.json").read_text())
        got = json.loads(est.read_text())
        assert [w["onset"] for w in got["words"]] == pytest.approx([w["onset"] for w in truth["words"]], abs=1e-9)
        assert (tmp_path / "out.lrc").read_text().count("\n") == len(truth["lines"])

    def test_phoneme_input_equals_joint(self, fixture_dir, capsys):
        _, joint, _ = run(align_args(fixture_dir), capsys)
        args = align_args(fixture_dir)
        args[4] = fixture_dir / "phoneme.pgrm"
        _, phone, _ = run(args, capsys)
        assert json.loads(joint)["words"] == json.loads(phone)["words"]

    def test_missing_boundary_is_config_error(self, fixture_dir, capsys):
        args = align_args(fixture_dir)
        del args[5:7]
        code, out, err = run(args, capsys)
        assert code == 2 and out == ""
        assert json.loads(err)["error"] == "ConfigError"
        assert run(args + ["--alpha", 0], capsys)[0] == 0

    def test_bad_magic(self, fixture_dir, capsys, tmp_path):
        bad = tmp_path / "bad.pgrm"
        bad.write_bytes(b"NOPE" + bytes(40))
        args = align_args(fixture_dir, "--alpha", 0)
        args[4] = bad
        code, _, err = run(args, capsys)
        assert code == 3 and json.loads(err)["error"] == "BadMagic"

    def test_infeasible_exit_code(self, fixture_dir, capsys):
        code, _, _ = run(["synth", "--dir", fixture_dir / "short", "--frames", 3], capsys)
        assert code == 4

    def test_reruns_are_byte_identical(self, fixture_dir, tmp_path):
        outs = []
        for i in range(2):
            target = tmp_path / f"r{i}.json"
            cmd = [sys.executable, "-m", "lyricsync.cli", *map(str, align_args(fixture_dir, "--out", target))]
            subprocess.run(cmd, check=True)
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]


def write_alignment(path, onsets):
    path.write_text(json.dumps({"words": [{"onset": t} for t in onsets], "lines": [{"onset": onsets[0]}]}))


class TestEval:
    def test_worked_example(self, tmp_path, capsys):
        write_alignment(tmp_path / "e.json", [0.0, 1.0, 2.0])
        write_alignment(tmp_path / "r.json", [0.1, 1.5, 2.2])
        code, out, _ = run(["eval-lyrics", "--est", tmp_path / "e.json", "--ref", tmp_path / "r.json"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["corpus"]["aae"] == pytest.approx(0.8 / 3)
        assert rep["corpus"]["pco"] == pytest.approx(2 / 3)

    def test_directory_batch_corpus_mean(self, tmp_path, capsys):
        (tmp_path / "est").mkdir()
        (tmp_path / "ref").mkdir()
        write_alignment(tmp_path / "est" / "a.json", [0.2])
        write_alignment(tmp_path / "ref" / "a.json", [0.0])
        write_alignment(tmp_path / "est" / "b.json", [0.4] * 9)
        write_alignment(tmp_path / "ref" / "b.json", [0.0] * 9)
        csv_path = tmp_path / "rows.csv"
        _, out, _ = run(["eval-lyrics", "--est", tmp_path / "est", "--ref", tmp_path / "ref", "--csv", csv_path], capsys)
        rep = json.loads(out)
        assert [r["song"] for r in rep["songs"]] == ["a", "b"]
        assert rep["corpus"]["aae"] == pytest.approx(0.3)
        assert csv_path.read_text().splitlines()[0] == "song,aae,pco"

    def test_jobs_do_not_change_output(self, tmp_path, capsys):
        for side in ("est", "ref"):
            (tmp_path / side).mkdir()
        for k in range(5):
            write_alignment(tmp_path / "est" / f"s{k}.json", [0.1 * k, 1.0 + 0.2 * k])
            write_alignment(tmp_path / "ref" / f"s{k}.json", [0.0, 1.0])
        outs = []
        for cmd in ("eval-lyrics", "eval-boundary"):
            for jobs in (1, 3):
                outs.append(run([cmd, "--est", tmp_path / "est", "--ref", tmp_path / "ref", "--jobs", jobs], capsys)[1])
        assert outs[0] == outs[1] and outs[2] == outs[3]

    def test_self_evaluation_is_perfect(self, fixture_dir, capsys):
        d = fixture_dir
        _, out, _ = run(["eval-notes", "--est", d / "truth_notes.json", "--ref", d / "truth_notes.json"], capsys)
        assert json.loads(out)["corpus"] == {"con": 1.0, "conp": 1.0, "conpoff": 1.0}
        _, out, _ = run(["eval-boundary", "--est", d / "truth_boundaries.json", "--ref", d / "truth_boundaries.json",
                         "--est-curve", d / "boundary.pgrm", "--ref-curve", d / "boundary.pgrm"], capsys)
        rep = json.loads(out)
        assert rep["corpus"]["f_score"] == 1.0 and rep["auc"] == 1.0

    def test_schema_error(self, tmp_path, capsys):
        (tmp_path / "x.json").write_text('{"nope": 1}')
        code, _, err = run(["eval-lyrics", "--est", tmp_path / "x.json", "--ref", tmp_path / "x.json"], capsys)
        assert code == 3 and json.loads(err)["error"] == "SchemaError"

    def test_mixed_file_and_dir(self, tmp_path, capsys):
        (tmp_path / "x.json").write_text("{}")
        code, _, _ = run(["eval-notes", "--est", tmp_path, "--ref", tmp_path / "x.json"], capsys)
        assert code == 2


class TestConfig:
    def test_defaults_in_report(self, tmp_path, capsys):
        write_alignment(tmp_path / "a.json", [0.0])
        _, out, _ = run(["eval-lyrics", "--est", tmp_path / "a.json", "--ref", tmp_path / "a.json"], capsys)
        cfg = json.loads(out)["config"]
        assert cfg == RunConfig().to_dict()
        assert (cfg["lambda"], cfg["alpha"], cfg["pco_tol"], cfg["bdr_window"]) == (0.5, 0.8, 0.3, 0.5)
        assert cfg["offset_rule"] == "max(0.05, 0.2*duration)"

    def test_precedence(self, tmp_path, capsys):
        write_alignment(tmp_path / "a.json", [0.0])
        ini = tmp_path / "run.ini"
        ini.write_text("[lyricsync]\nlambda = 0.2\npco_tol = 0.25\n")
        base = ["eval-lyrics", "--est", tmp_path / "a.json", "--ref", tmp_path / "a.json", "--config", ini]
        cfg = json.loads(run(base, capsys)[1])["config"]
        assert (cfg["lambda"], cfg["pco_tol"], cfg["alpha"]) == (0.2, 0.25, 0.8)
        cfg = json.loads(run(base + ["--pco-tol", 0.1], capsys)[1])["config"]
        assert (cfg["lambda"], cfg["pco_tol"]) == (0.2, 0.1)

    @pytest.mark.parametrize("body", ["[lyricsync]\nbogus = 1\n", "[other]\nx = 1\n", "[lyricsync]\nalpha = abc\n"])
    def test_bad_config_file(self, tmp_path, capsys, body):
        write_alignment(tmp_path / "a.json", [0.0])
        ini = tmp_path / "run.ini"
        ini.write_text(body)
        code, _, _ = run(["eval-lyrics", "--est", tmp_path / "a.json", "--ref", tmp_path / "a.json", "--config", ini], capsys)
        assert code == 2

    def test_invalid_value(self, tmp_path, capsys):
        write_alignment(tmp_path / "a.json", [0.0])
        code, _, _ = run(["eval-lyrics", "--est", tmp_path / "a.json", "--ref", tmp_path / "a.json", "--pco-tol", -1], capsys)
        assert code == 2


class TestWrappers:
    def test_loss(self, fixture_dir, capsys):
        d = fixture_dir
        code, out, _ = run(["loss", "--gram", d / "joint.pgrm", "--plan", d / "plan.json",
                            "--pitch-targets", d / "pitch_targets.json", "--lambda", 1.0], capsys)
        loss = json.loads(out)["loss"]
        assert code == 0
        assert loss["total"] == pytest.approx(loss["phone_loss"] + loss["pitch_loss"])
        _, out2, _ = run(["loss", "--gram", d / "joint.pgrm", "--lyrics", d / "lyrics.txt", "--dict", d / "dict.txt"], capsys)
        assert json.loads(out2)["loss"]["phone_loss"] == pytest.approx(loss["phone_loss"])

    def test_loss_needs_plan(self, fixture_dir, capsys):
        assert run(["loss", "--gram", fixture_dir / "joint.pgrm"], capsys)[0] == 2

    def test_window(self, fixture_dir, capsys):
        code, out, _ = run(["window", "--words", fixture_dir / "truth_alignment.json"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["windows"][0]["start"] == 0.0
        assert rep["windows"][0]["end"] == pytest.approx(5.6)
