import json
import os

import pytest

from asraug.cli import main
from asraug.manifest import read_manifest


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGenToy:
    def test_writes_lines(self, tmp_path, capsys):
        out = tmp_path / "lines.txt"
        code, stdout, _ = run(capsys, "gen-toy", "--out", str(out),
                              "--vocab-size", "8", "--sentences", "40",
                              "--min-words", "2", "--max-words", "4",
                              "--seed", "3")
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 40
        assert "40 sentences" in stdout

    def test_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run(capsys, "gen-toy", "--out", str(a), "--seed", "5",
            "--sentences", "10")
        run(capsys, "gen-toy", "--out", str(b), "--seed", "5",
            "--sentences", "10")
        assert a.read_bytes() == b.read_bytes()


class TestSynthCommand:
    def test_desk_corpus(self, tmp_path, capsys):
        pool = tmp_path / "pool.txt"
        run(capsys, "gen-toy", "--out", str(pool), "--vocab-size", "8",
            "--sentences", "60", "--min-words", "2", "--max-words", "2")
        cfg = tmp_path / "synth.cfg"
        cfg.write_text("[synth]\npreset = desk\nvoices_per_gender = 1\n"
                       "utterances_per_voice = 3\nwords_per_utterance = 2\n"
                       "sentences = %s\nout_dir = %s\n"
                       % (pool, tmp_path / "corpus"))
        code, stdout, _ = run(capsys, "synth", "--config", str(cfg))
        assert code == 0
        manifest = read_manifest(tmp_path / "corpus" / "manifest.jsonl")
        assert len(manifest) == 2 * 1 * 3
        assert (tmp_path / "corpus" / "resolved.cfg").exists()

    def test_unknown_key_is_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[synth]\nbogus = 1\n")
        code, _, stderr = run(capsys, "synth", "--config", str(cfg))
        assert code == 1
        assert "kind=config" in stderr


class TestPrepare:
    def test_filter(self, tmp_path, capsys):
        infile = tmp_path / "in.txt"
        infile.write_text("mela sew\nthree words here y\nok 3\n")
        out = tmp_path / "out.txt"
        code, stdout, _ = run(capsys, "prepare", "filter", "--in", str(infile),
                              "--out", str(out), "--charset", "melaswok ",
                              "--max-words", "30")
        assert code == 0
        assert out.read_text().splitlines() == ["mela sew"]
        assert "accepted 1" in stdout

    def test_split_and_mix(self, toy_setup, tmp_path, capsys):
        src = toy_setup["books"]
        code, stdout, _ = run(capsys, "prepare", "split", "--manifest", src,
                              "--n-test", "2",
                              "--train-out", str(tmp_path / "tr.jsonl"),
                              "--test-out", str(tmp_path / "te.jsonl"))
        assert code == 0
        # splits reference audio relative to their new location; remix the
        # original instead to check tagging
        code, stdout, _ = run(capsys, "prepare", "mix",
                              "--part", "b:%s" % src,
                              "--out", str(tmp_path / "mix.jsonl"))
        assert code == 0
        mixed = read_manifest(tmp_path / "mix.jsonl")
        assert all(u.extras["source_tag"] == "b" for u in mixed)

    def test_usage_error_exit_1(self, capsys):
        code, _, stderr = run(capsys, "prepare", "mix", "--part", "nocolon",
                              "--out", "x.jsonl")
        assert code == 1
        assert "kind=config" in stderr


class TestTrainEvalTranscribe:
    @staticmethod
    @pytest.fixture(scope="class")
    def trained(toy_setup, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("cli_train")
        cfg = tmp / "train.cfg"
        cfg.write_text(
            "[experiment]\nseed = 5\ndither = 0\n"
            "[model]\npreset = tiny\ndropout = 0\n"
            "[train]\nmanifest = %s\nbatch_size = 8\nepochs = 16\n"
            "learning_rate = 0.02\nspecaugment = off\nout = %s\n"
            % (toy_setup["train"], tmp / "model.ckpt"))
        code = main(["train", "--config", str(cfg)])
        assert code == 0
        return {"ckpt": str(tmp / "model.ckpt"), "tmp": tmp}

    def test_train_wrote_checkpoint_and_config(self, trained):
        assert os.path.exists(trained["ckpt"])
        assert os.path.exists(trained["ckpt"] + ".resolved.cfg")

    def test_transcribe_and_eval(self, trained, toy_setup, capsys):
        out = trained["tmp"] / "hyps.jsonl"
        code, stdout, _ = run(capsys, "transcribe",
                              "--checkpoint", trained["ckpt"],
                              "--manifest", toy_setup["test"],
                              "--out", str(out), "--threads", "2")
        assert code == 0
        code, stdout, _ = run(capsys, "eval", "--refs", toy_setup["test"],
                              "--hyps", str(out))
        assert code == 0
        assert "%" in stdout

    def test_train_determinism(self, toy_setup, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            cfg = tmp_path / ("%s.cfg" % name)
            ckpt = tmp_path / ("%s.ckpt" % name)
            cfg.write_text(
                "[experiment]\nseed = 9\ndither = 0\n"
                "[model]\npreset = tiny\ndropout = 0\n"
                "[train]\nmanifest = %s\nbatch_size = 8\nepochs = 2\n"
                "specaugment = small\nout = %s\n"
                % (toy_setup["train"], ckpt))
            code, _, _ = run(capsys, "train", "--config", str(cfg),
                             "--seed", "7")
            assert code == 0
            outs.append(ckpt.read_bytes())
        assert outs[0] == outs[1]


class TestCycleCommand:
    def test_cycle_dirs(self, toy_setup, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "[experiment]\nname = demo\nworkdir = %s\nn_cycles = 2\n"
            "seed = 5\ndither = 0\n"
            "[model]\npreset = tiny\ndropout = 0\n"
            "[pretrain]\nsources = noisy:%s\nbatch_size = 8\nepochs = 2\n"
            "[finetune]\nmanifest = %s\nbatch_size = 8\nepochs = 16\n"
            "[test]\nmanifest = %s\n"
            % (tmp_path / "exp", toy_setup["books"], toy_setup["train"],
               toy_setup["test"]))
        code, stdout, _ = run(capsys, "cycle", "--config", str(cfg))
        assert code == 0
        for i in (1, 2):
            assert (tmp_path / "exp" / "demo" / ("cycle%d" % i)
                    / "finetune.ckpt").exists()
        assert "WER" in stdout

    def test_report_rerenders(self, toy_setup, tmp_path, capsys):
        records = tmp_path / "r.records"
        records.write_text(json.dumps({"data": "books", "cycle": 1,
                                       "loss": 55.82, "wer": 61.64}) + "\n")
        code, stdout, _ = run(capsys, "report", "--records", str(records))
        assert code == 0
        assert "55.82" in stdout and "61.64%" in stdout


class TestErrors:
    def test_bad_subcommand(self, capsys):
        code, _, stderr = run(capsys, "frobnicate")
        assert code == 1

    def test_missing_manifest_is_data_error(self, capsys, tmp_path):
        code, _, stderr = run(capsys, "eval", "--refs",
                              str(tmp_path / "no.jsonl"),
                              "--hyps", str(tmp_path / "no.jsonl"))
        assert code == 2
        assert "kind=data" in stderr

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_every_subcommand_has_help(self, capsys):
        for cmd in ("gen-toy", "synth", "prepare", "train", "transcribe",
                    "eval", "cycle", "mixture", "lm-demo", "report"):
            with pytest.raises(SystemExit) as exc:
                main([cmd, "--help"])
            assert exc.value.code == 0
            assert capsys.readouterr().out
