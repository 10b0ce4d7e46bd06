import json
from pathlib import Path

import pytest

from namelink.cli import main

FIXTURE_XML = str(Path(__file__).parent / "data" / "dblp_fixture.xml")


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Shared workspace: a small synthetic corpus plus a briefly trained
    checkpoint, built through the CLI itself."""
    root = tmp_path_factory.mktemp("cli")
    paths = {
        "root": root,
        "corpus": str(root / "synth.ndjson"),
        "truth": str(root / "synth.ndjson.truth.tsv"),
        "ckpt": str(root / "ckpt.npz"),
        "manifest": str(root / "runs.ndjson"),
    }
    rc = main(
        [
            "gen-synth",
            "--out", paths["corpus"],
            "--authors", "3",
            "--clique", "3",
            "--records-per-author", "6",
            "--vocab", "6",
            "--manifest", paths["manifest"],
        ]
    )
    assert rc == 0
    rc = main(
        [
            "train",
            "--corpus", paths["corpus"],
            "--block", "Y Chen",
            "--out", paths["ckpt"],
            "--max-epochs", "2",
            "--patience", "5",
            "--batch-size", "32",
            "--manifest", paths["manifest"],
        ]
    )
    assert rc == 0
    return paths


class TestGenSynth:
    def test_outputs_exist(self, ws, capsys):
        assert Path(ws["corpus"]).exists()
        assert Path(ws["truth"]).exists()
        assert len(Path(ws["truth"]).read_text("utf-8").splitlines()) == 18

    def test_byte_identical_rerun(self, ws, tmp_path, capsys):
        out = tmp_path / "again.ndjson"
        rc = main(
            [
                "gen-synth",
                "--out", str(out),
                "--authors", "3",
                "--clique", "3",
                "--records-per-author", "6",
                "--vocab", "6",
                "--manifest", str(tmp_path / "m.ndjson"),
            ]
        )
        assert rc == 0
        assert out.read_bytes() == Path(ws["corpus"]).read_bytes()
        assert (tmp_path / "again.ndjson.truth.tsv").read_bytes() == Path(ws["truth"]).read_bytes()

    def test_summary_lines(self, ws, tmp_path, capsys):
        rc = main(
            [
                "gen-synth",
                "--out", str(tmp_path / "c.ndjson"),
                "--authors", "2",
                "--records-per-author", "3",
                "--manifest", str(tmp_path / "m.ndjson"),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "records\t6" in out
        assert "authors\t2" in out


class TestStats:
    def test_corpus_table(self, ws, capsys):
        rc = main(["stats", "--corpus", ws["corpus"], "--manifest", ws["manifest"]])
        out = capsys.readouterr().out
        assert rc == 0
        assert "# of records\t18" in out
        assert "# of unique authors\t12" in out

    def test_block_table(self, ws, capsys):
        rc = main(
            ["stats", "--corpus", ws["corpus"], "--block", "Y Chen", "--manifest", ws["manifest"]]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "# ANV\tY Chen" in out
        assert "# UTA\t3" in out
        assert "# RCD\t18" in out

    def test_out_file_mirrors_stdout(self, ws, tmp_path, capsys):
        table = tmp_path / "stats.tsv"
        rc = main(
            [
                "stats",
                "--corpus", ws["corpus"],
                "--out", str(table),
                "--manifest", ws["manifest"],
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert table.read_text("utf-8") == out

    def test_missing_corpus_is_operational_error(self, tmp_path, capsys):
        rc = main(
            ["stats", "--corpus", str(tmp_path / "absent.ndjson"), "--manifest", str(tmp_path / "m")]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestIngest:
    def test_fixture_round_trip(self, tmp_path, capsys):
        out = tmp_path / "corpus.ndjson"
        rc = main(
            ["ingest", "--xml", FIXTURE_XML, "--out", str(out), "--manifest", str(tmp_path / "m")]
        )
        stdout = capsys.readouterr().out
        assert rc == 0
        assert "records\t50" in stdout
        rc = main(["stats", "--corpus", str(out), "--manifest", str(tmp_path / "m")])
        assert rc == 0
        assert "# of records\t50" in capsys.readouterr().out

    def test_kinds_widening(self, tmp_path, capsys):
        out = tmp_path / "corpus.ndjson"
        rc = main(
            [
                "ingest",
                "--xml", FIXTURE_XML,
                "--out", str(out),
                "--kinds", "article,inproceedings,phdthesis",
                "--manifest", str(tmp_path / "m"),
            ]
        )
        stdout = capsys.readouterr().out
        assert rc == 0
        assert "records\t51" in stdout

    def test_missing_xml(self, tmp_path, capsys):
        rc = main(
            [
                "ingest",
                "--xml", str(tmp_path / "absent.xml"),
                "--out", str(tmp_path / "c.ndjson"),
                "--manifest", str(tmp_path / "m"),
            ]
        )
        assert rc == 1


class TestSplit:
    def test_assignment_lines_and_counts(self, ws, capsys):
        rc = main(
            ["split", "--corpus", ws["corpus"], "--block", "Y Chen", "--manifest", ws["manifest"]]
        )
        captured = capsys.readouterr()
        assert rc == 0
        lines = captured.out.strip().splitlines()
        assert len(lines) == 18
        author, key, part = lines[0].split("\t")
        assert author == "Ya Chen"
        assert key.startswith("synth/a/")
        assert part in ("TRAIN", "VAL", "TEST")
        # 6 records per author cut 4/1/1
        assert "TRAIN/VAL/TEST records\t12/3/3" in captured.err

    def test_deterministic_under_seed(self, ws, capsys):
        argv = ["split", "--corpus", ws["corpus"], "--block", "Y Chen", "--manifest", ws["manifest"]]
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first

    def test_out_file(self, ws, tmp_path, capsys):
        table = tmp_path / "split.tsv"
        rc = main(
            [
                "split",
                "--corpus", ws["corpus"],
                "--block", "Y Chen",
                "--out", str(table),
                "--manifest", ws["manifest"],
            ]
        )
        capsys.readouterr()
        assert rc == 0
        assert len(table.read_text("utf-8").splitlines()) == 18


class TestTrain:
    def test_checkpoint_and_history_written(self, ws):
        assert Path(ws["ckpt"]).exists()
        history = Path(ws["ckpt"] + ".history.ndjson")
        assert history.exists()
        entries = [json.loads(line) for line in history.read_text("utf-8").splitlines()]
        assert len(entries) == 2
        assert {"epoch", "train_loss", "val_loss", "val_accuracy"} <= set(entries[0])

    def test_summary_line(self, ws, tmp_path, capsys):
        rc = main(
            [
                "train",
                "--corpus", ws["corpus"],
                "--block", "Y Chen",
                "--out", str(tmp_path / "t.npz"),
                "--max-epochs", "1",
                "--manifest", str(tmp_path / "m"),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "Y Chen\tclasses 3\tepochs 1\t" in out

    def test_multi_block_directory_output(self, ws, tmp_path, capsys):
        out_dir = tmp_path / "models"
        rc = main(
            [
                "train",
                "--corpus", ws["corpus"],
                "--block", "Y Chen",
                "--block", "Acoa Leea",
                "--out", str(out_dir),
                "--max-epochs", "1",
                "--manifest", str(tmp_path / "m"),
            ]
        )
        capsys.readouterr()
        assert rc == 0
        names = sorted(p.name for p in out_dir.glob("*.npz"))
        assert len(names) == 2


class TestEvaluate:
    def test_all_mode_report(self, ws, capsys):
        rc = main(
            [
                "evaluate",
                "--corpus", ws["corpus"],
                "--block", "Y Chen",
                "--checkpoint", ws["ckpt"],
                "--manifest", ws["manifest"],
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "MiAF1 (All)\t" in out
        assert "instances\t6" in out  # 3 TEST records, scored twice in ALL

    def test_anv_mode_half_instances(self, ws, capsys):
        rc = main(
            [
                "evaluate",
                "--corpus", ws["corpus"],
                "--block", "Y Chen",
                "--checkpoint", ws["ckpt"],
                "--mode", "ANV",
                "--manifest", ws["manifest"],
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "MiAF1 (ANV)\t" in out
        assert "instances\t3" in out

    def test_missing_checkpoint_file(self, ws, tmp_path, capsys):
        rc = main(
            [
                "evaluate",
                "--corpus", ws["corpus"],
                "--block", "Y Chen",
                "--checkpoint", str(tmp_path / "absent.npz"),
                "--manifest", str(tmp_path / "m"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestPredict:
    def test_new_name(self, ws, capsys):
        rc = main(
            ["predict", "--corpus", ws["corpus"], "--name", "Unseen Person", "--manifest", ws["manifest"]]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("NEW\tUnseen Person")

    def test_unique_name_needs_no_model(self, ws, capsys):
        rc = main(
            ["predict", "--corpus", ws["corpus"], "--name", "Acoa Leea", "--manifest", ws["manifest"]]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("UNIQUE\tAcoa Leea\tAcoa Leea")

    def test_ambiguous_without_checkpoint(self, ws, capsys):
        rc = main(
            ["predict", "--corpus", ws["corpus"], "--name", "Y Chen", "--manifest", ws["manifest"]]
        )
        captured = capsys.readouterr()
        assert rc == 1
        assert "AMBIGUOUS\tY Chen\t3 candidates" in captured.out
        assert "checkpoint" in captured.err

    def test_ambiguous_full_flow(self, ws, capsys):
        rc = main(
            [
                "predict",
                "--corpus", ws["corpus"],
                "--name", "Y Chen",
                "--record-key", "synth/a/0000",
                "--checkpoint", ws["ckpt"],
                "--manifest", ws["manifest"],
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "pairs\t6" in out  # 3 authors + target -> C(4, 2)
        assert "chosen\t" in out

    def test_unknown_record_key(self, ws, capsys):
        rc = main(
            [
                "predict",
                "--corpus", ws["corpus"],
                "--name", "Y Chen",
                "--record-key", "synth/zz/9999",
                "--checkpoint", ws["ckpt"],
                "--manifest", ws["manifest"],
            ]
        )
        assert rc == 1
        assert "not in corpus" in capsys.readouterr().err


class TestUsageErrors:
    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_missing_required_flag(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            main(["stats", "--manifest", str(tmp_path / "m")])
        assert err.value.code == 2
        assert "--corpus" in capsys.readouterr().err

    def test_bad_choice(self, ws, capsys):
        with pytest.raises(SystemExit) as err:
            main(
                [
                    "evaluate",
                    "--corpus", ws["corpus"],
                    "--block", "Y Chen",
                    "--checkpoint", ws["ckpt"],
                    "--mode", "FULL",
                ]
            )
        assert err.value.code == 2


class TestConfigFile:
    def test_config_supplies_required_flags(self, ws, tmp_path, capsys):
        cfg = tmp_path / "stats.cfg"
        cfg.write_text(f"# corpus statistics\ncorpus={ws['corpus']}\n", "utf-8")
        rc = main(["stats", "--config", str(cfg), "--manifest", str(tmp_path / "m")])
        out = capsys.readouterr().out
        assert rc == 0
        assert "# of records\t18" in out

    def test_flag_beats_config(self, tmp_path, capsys):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("authors=5\nrecords-per-author=2\n", "utf-8")
        rc = main(
            [
                "gen-synth",
                "--out", str(tmp_path / "c.ndjson"),
                "--authors", "3",
                "--config", str(cfg),
                "--manifest", str(tmp_path / "m"),
            ]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert "authors\t3" in out  # flag value
        assert "records\t6" in out  # config value: 3 authors x 2 records

    def test_unknown_key_rejected(self, ws, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no_such_flag=1\n", "utf-8")
        rc = main(["stats", "--corpus", ws["corpus"], "--config", str(cfg)])
        assert rc == 1
        assert "not a flag" in capsys.readouterr().err

    def test_malformed_line_rejected(self, ws, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("just a line without equals\n", "utf-8")
        rc = main(["stats", "--corpus", ws["corpus"], "--config", str(cfg)])
        assert rc == 1
        assert "key=value" in capsys.readouterr().err


class TestManifest:
    def test_every_run_appends_one_entry(self, ws, tmp_path, capsys):
        manifest = tmp_path / "m.ndjson"
        main(["stats", "--corpus", ws["corpus"], "--manifest", str(manifest)])
        main(["stats", "--corpus", ws["corpus"], "--block", "Y Chen", "--manifest", str(manifest)])
        capsys.readouterr()
        entries = [json.loads(line) for line in manifest.read_text("utf-8").splitlines()]
        assert len(entries) == 2
        assert [e["command"] for e in entries] == ["stats", "stats"]
        assert all(e["status"] == "ok" for e in entries)
        assert entries[0]["config"]["corpus"] == ws["corpus"]
        assert "manifest" not in entries[0]["config"]
        assert entries[1]["result"]["uta"] == 3

    def test_operational_errors_logged(self, tmp_path, capsys):
        manifest = tmp_path / "m.ndjson"
        rc = main(["stats", "--corpus", str(tmp_path / "absent"), "--manifest", str(manifest)])
        capsys.readouterr()
        assert rc == 1
        (entry,) = [json.loads(line) for line in manifest.read_text("utf-8").splitlines()]
        assert entry["status"] == "error"
        assert "error" in entry["result"]
