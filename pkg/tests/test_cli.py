import json

import pytest

from srlgraph import data
from srlgraph.checks import run_checks
from srlgraph.cli import EXIT_DATA, EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, main
from srlgraph.io import read_corpus, write_corpus
from srlgraph.model import Model

from conftest import fig1_structure

SMALL = ["--set", "word_dim=3", "--set", "lemma_dim=2", "--set", "char_dim=2", "--set", "char_emb_dim=2",
         "--set", "hidden=3", "--set", "layers=1", "--set", "edge_mlp=4", "--set", "label_mlp=3",
         "--set", "second_mlp=3"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    corpus = data.load(data.TRAIN)[:8]
    write_corpus(corpus, d / "train.txt")
    rc = main(["train", "--train", str(d / "train.txt"), "--dev", str(d / "train.txt"), "--out", str(d / "m.bin"),
               "--log", str(d / "log.jsonl"), "--epochs", "2", "--quiet"] + SMALL)
    assert rc == EXIT_OK
    return d


class TestEval:
    def test_perfect(self, tmp_path, capsys):
        write_corpus([fig1_structure()], tmp_path / "g.txt")
        assert main(["eval", "--gold", str(tmp_path / "g.txt"), "--pred", str(tmp_path / "g.txt")]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "P 100.00 R 100.00 F1 100.00"

    def test_missing_file(self, tmp_path, capsys):
        assert main(["eval", "--gold", str(tmp_path / "no.txt"), "--pred", str(tmp_path / "no.txt")]) == EXIT_DATA
        assert "no.txt" in capsys.readouterr().err


class TestUsage:
    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_no_command(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_bad_set(self, tmp_path):
        write_corpus([fig1_structure()], tmp_path / "t.txt")
        args = ["train", "--train", str(tmp_path / "t.txt"), "--out", str(tmp_path / "m.bin")]
        assert main(args + ["--set", "noequals"]) == EXIT_USAGE
        assert main(args + ["--set", "nonsense=1"]) == EXIT_USAGE


class TestCheck:
    def test_passes(self, capsys):
        assert main(["check", "--fuzz", "200"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out and out.count("ok") >= 5

    def test_exit_code_on_failure(self, monkeypatch):
        import srlgraph.checks as checks

        def broken(rng, cases):
            return checks.CheckResult("broken", cases, ["always"])

        monkeypatch.setattr(checks, "SUITE", checks.SUITE + [(broken, 1)])
        assert main(["check", "--fuzz", "20"]) == EXIT_PROPERTY

    def test_results(self):
        assert all(r.ok for r in run_checks(100, seed=3))


class TestPipeline:
    def test_train_outputs(self, trained):
        lines = (trained / "log.jsonl").read_text().splitlines()
        assert [json.loads(l)["epoch"] for l in lines] == [1, 2]
        assert "dev_f1" in json.loads(lines[0])
        assert Model.load(trained / "m.bin").order == "O2"

    def test_parse_both_formats(self, trained, tmp_path):
        src = trained / "train.txt"
        assert main(["parse", "--model", str(trained / "m.bin"), "--input", str(src), "--output",
                     str(tmp_path / "p.txt"), "--workers", "1"]) == EXIT_OK
        pred = read_corpus(tmp_path / "p.txt", strict=True)
        assert [p.sentence for p in pred] == [g.sentence for g in read_corpus(src)]
        assert main(["parse", "--model", str(trained / "m.bin"), "--input", str(src), "--output",
                     str(tmp_path / "p.jsonl"), "--format", "json", "--order", "O1", "--workers", "2"]) == EXIT_OK
        assert len((tmp_path / "p.jsonl").read_text().splitlines()) == len(pred)

    def test_worker_count_does_not_change_output(self, trained):
        m = Model.load(trained / "m.bin")
        sents = [s.sentence for s in data.load(data.DEV)]
        assert m.decode(sents, workers=1) == m.decode(sents, workers=3)

    def test_bench(self, trained, capsys):
        args = ["bench", "--model", str(trained / "m.bin"), "--synthetic", "20", "--repeat", "2", "--workers", "1"]
        assert main(args) == EXIT_OK
        out = capsys.readouterr().out
        assert "O1" in out and "O2" in out and "ratio O2/O1" in out

    def test_bench_outputs_are_reproducible(self, trained):
        from srlgraph.cli import bench

        m = Model.load(trained / "m.bin")
        sents = [s.sentence for s in data.load(data.DEV)]
        a = bench(m, sents, ["O2"], 1, 1000, 1)["O2"][1]
        b = bench(m, sents, ["O2"], 1, 1000, 1)["O2"][1]
        assert a == b

    def test_corrupt_model(self, tmp_path):
        (tmp_path / "m.bin").write_bytes(b"garbage")
        (tmp_path / "in.txt").write_text("a b\n")
        assert main(["parse", "--model", str(tmp_path / "m.bin"), "--input", str(tmp_path / "in.txt"),
                     "--output", str(tmp_path / "o.txt")]) == EXIT_DATA
