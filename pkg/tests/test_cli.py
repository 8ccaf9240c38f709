import json

import pytest

from rank_intent import DiscordantPairError, ExperimentConfig, Explanation, explain_pair
from rank_intent._cli import EXIT_CONFIG, EXIT_DATA, EXIT_DISCORDANT, main
from rank_intent._harness import load_workspace


@pytest.fixture
def synth_dir(tmp_path):
    argv = ["-q", "synth", "--out", str(tmp_path), "--topics", "3", "--docs-per-topic", "10"]
    assert main(argv) == 0
    return tmp_path


@pytest.fixture
def config_path(synth_dir):
    path = synth_dir / "config.json"
    values = json.loads(path.read_text())
    values.update(features=30, pool_size=100, caps=[200, 100, 60])
    path.write_text(json.dumps(values))
    return str(path)


def test_synth_writes_a_loadable_config(synth_dir):
    config = ExperimentConfig.from_file(synth_dir / "config.json")
    assert config.blackbox == "planted"
    assert len(load_workspace(config).queries) == 3


def test_index(synth_dir, capsys):
    out = synth_dir / "index.json"
    assert main(["index", "--corpus", str(synth_dir / "corpus.jsonl"), "--out", str(out)]) == 0
    assert out.exists()
    assert "docs=130" in capsys.readouterr().out


def test_explain_and_pair(config_path, capsys):
    assert main(["-q", "explain", "--config", config_path, "--query", "q01"]) == 0
    line = capsys.readouterr().out.strip()
    qid, terms, path = line.split("\t")
    assert qid == "q01"
    assert terms

    explanation = Explanation.load(path)
    config = ExperimentConfig.from_file(config_path)
    ranker = load_workspace(config).ranker
    a, b = explanation.pool[0], explanation.pool[1]
    try:
        explain_pair(explanation, a, b, ranker)
        expected = 0
    except DiscordantPairError:
        expected = EXIT_DISCORDANT
    code = main(["-q", "pair", "--config", config_path, "--explanation", path, "--a", a, "--b", b])
    assert code == expected

    capsys.readouterr()
    docs = ",".join(explanation.pool[:3])
    assert main(["-q", "pair", "--config", config_path, "--explanation", path, "--docs", docs]) == 0
    rows = capsys.readouterr().out.strip().split("\n")
    assert rows[0].split("\t") == ["term", *explanation.pool[:3]]
    assert rows[-1].startswith("total\t")


def test_candidates_and_solve(config_path, synth_dir, capsys):
    assert main(["-q", "candidates", "--config", config_path, "--query", "q00"]) == 0
    assert (synth_dir / "runs" / "candidates" / "q00.tsv").exists()

    assert main(["-q", "explain", "--config", config_path, "--intermediates"]) == 0
    matrix = synth_dir / "runs" / "explanations" / "q02.matrix.tsv"
    assert matrix.exists()
    capsys.readouterr()
    assert main(["-q", "solve", "--matrix", str(matrix), "--budget", "3"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["method"] == "greedy"
    assert len(result["terms"]) <= 3


def test_evaluate(config_path, synth_dir, capsys):
    code = main(["-q", "evaluate", "--config", config_path, "--sampling", "topk", "--sweep", "10"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("topk")
    assert (synth_dir / "runs" / "summary-planted-weak.tsv").exists()


def test_config_errors_exit_2(config_path, capsys):
    assert main(["-q", "explain", "--config", config_path, "--blackbox", "bm25"]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_strong_mode_with_perturbation_exits_2(tmp_path):
    path = tmp_path / "strong.json"
    path.write_text(json.dumps({"mode": "strong", "perturb": True}))
    assert main(["-q", "explain", "--config", str(path)]) == EXIT_CONFIG


def test_data_errors_exit_3(config_path, capsys):
    assert main(["-q", "explain", "--config", config_path, "--query", "q77"]) == EXIT_DATA
    assert "unknown query id" in capsys.readouterr().err


def test_pair_needs_documents(config_path, tmp_path):
    with pytest.raises(SystemExit):
        main(["pair", "--config", config_path, "--explanation", str(tmp_path / "x.json")])


@pytest.mark.parametrize("command", ["explain", "candidates"])
def test_unmatched_query_is_skipped(config_path, synth_dir, capsys, command):
    with open(synth_dir / "queries.tsv", "a", encoding="utf-8") as fh:
        fh.write("qx\tzebra unicorn\n")
    assert main(["-q", command, "--config", config_path]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert [line.split("\t")[0] for line in lines] == ["q00", "q01", "q02", "qx"]
    assert lines[-1] == "qx\tskipped: no document matches a query term"


def test_only_skipped_queries_exit_3(config_path, synth_dir):
    (synth_dir / "queries.tsv").write_text("qx\tzebra unicorn\n", encoding="utf-8")
    assert main(["-q", "explain", "--config", config_path]) == EXIT_DATA


def test_missing_files_exit_3(config_path, synth_dir, tmp_path, capsys):
    assert main(["-q", "explain", "--config", str(tmp_path / "nope.json")]) == EXIT_DATA
    (synth_dir / "queries.tsv").unlink()
    assert main(["-q", "explain", "--config", config_path]) == EXIT_DATA
    assert "data error" in capsys.readouterr().err
