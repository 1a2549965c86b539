import json

import pytest

from phishdqn import cli
from phishdqn.dataset import write_csv
from phishdqn.neuralnet import load_model
from phishdqn.url_lexer import FEATURE_NAMES, HostEvidence, write_evidence_cache

FULL_BENIGN = HostEvidence(
    https_issuer_trusted=True, dns_has_record=True, domain_age_days=4000, anchor_ratio=0.05,
    redirect_count=0, popup_count=0, mouseover_mismatch=False, form_handler_cross_domain=False,
    whois_registered=True,
)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


@pytest.fixture(scope="module")
def rule_files(tmp_path_factory, rule_data):
    records, cache, _ = rule_data
    d = tmp_path_factory.mktemp("rule")
    write_csv(records, d / "corpus.csv")
    write_evidence_cache(d / "evidence.jsonl", [*cache.items(), ("https://example.com", FULL_BENIGN)])
    return d


@pytest.fixture(scope="module")
def trained_model(rule_files):
    path = rule_files / "model.json"
    argv = ["train", "--corpus", rule_files / "corpus.csv", "--evidence", rule_files / "evidence.jsonl",
            "--model", path, "--out", rule_files / "stats.json", "--episodes", "30"]
    assert cli.main([str(a) for a in argv]) == 0
    return path


def test_extract(tmp_path, capsys):
    corpus = tmp_path / "c.csv"
    corpus.write_text("url,label\nhttps://example.com,0\nnot-a-url,1\nhttp://149.56.144.216/processa.php,1\n")
    out = tmp_path / "f.csv"
    code, stdout = run(capsys, "extract", "--corpus", corpus, "--out", out)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["rows"] == 2 and summary["skipped"] == 1 and summary["seed"] == 42
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join([*FEATURE_NAMES, "label"]) and len(lines) == 3
    first = out.read_bytes()
    mask = (tmp_path / "f.csv.mask.csv").read_bytes()
    assert run(capsys, "extract", "--corpus", corpus, "--out", out)[0] == 0
    assert out.read_bytes() == first and (tmp_path / "f.csv.mask.csv").read_bytes() == mask


def test_extract_missing_corpus_is_io_error(tmp_path, capsys):
    code, stdout = run(capsys, "extract", "--corpus", tmp_path / "none.csv", "--out", tmp_path / "f.csv")
    assert code == 2 and json.loads(stdout)["error"] == "FileNotFoundError"


def test_extract_bad_label_is_data_error(tmp_path, capsys):
    corpus = tmp_path / "c.csv"
    corpus.write_text("http://a.com,maybe\n")
    assert run(capsys, "extract", "--corpus", corpus, "--out", tmp_path / "f.csv")[0] == 3


def test_extract_missing_evidence_strict(tmp_path, capsys):
    corpus = tmp_path / "c.csv"
    corpus.write_text("http://a.com,0\n")
    code = run(capsys, "extract", "--corpus", corpus, "--out", tmp_path / "f.csv", "--missing-evidence", "error")[0]
    assert code == 3


def test_train_outputs(trained_model, rule_files):
    model = load_model(trained_model)
    assert model.training_meta["seed"] == 42 and model.training_meta["episodes"] == 30
    assert model.training_meta["epsilon_schedule"]["kind"] == "linear"
    stats = json.loads((rule_files / "stats.json").read_text())
    assert stats["split"] == {"ratio": 0.8, "train": 410, "test": 102}
    assert stats["train_report"]["accuracy"] >= 0.99
    assert len(stats["training"]["episode_rewards"]) == 30


def test_train_same_seed_identical_model(rule_files, tmp_path, capsys):
    args = ["train", "--corpus", rule_files / "corpus.csv", "--evidence", rule_files / "evidence.jsonl", "--episodes", "2"]
    run(capsys, *args, "--model", tmp_path / "a.json")
    run(capsys, *args, "--model", tmp_path / "b.json")
    run(capsys, *args, "--model", tmp_path / "c.json", "--seed", "7")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.json").read_bytes() != (tmp_path / "c.json").read_bytes()


def test_train_rejects_zero_episodes(rule_files, tmp_path):
    with pytest.raises(SystemExit) as info:
        cli.main(["train", "--corpus", str(rule_files / "corpus.csv"), "--model", str(tmp_path / "m.json"), "--episodes", "0"])
    assert info.value.code == 2


def test_config_file_and_overrides(rule_files, tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"episodes": 1, "gamma": 0.5, "batch_size": 16}))
    monkeypatch.setenv("PHISHDQN_SEED", "11")
    code, out = run(capsys, "train", "--corpus", rule_files / "corpus.csv", "--model", tmp_path / "m.json", "--config", cfg, "--gamma", "0.25")
    assert code == 0
    doc = json.loads(out)
    assert doc["seed"] == 11
    assert (doc["config"]["episodes"], doc["config"]["gamma"], doc["config"]["batch_size"]) == (1, 0.25, 16)
    assert load_model(tmp_path / "m.json").training_meta["config"]["gamma"] == 0.25


def test_bad_config_value_is_usage_error(rule_files, tmp_path, capsys):
    code = run(capsys, "train", "--corpus", rule_files / "corpus.csv", "--model", tmp_path / "m.json", "--gamma", "3")[0]
    assert code == 2


def test_eval_on_training_rows(trained_model, rule_files, capsys):
    code, out = run(capsys, "eval", "--model", trained_model, "--corpus", rule_files / "corpus.csv", "--evidence", rule_files / "evidence.jsonl")
    assert code == 0 and json.loads(out)["report"]["accuracy"] >= 0.99


def test_eval_single_row(trained_model, tmp_path, capsys):
    corpus = tmp_path / "one.csv"
    corpus.write_text("http://1.2.3.4/login,1\n")
    code, out = run(capsys, "eval", "--model", trained_model, "--corpus", corpus)
    r = json.loads(out)["report"]
    assert code == 0 and r["tp"] + r["tn"] + r["fp"] + r["fn"] == 1


def test_eval_feature_order_mismatch(trained_model, tmp_path, capsys):
    doc = json.loads(trained_model.read_text())
    doc["feature_order"] = doc["feature_order"][::-1]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    corpus = tmp_path / "one.csv"
    corpus.write_text("http://1.2.3.4/login,1\n")
    assert run(capsys, "eval", "--model", bad, "--corpus", corpus)[0] == 5


def test_crossval(rule_files, tmp_path, capsys):
    args = ["crossval", "--corpus", rule_files / "corpus.csv", "--evidence", rule_files / "evidence.jsonl", "--episodes", "3"]
    code, out = run(capsys, *args)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["folds"]) == 2 and doc["folds_disjoint"] and doc["folds_cover_dataset"]
    assert sum(f["test_size"] for f in doc["folds"]) == 512
    accs = [f["report"]["accuracy"] for f in doc["folds"]]
    assert doc["mean"]["accuracy"] == pytest.approx(sum(accs) / 2)
    assert doc["mean"]["defined_counts"]["accuracy"] == 2
    assert run(capsys, *args)[1] == out


def test_classify_benign(trained_model, rule_files, capsys):
    code, out = run(capsys, "classify", "--model", trained_model, "--evidence", rule_files / "evidence.jsonl", "https://example.com")
    doc = json.loads(out)
    assert code == 0 and doc["label"] == 0
    assert set(doc) == {"url", "label", "q_phishing", "features", "evidence_mask"}
    assert all(doc["evidence_mask"].values())


def test_classify_phishing_exit_code(trained_model, capsys):
    code, out = run(capsys, "classify", "--model", trained_model, "http://149.56.144.216/processa.php")
    assert code == 1 and json.loads(out)["label"] == 1


def test_classify_errors(trained_model, tmp_path, capsys):
    code, out = run(capsys, "classify", "--model", trained_model, "not a url")
    assert code == 3 and json.loads(out)["error"] == "MalformedUrl"
    assert run(capsys, "classify", "--model", tmp_path / "missing.json", "https://example.com")[0] == 2
