import hashlib
import json

import numpy as np
import pytest

from advdebias import cli
from advdebias.data import planted_gender_vocabulary
from advdebias.models import LogisticPredictor

SCHEMA_KEYS = {"command", "seed", "debias", "mode", "accuracy", "groups", "dp_gap", "eo_gap_y0",
               "eo_gap_y1", "p_value_y0", "p_value_y1", "steps", "wall_time_s"}
GROUP_KEYS = {"fpr", "fnr", "tp", "fp", "tn", "fn", "positive_rate"}


def run(*argv):
    return cli.main([str(a) for a in argv])


def read(path):
    return json.loads(path.read_text())


def write_adult(path, n, seed, test_file=False):
    rng = np.random.default_rng(seed)
    lines = ["|1x3 Cross validator"] if test_file else []
    for i in range(n):
        sex = "Male" if i % 3 else "Female"
        edu = rng.integers(5, 16)
        rich = (edu + rng.normal(0, 2) + (2 if sex == "Male" else 0)) > 13
        label = (">50K" if rich else "<=50K") + ("." if test_file else "")
        lines.append(f"{rng.integers(17, 80)}, Private, 1000, Bachelors, {edu}, Married, Sales, Husband, "
                     f"White, {sex}, 0, 0, {rng.integers(20, 60)}, United-States, {label}")
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def adult_files(tmp_path):
    tr, te = tmp_path / "small.data", tmp_path / "small.test"
    write_adult(tr, 600, 0)
    write_adult(te, 300, 1, test_file=True)
    return tr, te


class TestToy:
    def test_both_runs(self, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert run("toy", "--debias", "both", "--seed", 7, "--steps", 400, "--out", out) == 0
        runs = read(out)
        assert isinstance(runs, list) and [r["debias"] for r in runs] == [False, True]
        for r in runs:
            assert SCHEMA_KEYS <= set(r)
            assert set(r["groups"]["0"]) == GROUP_KEYS
            assert r["wall_time_s"] is None and r["seed"] == 7
            assert {"w_r", "w_u", "b"} == set(r["coefficients"])
        manifest = read(tmp_path / "m.json.manifest.json")
        assert manifest["command"] == "toy" and manifest["wall_time_s"] > 0
        assert manifest["metrics_sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()
        assert "parity gap" in capsys.readouterr().out

    def test_single_run_and_n_override(self, tmp_path):
        out = tmp_path / "m.json"
        assert run("toy", "--debias", "off", "--n", 500, "--steps", 50, "--out", out) == 0
        assert isinstance(read(out), dict)
        assert read(tmp_path / "m.json.manifest.json")["options"]["n"] == 500

    def test_byte_identical_repeat(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert run("toy", "--steps", 300, "--seed", 3, "--out", p) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_replay(self, tmp_path, capsys):
        out = tmp_path / "m.json"
        run("toy", "--steps", 200, "--out", out)
        assert run("replay", tmp_path / "m.json.manifest.json") == 0
        assert "identical" in capsys.readouterr().out

    def test_replay_detects_mismatch(self, tmp_path):
        out = tmp_path / "m.json"
        run("toy", "--steps", 100, "--out", out)
        mpath = tmp_path / "m.json.manifest.json"
        m = read(mpath)
        m["metrics_sha256"] = "0" * 64
        mpath.write_text(json.dumps(m))
        assert run("replay", mpath) == cli.EXIT_CHECK

    def test_divergence_exit_code(self, tmp_path, capsys):
        out = tmp_path / "m.json"
        code = run("toy", "--debias", "on", "--loss-blowup-limit", 1e-3, "--out", out)
        assert code == cli.EXIT_DIVERGED
        err = capsys.readouterr().err
        assert "diverged" in err
        assert (tmp_path / "m.json.on.divergence.ndjson").is_file()

    def test_log_files(self, tmp_path):
        run("toy", "--steps", 30, "--out", tmp_path / "m.json", "--log", tmp_path / "train.ndjson")
        for tag in ("off", "on"):
            lines = (tmp_path / f"train.{tag}.ndjson").read_text().splitlines()
            assert len(lines) == 30


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"steps": 120, "seed": 3, "debias": "off"}))
        out = tmp_path / "m.json"
        assert run("toy", "--config", cfg, "--seed", 5, "--out", out) == 0
        opts = read(tmp_path / "m.json.manifest.json")["options"]
        assert (opts["steps"], opts["seed"], opts["debias"]) == (120, 5, "off")
        assert read(out)["steps"] == 120

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"learning_rate": 1}))
        assert run("toy", "--config", cfg, "--out", tmp_path / "m.json") == cli.EXIT_INPUT

    def test_unreadable(self, tmp_path):
        assert run("toy", "--config", tmp_path / "none.json") == cli.EXIT_INPUT

    def test_output_dir_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path / "outdir"))
        assert run("toy", "--steps", 20, "--debias", "off", "--out", "rel.json") == 0
        assert (tmp_path / "outdir" / "rel.json").is_file()


class TestAdult:
    def test_report_and_counts(self, tmp_path, adult_files):
        out, report = tmp_path / "a.json", tmp_path / "a.txt"
        code = run("adult", "--train-path", adult_files[0], "--test-path", adult_files[1],
                   "--steps", 200, "--out", out, "--report", report)
        assert code == 0
        runs = read(out)
        sizes = {"0": 100, "1": 200}
        for r in runs:
            assert r["mode"] == "equality_of_odds"
            for g, n in sizes.items():
                c = r["groups"][g]
                assert c["tp"] + c["fp"] + c["tn"] + c["fn"] == n
            assert r["entropy_z_given_y"] <= r["entropy_z"]
        assert "adversary_holdout_loss" in runs[1]
        text = report.read_text()
        assert "Without Debiasing" in text and "With Debiasing" in text
        manifest = read(tmp_path / "a.json.manifest.json")
        assert manifest["datasets"]["train"] == str(adult_files[0])

    def test_opportunity_logs_sub_batches(self, tmp_path, adult_files):
        log = tmp_path / "log.ndjson"
        code = run("adult", "--train-path", adult_files[0], "--test-path", adult_files[1], "--steps", 20,
                   "--debias", "on", "--mode", "opportunity", "--target-y", 1, "--batch-size", 600,
                   "--out", tmp_path / "a.json", "--log", log)
        assert code == 0
        recs = [json.loads(line) for line in log.read_text().splitlines()]
        from advdebias.data.adult import label_of, read_adult_file
        positives = sum(label_of(r) for r in read_adult_file(adult_files[0]))
        assert all(r["adversary_batch"] == positives for r in recs)
        assert read(tmp_path / "a.json")["target_y"] == 1

    def test_missing_file(self, tmp_path, capsys):
        code = run("adult", "--train-path", tmp_path / "x", "--test-path", tmp_path / "y", "--out", tmp_path / "a.json")
        assert code == cli.EXIT_INPUT
        assert "not found" in capsys.readouterr().err

    def test_paths_required(self, tmp_path):
        assert run("adult", "--out", tmp_path / "a.json") == cli.EXIT_INPUT

    def test_malformed_file(self, tmp_path, adult_files):
        bad = tmp_path / "bad.data"
        bad.write_text("1, 2, 3\n")
        assert run("adult", "--train-path", bad, "--test-path", adult_files[1]) == cli.EXIT_INPUT


@pytest.fixture
def embedding_files(tmp_path):
    sv = planted_gender_vocabulary()
    emb = tmp_path / "vectors.txt"
    sv.table.save(emb)
    ana = tmp_path / "analogies.txt"
    lines = []
    section = None
    for it in sv.analogies:
        if it.section != section:
            section = it.section
            lines.append(f": {section}")
        lines.append(f"{it.a} {it.b} {it.c} {it.d}")
    ana.write_text("\n".join(lines) + "\n")
    return emb, ana


class TestEmbed:
    def test_synthetic_with_query(self, tmp_path, capsys):
        out = tmp_path / "e.json"
        assert run("embed", "--synthetic", "--steps", 300, "--query", "he:she:doctor", "--out", out) == 0
        runs = read(out)
        assert [r["debias"] for r in runs] == [False, True]
        for r in runs:
            assert {"w_dot_g", "w_norm", "heldout_loss", "k"} <= set(r)
            assert len(r["queries"]["he:she:doctor"]) == 9
        text = capsys.readouterr().out
        assert "he : she :: doctor : ?" in text and "Biased" in text and "Debiased" in text

    def test_from_files_matches_synthetic(self, tmp_path, embedding_files):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run("embed", "--synthetic", "--steps", 100, "--debias", "off", "--out", a) == 0
        assert run("embed", "--embeddings", embedding_files[0], "--analogies", embedding_files[1],
                   "--steps", 100, "--debias", "off", "--out", b) == 0
        assert read(a)["w_dot_g"] == pytest.approx(read(b)["w_dot_g"], abs=1e-9)

    def test_missing_query_word(self, tmp_path, capsys):
        code = run("embed", "--synthetic", "--query", "he:she:zebra", "--out", tmp_path / "e.json")
        assert code == cli.EXIT_INPUT
        assert "zebra" in capsys.readouterr().err

    def test_missing_pair_word(self, tmp_path, embedding_files, capsys):
        pairs = tmp_path / "pairs.txt"
        pairs.write_text("he she\nlord lady\n")
        code = run("embed", "--embeddings", embedding_files[0], "--analogies", embedding_files[1],
                   "--pairs", pairs, "--out", tmp_path / "e.json")
        assert code == cli.EXIT_INPUT
        assert "lord" in capsys.readouterr().err

    def test_bad_query_syntax(self, tmp_path):
        assert run("embed", "--synthetic", "--query", "he:she", "--out", tmp_path / "e.json") == cli.EXIT_INPUT

    def test_needs_source(self, tmp_path):
        assert run("embed", "--out", tmp_path / "e.json") == cli.EXIT_INPUT

    def test_missing_embedding_file(self, tmp_path):
        code = run("embed", "--embeddings", tmp_path / "none.txt", "--analogies", tmp_path / "a.txt",
                   "--out", tmp_path / "e.json")
        assert code == cli.EXIT_INPUT


class TestGradcheck:
    def test_all_pass(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert run("gradcheck", "--model", "all", "--trials", 20, "--out", out) == 0
        res = read(out)
        assert res["passed"] and len(res["results"]) == 5
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 5 and all("worst relative error" in line for line in lines)

    def test_unknown_model(self, tmp_path):
        assert run("gradcheck", "--model", "svm", "--out", tmp_path / "g.json") == cli.EXIT_INPUT

    def test_tampered_gradient(self, tmp_path, monkeypatch):
        original = LogisticPredictor.loss_grad

        def doubled(self, X, y):
            value, grad = original(self, X, y)
            return value, 2 * grad

        monkeypatch.setattr(LogisticPredictor, "loss_grad", doubled)
        code = run("gradcheck", "--model", "logistic", "--trials", 2, "--out", tmp_path / "g.json")
        assert code == cli.EXIT_CHECK


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "advdebias", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "gradcheck" in res.stdout
