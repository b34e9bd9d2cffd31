import json

import pytest

from episilver.cli import main
from episilver.errors import ConfigError, DataError
from episilver.labeling import EpidemicClass as EC
from episilver.pipeline import PipelineConfig, config_hash, derive_seed, run_pipeline
from episilver.synth import SynthSpec, write_corpus

SMALL_COUNTS = {EC.CHOLERA: 40, EC.EBOLA: 40, EC.MERS: 30, EC.SWINE_FLU: 30,
                EC.NON_EPIDEMIC: 320}


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "small.jsonl"
    spec = SynthSpec(
        class_counts=SMALL_COUNTS, noise_token_rate=0.2, retweet_rate=0.1,
        duplicate_rate=0.05, seed=23,
    )
    write_corpus(spec, str(path))
    return str(path)


def small_config(corpus, out_dir, **overrides):
    defaults = dict(
        inputs=(corpus,), out_dir=str(out_dir), master_seed=99,
        threads=1, max_iter=150,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


class TestRunPipeline:
    def test_artifacts_and_accounting(self, small_corpus, tmp_path):
        result = run_pipeline(small_config(small_corpus, tmp_path / "out"))
        out = result.out_dir
        for name in ["dataset.tsv", "tfidf.json", "manifest.json",
                     "model-logistic.json", "model-svm.json", "model-tree.json",
                     "report-logistic.tsv", "report-svm.json", "confusion-tree.csv"]:
            assert (out / name).exists(), name

        manifest = json.loads((out / "manifest.json").read_text())
        ingest = manifest["stages"]["ingest"]
        assert ingest["lines"] == ingest["parsed"] + ingest["parse_errors"] + ingest["schema_errors"]
        assert ingest["parsed"] == ingest["originals"] + ingest["retweets"]
        label = manifest["stages"]["label"]
        matched_total = sum(label["matched"].values())
        assert matched_total + label["ambiguous_excluded"] + label["unmatched"] \
            == ingest["documents"]
        dataset = manifest["stages"]["dataset"]
        positives = sum(n for name, n in dataset["class_counts"].items()
                        if name != "non_epidemic")
        assert dataset["class_counts"]["non_epidemic"] == positives
        assert dataset["total"] == 2 * positives
        assert dataset["total"] <= ingest["documents"]
        assert manifest["config_sha256"] == config_hash(
            small_config(small_corpus, tmp_path / "out"))
        assert set(result.reports) == {"logistic", "svm", "tree"}

    def test_deterministic_artifacts(self, small_corpus, tmp_path):
        config_a = small_config(small_corpus, tmp_path / "a")
        config_b = small_config(small_corpus, tmp_path / "b")
        run_pipeline(config_a)
        run_pipeline(config_b)
        for name in ["dataset.tsv", "tfidf.json", "model-logistic.json",
                     "model-svm.json", "model-tree.json",
                     "report-logistic.json", "report-svm.tsv",
                     "confusion-logistic.csv"]:
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, name

    def test_unreadable_input_fails_in_ingest(self, tmp_path):
        config = PipelineConfig(
            inputs=(str(tmp_path / "missing.jsonl"),),
            out_dir=str(tmp_path / "out"),
        )
        with pytest.raises(DataError) as exc:
            run_pipeline(config)
        assert exc.value.stage == "ingest"

    def test_mask_keywords_removes_rule_tokens(self, small_corpus, tmp_path):
        result = run_pipeline(small_config(
            small_corpus, tmp_path / "masked", mask_keywords=True))
        tfidf = json.loads((result.out_dir / "tfidf.json").read_text())
        vocab = tfidf["vocabulary"]
        for token in ["cholera", "ebola", "mers", "swineflu", "flu"]:
            assert token not in vocab

    def test_threads_do_not_change_results(self, small_corpus, tmp_path):
        a = run_pipeline(small_config(small_corpus, tmp_path / "t1", threads=1))
        b = run_pipeline(small_config(small_corpus, tmp_path / "t4", threads=4))
        assert (a.out_dir / "dataset.tsv").read_bytes() == \
            (b.out_dir / "dataset.tsv").read_bytes()


class TestPipelineConfig:
    def test_bad_ratio(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig(inputs=("x",), out_dir=str(tmp_path), ratio=1.5)

    def test_empty_classes(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig(inputs=("x",), out_dir=str(tmp_path),
                           included_classes=())

    def test_non_epidemic_not_includable(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig(inputs=("x",), out_dir=str(tmp_path),
                           included_classes=(EC.NON_EPIDEMIC,))

    def test_colliding_paths(self):
        with pytest.raises(ConfigError):
            PipelineConfig(inputs=("same",), out_dir="same")

    def test_unknown_model_kind(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig(inputs=("x",), out_dir=str(tmp_path),
                           model_kinds=("forest",))

    def test_seed_derivation_is_stable_and_distinct(self):
        assert derive_seed(42, "split") == derive_seed(42, "split")
        assert derive_seed(42, "split") != derive_seed(42, "tree")
        assert derive_seed(42, "split") != derive_seed(43, "split")


class TestCli:
    def test_stage_chain(self, small_corpus, tmp_path, capsys):
        docs = tmp_path / "docs.tsv"
        dataset = tmp_path / "dataset.tsv"
        out = tmp_path / "cli-out"
        assert main(["ingest", "--input", small_corpus, "--out", str(docs),
                     "--stats", str(tmp_path / "stats.json"),
                     "--threads", "1"]) == 0
        stats = json.loads((tmp_path / "stats.json").read_text())
        assert stats["documents"] > 0
        assert main(["label", "--input", str(docs), "--out", str(dataset),
                     "--seed", "99", "--stats", str(tmp_path / "label.json")]) == 0
        assert main(["train", "--dataset", str(dataset), "--out", str(out),
                     "--model", "logistic", "--seed", "99"]) == 0
        assert main(["eval", "--dataset", str(dataset),
                     "--tfidf", str(out / "tfidf.json"),
                     "--model-file", str(out / "model-logistic.json"),
                     "--out", str(out), "--seed", "99"]) == 0
        assert (out / "report-logistic.json").exists()
        assert main(["report", "--report", str(out / "report-logistic.json"),
                     "--format", "tsv"]) == 0
        captured = capsys.readouterr()
        assert "class\tprecision\trecall\tf1\tsupport" in captured.out

    def test_run_subcommand(self, small_corpus, tmp_path, capsys):
        code = main(["run", "--input", small_corpus,
                     "--out", str(tmp_path / "run-out"),
                     "--model", "logistic", "--seed", "1", "--threads", "1"])
        assert code == 0
        assert "weighted_f1=" in capsys.readouterr().out
        assert (tmp_path / "run-out" / "manifest.json").exists()

    def test_missing_input_exits_3_with_error_record(self, tmp_path, capsys):
        code = main(["run", "--input", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "o")])
        assert code == 3
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["stage"] == "ingest"
        assert record["error"] == "DataError"

    def test_bad_class_list_exits_2(self, small_corpus, tmp_path, capsys):
        code = main(["run", "--input", small_corpus,
                     "--out", str(tmp_path / "o"), "--classes", "plague"])
        assert code == 2
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["error"] == "ConfigError"

    def test_bad_ratio_exits_2(self, small_corpus, tmp_path, capsys):
        code = main(["run", "--input", small_corpus,
                     "--out", str(tmp_path / "o"), "--ratio", "2.0"])
        assert code == 2

    def test_single_class_dataset_exits_4(self, tmp_path, capsys):
        dataset = tmp_path / "ds.tsv"
        rows = ["id\tlabel\ttext"] + [
            f"{i}\tnon_epidemic\tplain doc {i}" for i in range(8)
        ]
        dataset.write_text("\n".join(rows) + "\n", encoding="utf-8")
        code = main(["train", "--dataset", str(dataset),
                     "--out", str(tmp_path / "out"), "--model", "logistic"])
        assert code == 4
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["error"] == "DegenerateLabelsError"

    def test_eval_rejects_foreign_feature_model(self, small_corpus, tmp_path, capsys):
        docs = tmp_path / "docs.tsv"
        dataset = tmp_path / "ds.tsv"
        out = tmp_path / "out"
        main(["ingest", "--input", small_corpus, "--out", str(docs),
              "--threads", "1", "--stats", str(tmp_path / "s.json")])
        main(["label", "--input", str(docs), "--out", str(dataset),
              "--stats", str(tmp_path / "l.json")])
        main(["train", "--dataset", str(dataset), "--out", str(out),
              "--model", "logistic"])
        # tamper: retrain features on a subset so checksums disagree
        sub = tmp_path / "sub"
        main(["train", "--dataset", str(dataset), "--out", str(sub),
              "--model", "logistic", "--ratio", "0.5"])
        code = main(["eval", "--dataset", str(dataset),
                     "--tfidf", str(sub / "tfidf.json"),
                     "--model-file", str(out / "model-logistic.json"),
                     "--out", str(out)])
        assert code == 3
