import importlib
import json
import os

import pytest
from click.testing import CliRunner

from conftest import data_file
from vuln_predict.cli.cli import cli

# the package re-exports the click group under the same name as the module
cli_module = importlib.import_module("vuln_predict.cli.cli")

RUN_CONFIG = data_file("run_config.yaml")


def invoke(command, output_dir, *extra):
    """Run a subcommand against the small synthetic corpus from the test config."""
    runner = CliRunner()
    return runner.invoke(
        cli,
        [command, "--config", RUN_CONFIG, "--synthetic", "--out", output_dir, *extra],
    )


def read(output_dir, name):
    with open(os.path.join(output_dir, name), "r", encoding="utf-8") as f:
        return f.read()


class TestIngest:
    def test_synthetic_ingest(self, test_output_dir):
        result = invoke("ingest", test_output_dir)

        assert result.exit_code == 0, result.output
        assert "✅ Ingest completed!" in result.output
        report = json.loads(read(test_output_dir, "ingest_report.json"))
        assert report["records"] == 600
        assert report["exploited"] == 180
        assert report["seed"] == 11
        assert report["errors"] == []
        assert report["tweets"] > 0
        for name in ("corpus.jsonl", "exploit_mapping.csv", "tweets.jsonl", "disclosures_by_month.csv"):
            assert os.path.exists(os.path.join(test_output_dir, name))

    def test_file_ingest_reports_rejects(self, test_output_dir, monkeypatch, repo_root):
        """The sample feed holds one record with an invalid access vector."""
        monkeypatch.chdir(repo_root)
        runner = CliRunner()
        result = runner.invoke(cli, ["ingest", "--config", RUN_CONFIG, "--out", test_output_dir])

        assert result.exit_code == 1
        report = json.loads(read(test_output_dir, "ingest_report.json"))
        assert report["records"] == 3
        assert len(report["errors"]) == 1
        assert "CVE-2015-0003" in report["errors"][0]
        assert read(test_output_dir, "corpus.jsonl").count("\n") == 3

    def test_missing_config_file(self, test_output_dir):
        runner = CliRunner()
        result = runner.invoke(cli, ["ingest", "--config", "nonexistent.yaml", "--out", test_output_dir])

        assert result.exit_code == 1
        assert not os.path.exists(os.path.join(test_output_dir, "corpus.jsonl"))

    def test_missing_input_paths(self, test_output_dir, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text("seed: 1\npaths:\n  nvd_feeds: [missing_feed.json]\n", encoding="utf-8")
        runner = CliRunner()
        result = runner.invoke(cli, ["ingest", "--config", str(config), "--out", test_output_dir])

        assert result.exit_code == 1

    def test_unexpected_failure_exits_nonzero(self, test_output_dir, monkeypatch):
        calls = []

        def boom(*args, **kwargs):
            calls.append(args)
            raise RuntimeError("generator exploded")

        monkeypatch.setattr(cli_module, "generate_synthetic_corpus", boom)
        result = invoke("ingest", test_output_dir)

        assert len(calls) == 1
        assert result.exit_code == 1
        assert not os.path.exists(os.path.join(test_output_dir, "corpus.jsonl"))
        assert "✅" not in result.output


class TestModelCommands:
    def test_featurize_train_evaluate(self, test_output_dir):
        result = invoke("featurize", test_output_dir, "--mode", "summary_only")
        assert result.exit_code == 0, result.output
        vectorizer = json.loads(read(test_output_dir, "vectorizer.json"))
        assert vectorizer["split"] == "temporal"
        assert vectorizer["mode"] == "summary_only"

        result = invoke("train", test_output_dir)
        assert result.exit_code == 0, result.output
        model = json.loads(read(test_output_dir, "model.json"))
        assert model["epochs"] == 5
        assert model["seed"] == 11

        result = invoke("evaluate", test_output_dir)
        assert result.exit_code == 0, result.output
        evaluation = json.loads(read(test_output_dir, "evaluation.json"))
        assert evaluation["split"] == "temporal"
        counts = evaluation["counts"]
        assert sum(counts.values()) == evaluation["test_size"]
        assert os.path.exists(os.path.join(test_output_dir, "evaluation_pr.svg"))

    def test_train_without_vectorizer(self, test_output_dir):
        result = invoke("train", test_output_dir)

        assert result.exit_code == 1
        assert not os.path.exists(os.path.join(test_output_dir, "model.json"))

    def test_evaluate_without_model(self, test_output_dir):
        assert invoke("featurize", test_output_dir, "--mode", "summary_only").exit_code == 0

        result = invoke("evaluate", test_output_dir)

        assert result.exit_code == 1


class TestExperimentCommand:
    def test_single_experiment(self, test_output_dir):
        result = invoke("experiment", test_output_dir, "--experiment", "1")

        assert result.exit_code == 0, result.output
        assert "✅ Experiments completed!" in result.output
        report = json.loads(read(test_output_dir, "exp1_report.json"))
        assert report["seed"] == 11
        assert {c["name"] for c in report["conditions"]} == {"summary_only_50pct", "summary_only_17pct"}
        assert read(test_output_dir, "exp1_metrics.csv").startswith("# config_hash=")
        assert os.path.exists(os.path.join(test_output_dir, "exp1_pr.svg"))

    def test_rerun_is_byte_identical(self, test_output_dir):
        assert invoke("experiment", test_output_dir, "--experiment", "2").exit_code == 0
        first = read(test_output_dir, "exp2_metrics.csv")

        assert invoke("experiment", test_output_dir, "--experiment", "2").exit_code == 0
        assert read(test_output_dir, "exp2_metrics.csv") == first

    def test_seed_override_changes_stamp(self, test_output_dir):
        result = invoke("experiment", test_output_dir, "--experiment", "ablation", "--seed", "4")

        assert result.exit_code == 0, result.output
        report = json.loads(read(test_output_dir, "feature_ablation_report.json"))
        assert report["seed"] == 4

    def test_unknown_experiment_rejected(self, test_output_dir):
        result = invoke("experiment", test_output_dir, "--experiment", "9")

        assert result.exit_code == 2

    def test_experiment_without_corpus(self, test_output_dir, monkeypatch, repo_root):
        """Without --synthetic the canonical corpus from ingest is required."""
        monkeypatch.chdir(repo_root)
        runner = CliRunner()
        result = runner.invoke(
            cli, ["experiment", "--config", RUN_CONFIG, "--out", test_output_dir, "--experiment", "1"]
        )

        assert result.exit_code == 1


class TestHistogramCommand:
    @pytest.mark.parametrize("bin_width", ["7", "30"])
    def test_histogram(self, test_output_dir, bin_width):
        result = invoke("histogram", test_output_dir, "--bin-width", bin_width)

        assert result.exit_code == 0, result.output
        histogram = json.loads(read(test_output_dir, "lag_histogram.json"))
        assert histogram["bin_width_days"] == int(bin_width)
        assert histogram["n_lags"] == 180
        assert os.path.exists(os.path.join(test_output_dir, "lag_histogram.svg"))
