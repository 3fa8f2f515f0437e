# src/vuln_predict/cli/cli.py

import click
import gzip
import io
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from importlib.metadata import version, PackageNotFoundError

from ..corpus.cwe import attach_cwe_details, load_cwe_catalog
from ..corpus.exploits import (
    label_corpus,
    load_edb_index_with_report,
    load_exploit_mapping_with_report,
    write_exploit_mapping_csv,
)
from ..corpus.models import ExploitMapping, LabeledCorpus, ParseReport, TweetRecord, VulnRecord
from ..corpus.nvd import FeedFormat, parse_nvd_feed_with_report, write_canonical_jsonl
from ..corpus.synthetic import generate_synthetic_corpus, generate_synthetic_tweets
from ..corpus.tweets import load_tweet_corpus_with_report, tweet_to_json
from ..errors import ConfigError, FeedParseError, VulnPredictError
from ..eval.experiments import (
    ExperimentReport,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    run_experiment_4,
    run_feature_ablation,
)
from ..eval.metrics import compute_metrics, confusion_from_predictions, pr_curve
from ..eval.sampling import exploit_lag_histogram, monthly_disclosure_counts
from ..eval.splits import SplitKind, SplitSpec, split
from ..features.scrub import scrub_corpus
from ..features.specs import FeatureMode, spec_for_mode
from ..features.vectorizer import FittedVectorizer, fit_vectorizer, transform
from ..model.svm import LinearModel, decision_scores, train
from ..report.generator import ExperimentReportWriter
from ..report.svg import render_line_chart
from ..utils import log
from ..utils.json_utils import read_json
from .config import EXPERIMENT_IDS, RunConfig, load_run_config

BANNER = r"""
                 _                               _ _      _
 __   ___   _| |_ __        _ __  _ __ ___  __| (_) ___| |_
 \ \ / / | | | | '_ \ _____| '_ \| '__/ _ \/ _` | |/ __| __|
  \ V /| |_| | | | | |_____| |_) | | |  __/ (_| | | (__| |_
   \_/  \__,_|_|_| |_|     | .__/|_|  \___|\__,_|_|\___|\__|
                           |_|
"""

try:
    __version__ = version("vuln-predict")
except PackageNotFoundError:
    __version__ = "unknown"


def run_options(func: Callable) -> Callable:
    """Options shared by every subcommand."""
    func = click.option(
        "--debug",
        is_flag=True,
        default=False,
        help="Enable debug-level logging"
    )(func)
    func = click.option(
        "--synthetic",
        is_flag=True,
        default=False,
        help="Use the synthetic corpus generator instead of real data"
    )(func)
    func = click.option(
        "--out",
        "output_dir",
        type=str,
        default=None,
        help="Output directory (overrides paths.output_dir, default: out)"
    )(func)
    func = click.option(
        "--seed",
        type=int,
        default=None,
        help="Seed for every random draw (overrides the config file)"
    )(func)
    func = click.option(
        "--config",
        "config_path",
        type=str,
        default=None,
        help="Path to the YAML run config"
    )(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="vuln-predict")
def cli():
    """vuln-predict CLI tool"""
    click.echo(f"{BANNER}\n")
    click.echo("Welcome to vuln-predict 🛡️")


# -- shared plumbing --------------------------------------------------------


def _setup(debug: bool) -> logging.Logger:
    return log.setup_logging(level=logging.DEBUG if debug else logging.INFO)


def _config(config_path: Optional[str], seed: Optional[int], output_dir: Optional[str], synthetic: bool) -> RunConfig:
    cfg = load_run_config(config_path, seed=seed, output_dir=output_dir)
    if not synthetic:
        cfg.validate_paths()
    return cfg


def _writer(cfg: RunConfig, logger: logging.Logger) -> ExperimentReportWriter:
    return ExperimentReportWriter(cfg.output_dir, cfg.config_hash, cfg.seed, logger)


def _log_run(logger: logging.Logger, cfg: RunConfig, synthetic: bool) -> None:
    logger.info(
        "Running with configuration:\n"
        f"         vuln-predict version : {__version__}\n"
        f"         data source          : {'synthetic generator' if synthetic else 'files'}\n"
        f"         seed                 : {cfg.seed}\n"
        f"         config hash          : {cfg.config_hash[:12]}\n"
        f"         output directory     : {cfg.output_dir}"
    )


def _read_bytes(path: str) -> bytes:
    if path.endswith(".gz"):
        with gzip.open(path, "rb") as f:
            return f.read()
    with open(path, "rb") as f:
        return f.read()


def _open(path: str) -> io.BytesIO:
    return io.BytesIO(_read_bytes(path))


def _feed_format(path: str) -> FeedFormat:
    name = path[:-3] if path.endswith(".gz") else path
    return FeedFormat.CANONICAL_JSONL if name.endswith(".jsonl") else FeedFormat.NVD_JSON_FEED


def _load_mapping(cfg: RunConfig, reports: List[ParseReport], prefer_output: bool) -> ExploitMapping:
    if cfg.paths.exploit_mapping or (prefer_output and cfg.mapping_path.exists()):
        path = str(cfg.mapping_path)
        mapping, report = load_exploit_mapping_with_report(_open(path), source=path)
    elif cfg.paths.edb_index:
        path = cfg.paths.edb_index
        mapping, report = load_edb_index_with_report(_open(path), source=path)
    else:
        raise ConfigError("No exploit mapping configured: set paths.exploit_mapping or paths.edb_index")
    reports.append(report)
    return mapping


def _ingest_files(cfg: RunConfig, logger: logging.Logger) -> Tuple[LabeledCorpus, ExploitMapping, List[ParseReport], List[str]]:
    if not cfg.paths.nvd_feeds:
        raise ConfigError("paths.nvd_feeds is empty")
    reports: List[ParseReport] = []
    errors: List[str] = []
    records: List[VulnRecord] = []
    for path in cfg.paths.nvd_feeds:
        try:
            feed, report = parse_nvd_feed_with_report(_open(path), _feed_format(path), source=path)
        except FeedParseError as e:
            logger.error(f"❌ Feed {path} could not be parsed: {e}")
            errors.append(f"{path}: {e}")
            continue
        logger.info(f"Feed {path}: {report.accepted} records, {len(report.rejected)} rejected")
        records.extend(feed)
        reports.append(report)
    if cfg.paths.cwe_catalog:
        records = attach_cwe_details(records, load_cwe_catalog(_open(cfg.paths.cwe_catalog)))
    mapping = _load_mapping(cfg, reports, prefer_output=False)
    corpus = label_corpus(records, mapping, provenance=f"nvd feeds: {', '.join(cfg.paths.nvd_feeds)}")
    return corpus, mapping, reports, errors


def _load_corpus(cfg: RunConfig, synthetic: bool, logger: logging.Logger) -> Tuple[LabeledCorpus, ExploitMapping, List[str]]:
    """The labeled corpus for downstream commands: generated, or read back from ingest output."""
    if synthetic:
        corpus, mapping = generate_synthetic_corpus(cfg.seed, cfg.synthetic)
        return corpus, mapping, []
    path = cfg.canonical_corpus_path
    if not path.exists():
        raise ConfigError(f"Canonical corpus not found at {path}; run `vulnpredict ingest` first")
    records, report = parse_nvd_feed_with_report(_open(str(path)), FeedFormat.CANONICAL_JSONL, source=str(path))
    reports = [report]
    mapping = _load_mapping(cfg, reports, prefer_output=True)
    corpus = label_corpus(records, mapping, provenance=f"canonical corpus {path}")
    logger.info(
        f"Loaded {len(corpus)} vulnerabilities, {corpus.positive_count} exploited "
        f"({corpus.positive_fraction:.1%})"
    )
    return corpus, mapping, _report_errors(reports)


def _load_tweets(cfg: RunConfig, corpus: LabeledCorpus, synthetic: bool) -> Tuple[List[TweetRecord], List[str]]:
    if synthetic:
        return generate_synthetic_tweets(corpus, cfg.seed, cfg.tweet_coverage), []
    if not cfg.paths.tweet_corpus:
        raise ConfigError("Experiment 4 needs paths.tweet_corpus")
    tweets, report = load_tweet_corpus_with_report(_open(cfg.paths.tweet_corpus), source=cfg.paths.tweet_corpus)
    return tweets, _report_errors([report])


def _report_errors(reports: Sequence[ParseReport]) -> List[str]:
    return [f"{r.source} {location}: {message}" for r in reports for location, message in r.rejected]


def _split_sides(cfg: RunConfig, corpus: LabeledCorpus, kind: SplitKind) -> Tuple[LabeledCorpus, LabeledCorpus]:
    settings = cfg.settings
    spec = SplitSpec(kind, test_fraction=settings.test_fraction, cutoff=settings.cutoff, seed=cfg.seed)
    ((train_side, test_side),) = split(scrub_corpus(corpus), spec)
    return train_side, test_side


def _finish(logger: logging.Logger, errors: Sequence[str], paths: Sequence[Path], what: str) -> None:
    if errors:
        for message in errors[:20]:
            logger.error(f"  {message}")
        if len(errors) > 20:
            logger.error(f"  ... and {len(errors) - 20} more")
        logger.error(f"❌ {what} finished with {len(errors)} error(s)")
        sys.exit(1)
    click.echo("\n")
    click.echo(f"✅ {what} completed!")
    for path in paths:
        click.echo(f"  📁 {path}")
    sys.exit(0)


# -- subcommands ------------------------------------------------------------


@cli.command("ingest")
@run_options
def ingest(config_path, seed, output_dir, synthetic, debug):
    """Parse feeds and the exploit mapping into a canonical labeled corpus."""
    logger = _setup(debug)
    try:
        cfg = _config(config_path, seed, output_dir, synthetic)
        _log_run(logger, cfg, synthetic)
        tweets: List[TweetRecord] = []
        if synthetic:
            corpus, mapping = generate_synthetic_corpus(cfg.seed, cfg.synthetic)
            tweets = generate_synthetic_tweets(corpus, cfg.seed, cfg.tweet_coverage)
            reports: List[ParseReport] = []
            errors: List[str] = []
        else:
            corpus, mapping, reports, errors = _ingest_files(cfg, logger)
            errors = errors + _report_errors(reports)

        if len(corpus) == 0:
            logger.warning("⚠️ No vulnerability records were ingested; writing an empty corpus")
        writer = _writer(cfg, logger)
        writer.write_text("corpus.jsonl", write_canonical_jsonl(s.record for s in corpus))
        writer.write_text("exploit_mapping.csv", write_exploit_mapping_csv(mapping))
        if tweets:
            writer.write_text(
                "tweets.jsonl", "".join(json.dumps(tweet_to_json(t), sort_keys=True) + "\n" for t in tweets)
            )
        date_range = corpus.date_range
        writer.write_json(
            "ingest_report.json",
            {
                "provenance": corpus.provenance,
                "records": len(corpus),
                "exploited": corpus.positive_count,
                "positive_fraction": corpus.positive_fraction,
                "date_range": [d.isoformat() for d in date_range] if date_range else None,
                "mapped_cves": len(mapping),
                "tweets": len(tweets),
                "sources": [r.to_dict() for r in reports],
                "errors": list(errors),
            },
        )
        writer.write_monthly_counts(monthly_disclosure_counts(corpus))
        if date_range:
            logger.info(
                f"Corpus: {len(corpus)} records, {corpus.positive_fraction:.1%} exploited, "
                f"{date_range[0].isoformat()} to {date_range[1].isoformat()}"
            )
        _finish(logger, errors, writer.written, "Ingest")
    except Exception as e:
        logger.error(f"❌ Error: {str(e)}")
        sys.exit(1)


@cli.command("featurize")
@run_options
@click.option(
    "--split",
    "split_kind",
    type=click.Choice([SplitKind.TEMPORAL.value, SplitKind.RANDOM.value]),
    default=SplitKind.TEMPORAL.value,
    help="Train/test split the vectorizer is fitted on (default: temporal)"
)
@click.option(
    "--mode",
    type=click.Choice([m.value for m in FeatureMode]),
    default=FeatureMode.ALL.value,
    help="Feature set: all NVD features or the summary text only (default: all)"
)
def featurize(config_path, seed, output_dir, synthetic, debug, split_kind, mode):
    """Fit the feature vectorizer on the training side and save it."""
    logger = _setup(debug)
    try:
        cfg = _config(config_path, seed, output_dir, synthetic)
        _log_run(logger, cfg, synthetic)
        corpus, _, errors = _load_corpus(cfg, synthetic, logger)
        train_side, _ = _split_sides(cfg, corpus, SplitKind(split_kind))
        specs = spec_for_mode(FeatureMode(mode), cfg.settings.text_caps)
        vectorizer = fit_vectorizer(train_side.samples, specs)
        logger.info(f"Fitted {vectorizer.n_cols} columns on {len(train_side)} training samples")
        writer = _writer(cfg, logger)
        writer.write_json("vectorizer.json", {**vectorizer.to_dict(), "split": split_kind, "mode": mode})
        _finish(logger, errors, writer.written, "Featurize")
    except Exception as e:
        logger.error(f"❌ Error: {str(e)}")
        sys.exit(1)


def _load_vectorizer(cfg: RunConfig, path: Optional[str]) -> Tuple[FittedVectorizer, SplitKind]:
    vectorizer_path = Path(path) if path else cfg.output_dir / "vectorizer.json"
    if not vectorizer_path.exists():
        raise ConfigError(f"Vectorizer not found at {vectorizer_path}; run `vulnpredict featurize` first")
    data = read_json(vectorizer_path)
    return FittedVectorizer.from_dict(data), SplitKind(data.get("split", SplitKind.TEMPORAL.value))


@cli.command("train")
@run_options
@click.option(
    "--vectorizer",
    "vectorizer_path",
    type=str,
    default=None,
    help="Fitted vectorizer JSON (default: <out>/vectorizer.json)"
)
def train_model(config_path, seed, output_dir, synthetic, debug, vectorizer_path):
    """Train the linear SVM on the training side and save the model."""
    logger = _setup(debug)
    try:
        cfg = _config(config_path, seed, output_dir, synthetic)
        _log_run(logger, cfg, synthetic)
        corpus, _, errors = _load_corpus(cfg, synthetic, logger)
        vectorizer, kind = _load_vectorizer(cfg, vectorizer_path)
        train_side, _ = _split_sides(cfg, corpus, kind)
        model = train(transform(vectorizer, train_side.samples), train_side.labels(), cfg.settings.train)
        logger.info(
            f"Trained on {len(train_side)} samples over {model.epochs} epochs, "
            f"final objective {model.objective_history[-1]:.6f}"
        )
        writer = _writer(cfg, logger)
        writer.write_json("model.json", model.to_dict())
        _finish(logger, errors, writer.written, "Train")
    except Exception as e:
        logger.error(f"❌ Error: {str(e)}")
        sys.exit(1)


@cli.command("evaluate")
@run_options
@click.option(
    "--vectorizer",
    "vectorizer_path",
    type=str,
    default=None,
    help="Fitted vectorizer JSON (default: <out>/vectorizer.json)"
)
@click.option(
    "--model",
    "model_path",
    type=str,
    default=None,
    help="Trained model JSON (default: <out>/model.json)"
)
@click.option(
    "--threshold",
    type=float,
    default=0.0,
    help="Decision threshold for the confusion counts (default: 0)"
)
def evaluate(config_path, seed, output_dir, synthetic, debug, vectorizer_path, model_path, threshold):
    """Score the test side with a saved model and write metrics and the PR curve."""
    logger = _setup(debug)
    try:
        cfg = _config(config_path, seed, output_dir, synthetic)
        _log_run(logger, cfg, synthetic)
        corpus, _, errors = _load_corpus(cfg, synthetic, logger)
        vectorizer, kind = _load_vectorizer(cfg, vectorizer_path)
        model_file = Path(model_path) if model_path else cfg.output_dir / "model.json"
        if not model_file.exists():
            raise ConfigError(f"Model not found at {model_file}; run `vulnpredict train` first")
        model = LinearModel.from_dict(read_json(model_file))

        _, test_side = _split_sides(cfg, corpus, kind)
        labels = test_side.labels()
        scores = decision_scores(model, transform(vectorizer, test_side.samples))
        counts = confusion_from_predictions([1 if s > threshold else -1 for s in scores], labels)
        metrics = compute_metrics(counts)
        writer = _writer(cfg, logger)
        summary: Dict[str, object] = {
            "split": kind.value,
            "threshold": threshold,
            "test_size": len(test_side),
            "test_positive_fraction": test_side.positive_fraction,
            "counts": counts.to_dict(),
            "metrics": metrics.to_dict(),
        }
        if test_side.positive_count:
            curve = pr_curve(scores, labels)
            summary["pr_curve"] = [list(p) for p in curve.points]
            writer.write_csv("evaluation_pr.csv", ["recall", "precision"], curve.to_rows())
            writer.write_svg(
                "evaluation_pr.svg",
                render_line_chart(
                    "Interpolated precision-recall", "Recall", "Precision",
                    [(kind.value, curve.to_rows())], step=True, meta=writer.stamp,
                ),
            )
        else:
            logger.warning("⚠️ Test side has no exploited vulnerabilities; PR curve skipped")
        writer.write_json("evaluation.json", summary)
        logger.info(f"Metrics at threshold {threshold:g}: {metrics.to_dict()}")
        _finish(logger, errors, writer.written, "Evaluate")
    except Exception as e:
        logger.error(f"❌ Error: {str(e)}")
        sys.exit(1)


def _run_experiment(
    experiment_id: str,
    cfg: RunConfig,
    corpus: LabeledCorpus,
    mapping: ExploitMapping,
    tweets: Callable[[], List[TweetRecord]],
) -> ExperimentReport:
    seed, settings = cfg.seed, cfg.settings
    if experiment_id == "1":
        return run_experiment_1(corpus, seed=seed, settings=settings, fail_fast=False)
    if experiment_id == "2":
        return run_experiment_2(corpus, seed=seed, settings=settings, fail_fast=False)
    if experiment_id == "3":
        return run_experiment_3(corpus, mapping, seed=seed, settings=settings, fail_fast=False)
    if experiment_id == "4":
        return run_experiment_4(corpus, tweets(), seed=seed, settings=settings, fail_fast=False)
    return run_feature_ablation(corpus, seed=seed, settings=settings, fail_fast=False)


@cli.command("experiment")
@run_options
@click.option(
    "--experiment",
    "experiment_id",
    type=click.Choice(list(EXPERIMENT_IDS)),
    default=None,
    help="Run a single experiment (default: experiments.run from the config)"
)
def experiment(config_path, seed, output_dir, synthetic, debug, experiment_id):
    """Run experiments and write their reports, tables and plots."""
    logger = _setup(debug)
    try:
        cfg = _config(config_path, seed, output_dir, synthetic)
        _log_run(logger, cfg, synthetic)
        corpus, mapping, errors = _load_corpus(cfg, synthetic, logger)
        writer = _writer(cfg, logger)
        tweet_cache: List[List[TweetRecord]] = []

        def tweets() -> List[TweetRecord]:
            if not tweet_cache:
                loaded, tweet_errors = _load_tweets(cfg, corpus, synthetic)
                errors.extend(tweet_errors)
                tweet_cache.append(loaded)
            return tweet_cache[0]

        for selected in [experiment_id] if experiment_id else list(cfg.experiments):
            prefix = f"exp{selected}" if selected.isdigit() else "feature_ablation"
            try:
                report = _run_experiment(selected, cfg, corpus, mapping, tweets)
            except VulnPredictError as e:
                # the experiment could not start at all; its conditions never ran
                logger.error(f"❌ Experiment {selected} failed: {e}")
                errors.append(f"{prefix}: {e}")
                writer.write_json(f"{prefix}_errors.json", {"errors": [{"condition": None, "message": str(e)}]})
                continue
            writer.generate_report(report)
            errors.extend(f"{prefix} {name}: {message}" for name, message in report.errors)
        _finish(logger, errors, writer.written, "Experiments")
    except Exception as e:
        logger.error(f"❌ Error: {str(e)}")
        sys.exit(1)


@cli.command("histogram")
@run_options
@click.option(
    "--bin-width",
    type=int,
    default=None,
    help="Histogram bin width in days (default: experiments.histogram_bin_days)"
)
def histogram(config_path, seed, output_dir, synthetic, debug, bin_width):
    """Histogram of days between disclosure and the earliest exploit."""
    logger = _setup(debug)
    try:
        cfg = _config(config_path, seed, output_dir, synthetic)
        _log_run(logger, cfg, synthetic)
        corpus, _, errors = _load_corpus(cfg, synthetic, logger)
        result = exploit_lag_histogram(corpus, bin_width or cfg.histogram_bin_days)
        logger.info(
            f"{result.n_lags} dated exploits, median lag {result.median_days:g} days, "
            f"{result.pre_disclosure_fraction:.1%} on or before disclosure"
        )
        writer = _writer(cfg, logger)
        writer.write_lag_histogram(result)
        _finish(logger, errors, writer.written, "Histogram")
    except Exception as e:
        logger.error(f"❌ Error: {str(e)}")
        sys.exit(1)


if __name__ == "__main__":
    cli()
