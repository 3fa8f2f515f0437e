"""Run configuration loaded from a YAML file.

All randomness flows from ``seed``; the CLI may override ``seed`` and the
output directory. Unknown keys are rejected so typos do not silently fall
back to defaults.
"""

from dataclasses import asdict, dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from ..corpus.synthetic import SyntheticSpec
from ..errors import ConfigError
from ..eval.experiments import DEFAULT_RATIOS, ExperimentSettings
from ..features.specs import DEFAULT_MAX_TERMS, FeatureMode
from ..model.svm import ClassWeighting, TrainConfig
from ..utils.json_utils import config_hash

EXPERIMENT_IDS = ("1", "2", "3", "4", "ablation")


@dataclass(frozen=True)
class PathsConfig:
    nvd_feeds: Tuple[str, ...] = ()
    exploit_mapping: Optional[str] = None
    edb_index: Optional[str] = None
    cwe_catalog: Optional[str] = None
    tweet_corpus: Optional[str] = None
    canonical_corpus: Optional[str] = None
    output_dir: str = "out"

    def inputs(self) -> Dict[str, str]:
        found = {f"nvd_feeds[{i}]": p for i, p in enumerate(self.nvd_feeds)}
        for name in ("exploit_mapping", "edb_index", "cwe_catalog", "tweet_corpus", "canonical_corpus"):
            value = getattr(self, name)
            if value:
                found[name] = value
        return found


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    tweet_coverage: float = 0.3
    experiments: Tuple[str, ...] = ("1", "2", "3", "4")
    settings: ExperimentSettings = field(default_factory=ExperimentSettings)
    histogram_bin_days: int = 7

    @property
    def output_dir(self) -> Path:
        return Path(self.paths.output_dir)

    @property
    def canonical_corpus_path(self) -> Path:
        return Path(self.paths.canonical_corpus) if self.paths.canonical_corpus else self.output_dir / "corpus.jsonl"

    @property
    def mapping_path(self) -> Path:
        return Path(self.paths.exploit_mapping) if self.paths.exploit_mapping else self.output_dir / "exploit_mapping.csv"

    def to_dict(self) -> Dict[str, Any]:
        synthetic = asdict(self.synthetic)
        synthetic["date_range"] = [d.isoformat() for d in self.synthetic.date_range]
        return {
            "seed": self.seed,
            "paths": {**asdict(self.paths), "nvd_feeds": list(self.paths.nvd_feeds)},
            "synthetic": synthetic,
            "tweet_coverage": self.tweet_coverage,
            "experiments": list(self.experiments),
            "settings": self.settings.to_dict(),
            "histogram_bin_days": self.histogram_bin_days,
        }

    @property
    def config_hash(self) -> str:
        return config_hash(self.to_dict())

    def validate_paths(self) -> None:
        missing = [f"{name}={path}" for name, path in self.paths.inputs().items() if not Path(path).exists()]
        if missing:
            raise ConfigError(f"Configured input paths do not exist: {', '.join(missing)}")


def _section(data: Mapping[str, Any], name: str, allowed: Tuple[str, ...]) -> Dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, Mapping):
        raise ConfigError(f"Section '{name}' must be a mapping")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown keys in '{name}': {', '.join(unknown)}")
    return dict(section)


def _date(value: Any, key: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"{key} must be an ISO date, got {value!r}") from None


def _number(value: Any, key: str, kind=float):
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    try:
        # PyYAML reads "1e-4" as a string
        return kind(float(value)) if kind is float else kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def parse_run_config(data: Mapping[str, Any]) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("Config file must contain a mapping at the top level")
    unknown = sorted(set(data) - {"seed", "paths", "synthetic", "experiments", "features", "model"})
    if unknown:
        raise ConfigError(f"Unknown top-level config keys: {', '.join(unknown)}")
    if "seed" not in data:
        raise ConfigError("Config must set an explicit integer 'seed'")
    seed = data["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    p = _section(data, "paths", tuple(PathsConfig.__dataclass_fields__))
    feeds = p.get("nvd_feeds") or ()
    if isinstance(feeds, str):
        feeds = (feeds,)
    paths = PathsConfig(
        nvd_feeds=tuple(str(f) for f in feeds),
        exploit_mapping=p.get("exploit_mapping"),
        edb_index=p.get("edb_index"),
        cwe_catalog=p.get("cwe_catalog"),
        tweet_corpus=p.get("tweet_corpus"),
        canonical_corpus=p.get("canonical_corpus"),
        output_dir=str(p.get("output_dir") or "out"),
    )

    s = _section(
        data,
        "synthetic",
        (
            "n_samples", "positive_fraction", "n_vocab", "drift_rate", "start", "end", "leak_strength",
            "summary_length", "signal_window", "signal_rate", "noise_rate", "silent_fraction", "tweet_coverage",
        ),
    )
    defaults = SyntheticSpec()
    synthetic = SyntheticSpec(
        n_samples=_number(s.get("n_samples", defaults.n_samples), "synthetic.n_samples", int),
        positive_fraction=_number(s.get("positive_fraction", defaults.positive_fraction), "synthetic.positive_fraction"),
        n_vocab=_number(s.get("n_vocab", defaults.n_vocab), "synthetic.n_vocab", int),
        drift_rate=_number(s.get("drift_rate", defaults.drift_rate), "synthetic.drift_rate"),
        date_range=(
            _date(s.get("start", defaults.date_range[0]), "synthetic.start"),
            _date(s.get("end", defaults.date_range[1]), "synthetic.end"),
        ),
        leak_strength=_number(s.get("leak_strength", defaults.leak_strength), "synthetic.leak_strength"),
        summary_length=_number(s.get("summary_length", defaults.summary_length), "synthetic.summary_length", int),
        signal_window=_number(s.get("signal_window", defaults.signal_window), "synthetic.signal_window", int),
        signal_rate=_number(s.get("signal_rate", defaults.signal_rate), "synthetic.signal_rate"),
        noise_rate=_number(s.get("noise_rate", defaults.noise_rate), "synthetic.noise_rate"),
        silent_fraction=_number(s.get("silent_fraction", defaults.silent_fraction), "synthetic.silent_fraction"),
    )

    e = _section(
        data,
        "experiments",
        (
            "run", "ratios", "feature_modes", "test_fraction", "cutoff", "initial_train_months",
            "step_months", "histogram_bin_days", "separation_bins",
        ),
    )
    run = tuple(str(x) for x in (e.get("run") or ("1", "2", "3", "4")))
    bad = [x for x in run if x not in EXPERIMENT_IDS]
    if bad:
        raise ConfigError(f"Unknown experiments {bad}; choose from {', '.join(EXPERIMENT_IDS)}")
    try:
        modes = tuple(FeatureMode(m) for m in (e.get("feature_modes") or ("all", "summary_only")))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    ratios = tuple(_number(r, "experiments.ratios") for r in (e.get("ratios") or DEFAULT_RATIOS))
    if not all(0.0 < r < 1.0 for r in ratios):
        raise ConfigError("experiments.ratios must lie strictly between 0 and 1")

    f = _section(data, "features", ("max_terms", "high_friend_threshold", "high_follower_threshold"))
    m = _section(data, "model", ("lambda", "epochs", "class_weighting"))
    try:
        train_config = TrainConfig(
            lam=_number(m.get("lambda", 1e-4), "model.lambda"),
            epochs=_number(m.get("epochs", 20), "model.epochs", int),
            seed=seed,
            class_weighting=ClassWeighting(str(m.get("class_weighting", "none")).lower()),
        )
        settings = ExperimentSettings(
            ratios=ratios,
            feature_modes=modes,
            test_fraction=_number(e.get("test_fraction", 0.18), "experiments.test_fraction"),
            cutoff=_date(e.get("cutoff", "2015-01-01"), "experiments.cutoff"),
            initial_train_months=_number(e.get("initial_train_months", 12), "experiments.initial_train_months", int),
            step_months=_number(e.get("step_months", 6), "experiments.step_months", int),
            text_caps=_number(f.get("max_terms", DEFAULT_MAX_TERMS), "features.max_terms", int),
            train=train_config,
            high_friend_threshold=_number(f.get("high_friend_threshold", 1000), "features.high_friend_threshold", int),
            high_follower_threshold=_number(
                f.get("high_follower_threshold", 1000), "features.high_follower_threshold", int
            ),
            separation_bins=_number(e.get("separation_bins", 20), "experiments.separation_bins", int),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None

    return RunConfig(
        seed=seed,
        paths=paths,
        synthetic=synthetic,
        tweet_coverage=_number(s.get("tweet_coverage", 0.3), "synthetic.tweet_coverage"),
        experiments=run,
        settings=settings,
        histogram_bin_days=_number(e.get("histogram_bin_days", 7), "experiments.histogram_bin_days", int),
    )


def load_run_config(
    path: Optional[str] = None,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> RunConfig:
    """Read ``path`` (or start from defaults) and apply CLI overrides."""
    if path is None:
        cfg = RunConfig()
    else:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {path} is not valid YAML: {e}") from e
        cfg = parse_run_config(data)
    if seed is not None:
        settings = replace(cfg.settings, train=replace(cfg.settings.train, seed=seed))
        cfg = replace(cfg, seed=seed, settings=settings)
    if output_dir is not None:
        cfg = replace(cfg, paths=replace(cfg.paths, output_dir=output_dir))
    return cfg
