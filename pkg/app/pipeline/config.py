"""
Experiment configuration.

An experiment is one dataset, a list of recommenders and the trade-off grid
(divergences x balances x lambdas), run for a number of repetitions. Configs
are INI files with one section per concern:

    [dataset]             domain, name, interactions, genres
    [preprocess]          rating_cut, min_profile_size, min_item_interactions, ...
    [recommender.<name>]  algorithm and hyperparameters, one section per recommender
    [postprocess]         divergences, balances, lambdas, n, candidate_size, alpha, ...
    [evaluation]          n, divergence, alpha
    [run]                 repetitions, seed, jobs, output_dir, pool_lambdas

Unset keys keep the methodology defaults of ``get_default_config``.
"""

import configparser
import hashlib
import math
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.config import DEFAULT_JOBS, DEFAULT_SEED, OUTPUT_DIR
from app.core.exceptions import CalibrationError, ConfigurationError
from app.schemas.calibration import (
    Balance,
    DistributionMode,
    DivergenceKind,
    LambdaPolicy,
    SmoothingParams,
    TradeOffSpec,
)
from app.schemas.dataset import Domain, PreprocessConfig
from app.schemas.evaluation import EvaluationConfig
from app.schemas.recommendation import RecommenderConfig

DEFAULT_LAMBDAS = [policy.label for policy in LambdaPolicy.default_grid()]


class DatasetConfig(BaseModel):
    """Where the raw dataset lives and how to parse it."""

    domain: Domain = Field(default="movie", description="movie (MovieLens), song (Taste Profile) or generic CSV")
    name: str = Field(default="dataset", description="Label used in logs and reports")
    interactions: Optional[str] = Field(default=None, description="ratings.csv / triplets / interactions.csv")
    genres: Optional[str] = Field(default=None, description="movies.csv / genre annotations / genres.csv")

    model_config = {"frozen": True}


class ExperimentConfig(BaseModel):
    """Full experiment grid."""

    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    recommenders: list[RecommenderConfig] = Field(..., min_length=1)
    divergences: list[DivergenceKind] = Field(default_factory=lambda: ["kl", "he", "chi"], min_length=1)
    balances: list[Balance] = Field(default_factory=lambda: ["lin", "log"], min_length=1)
    lambdas: list[str] = Field(default_factory=lambda: list(DEFAULT_LAMBDAS), min_length=1)
    repetitions: int = Field(default=3, ge=1, description="Independent splits per experiment")
    n: int = Field(default=10, ge=1, description="Length of the calibrated lists")
    candidate_size: int = Field(default=100, ge=1, description="Candidates per user from each recommender")
    alpha: float = Field(default=0.01, ge=0, le=1, description="Smoothing used during selection")
    alpha_b: float = Field(default=0.01, gt=0, description="Item-bias regulariser of the LOG trade-off")
    sigma: float = Field(default=0.01, gt=0, description="User-bias regulariser of the LOG trade-off")
    distribution_mode: DistributionMode = Field(default="genre")
    log_base: float = Field(default=math.e, gt=0)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    seed: int = Field(default=DEFAULT_SEED)
    jobs: int = Field(default=DEFAULT_JOBS, ge=1)
    output_dir: str = Field(default=str(OUTPUT_DIR))
    pool_lambdas: bool = Field(default=False, description="Decide over lambda-averaged systems")

    model_config = {"frozen": True}

    @field_validator("lambdas")
    @classmethod
    def _check_lambdas(cls, value: list[str]) -> list[str]:
        try:
            labels = [LambdaPolicy.parse(label).label for label in value]
        except CalibrationError as e:
            raise ValueError(str(e)) from e
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate lambda labels in {value}")
        return labels

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        names = [rec.name for rec in self.recommenders]
        if len(set(names)) != len(names):
            raise ValueError(f"recommender names must be unique, got {names}")
        if self.evaluation.n > self.n:
            raise ValueError(f"evaluation depth {self.evaluation.n} exceeds list length {self.n}")
        if self.log_base == 1:
            raise ValueError("log_base must not be 1")
        return self

    @property
    def lambda_policies(self) -> list[LambdaPolicy]:
        return [LambdaPolicy.parse(label) for label in self.lambdas]

    @property
    def combinations(self) -> int:
        """Evaluated systems per repetition."""
        return len(self.recommenders) * len(self.divergences) * len(self.balances) * len(self.lambdas)

    def trade_off(self, divergence: DivergenceKind, balance: Balance, lambda_label: str) -> TradeOffSpec:
        return TradeOffSpec(
            balance=balance,
            divergence=divergence,
            lambda_policy=LambdaPolicy.parse(lambda_label),
            smoothing=SmoothingParams(self.alpha),
            distribution_mode=self.distribution_mode,
            log_base=self.log_base,
        )

    @property
    def config_hash(self) -> str:
        """Stable digest of every setting that affects outputs."""
        payload = self.model_dump_json(exclude={"jobs", "output_dir"})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def with_overrides(
        self,
        seed: Optional[int] = None,
        jobs: Optional[int] = None,
        output_dir: Optional[Path] = None,
    ) -> "ExperimentConfig":
        """Apply CLI flags on top of the file values."""
        update: dict[str, Any] = {}
        if seed is not None:
            update["seed"] = seed
        if jobs is not None:
            update["jobs"] = jobs
        if output_dir is not None:
            update["output_dir"] = str(output_dir)
        return _validated({**self.model_dump(), **update})

    def with_external(self, predictions: Path, name: str = "External") -> "ExperimentConfig":
        """Replace the recommenders with one externally computed predictions file."""
        external = {
            "name": name,
            "algorithm": "external",
            "predictions_path": str(predictions),
            "candidate_size": self.candidate_size,
        }
        return _validated({**self.model_dump(), "recommenders": [external]})

    @property
    def summary(self) -> str:
        """Human-readable configuration summary."""
        return f"""
Experiment Configuration ({self.dataset.name}, {self.dataset.domain}):
  Recommenders: {', '.join(rec.name for rec in self.recommenders)}
  Divergences: {', '.join(self.divergences)}
  Balances: {', '.join(self.balances)}
  Lambdas: {len(self.lambdas)} ({', '.join(self.lambdas)})
  Repetitions: {self.repetitions}
  Systems per repetition: {self.combinations}
  List length: {self.n} from {self.candidate_size} candidates
  Evaluation: depth {self.evaluation.n}, {self.evaluation.eval_divergence.upper()} miscalibration
  Seed: {self.seed} | Jobs: {self.jobs}
"""


def _validated(data: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigurationError(
            f"invalid configuration value for {key}",
            details={"key": key, "error": first["msg"]},
            cause=e,
        )


# ============== Per-domain Presets ==============
def default_recommenders(domain: Domain, candidate_size: int = 100) -> list[RecommenderConfig]:
    """Built-in recommenders with the tuned settings of each domain."""
    if domain == "song":
        svd = {"factors": 150, "epochs": 30, "learn_rate": 0.001, "reg": 0.05}
    else:
        svd = {"factors": 50, "epochs": 50, "learn_rate": 0.005, "reg": 0.01}
    return [
        RecommenderConfig(
            name="ItemKNN", algorithm="item_knn", k_neighbors=30, similarity="pearson", candidate_size=candidate_size
        ),
        RecommenderConfig(name="SlopeOne", algorithm="slope_one", candidate_size=candidate_size),
        RecommenderConfig(name="SVD", algorithm="funk_svd", candidate_size=candidate_size, **svd),
        RecommenderConfig(
            name="UserKNN", algorithm="user_knn", k_neighbors=30, similarity="msd", candidate_size=candidate_size
        ),
    ]


def get_default_config(domain: Domain = "movie") -> ExperimentConfig:
    """Methodology defaults for a domain; dataset paths must still be supplied."""
    return ExperimentConfig(
        dataset=DatasetConfig(domain=domain, name=domain),
        preprocess=PreprocessConfig(),
        recommenders=default_recommenders(domain),
    )


# ============== INI Loading ==============
_LIST_KEYS = {"divergences", "balances", "lambdas"}
_RUN_KEYS = {"repetitions", "seed", "jobs", "output_dir", "pool_lambdas"}
_POSTPROCESS_KEYS = {
    "divergences", "balances", "lambdas", "n", "candidate_size",
    "alpha", "alpha_b", "sigma", "distribution_mode", "log_base",
}


def _split_list(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _section_values(parser: configparser.ConfigParser, section: str, allowed: Optional[set[str]] = None) -> dict:
    if not parser.has_section(section):
        return {}
    values = dict(parser.items(section))
    if allowed is not None:
        unknown = set(values) - allowed
        if unknown:
            raise ConfigurationError(
                f"unknown keys in [{section}]",
                details={"section": section, "keys": sorted(unknown)},
            )
    return values


def _parse_bool(key: str, value: str) -> bool:
    text = value.strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"invalid configuration value for {key}", details={"key": key, "value": value})


def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Parse an INI experiment file on top of the domain defaults.

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigurationError: On unknown sections/keys or invalid values
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigurationError("config file cannot be parsed", details={"file": str(path)}, cause=e)

    for section in parser.sections():
        if section not in {"dataset", "preprocess", "postprocess", "evaluation", "run"} and not section.startswith(
            "recommender."
        ):
            raise ConfigurationError(f"unknown section [{section}]", details={"file": str(path)})

    dataset = _section_values(parser, "dataset", set(DatasetConfig.model_fields))
    domain = dataset.get("domain", "movie")
    if domain not in ("movie", "song", "generic"):
        raise ConfigurationError("invalid configuration value for dataset.domain", details={"value": domain})
    data = get_default_config(domain).model_dump()  # type: ignore[arg-type]
    data["dataset"] = {**data["dataset"], **dataset}
    data["preprocess"] = {
        **data["preprocess"],
        **_section_values(parser, "preprocess", set(PreprocessConfig.model_fields)),
    }

    postprocess = _section_values(parser, "postprocess", _POSTPROCESS_KEYS)
    for key, value in postprocess.items():
        data[key] = _split_list(value) if key in _LIST_KEYS else value
    if str(data.get("log_base", "")).strip().lower() == "e":
        data["log_base"] = math.e

    run = _section_values(parser, "run", _RUN_KEYS)
    if "pool_lambdas" in run:
        run["pool_lambdas"] = _parse_bool("run.pool_lambdas", run["pool_lambdas"])
    data.update(run)

    evaluation = _section_values(parser, "evaluation", {"n", "divergence", "alpha", "distribution_mode"})
    if "divergence" in evaluation:
        evaluation["eval_divergence"] = evaluation.pop("divergence")
    data["evaluation"] = {
        **data["evaluation"],
        "n": data.get("n", data["evaluation"]["n"]),
        "alpha": data.get("alpha", data["evaluation"]["alpha"]),
        "distribution_mode": data.get("distribution_mode", data["evaluation"]["distribution_mode"]),
        **evaluation,
    }

    sections = [s for s in parser.sections() if s.startswith("recommender.")]
    if sections:
        recommenders = []
        for section in sections:
            values = _section_values(parser, section, set(RecommenderConfig.model_fields) - {"name"})
            if "rating_bounds" in values:
                values["rating_bounds"] = _split_list(values["rating_bounds"])
            values.setdefault("candidate_size", data["candidate_size"])
            recommenders.append({"name": section.split(".", 1)[1], **values})
        data["recommenders"] = recommenders
    elif "candidate_size" in postprocess:
        data["recommenders"] = [{**rec, "candidate_size": data["candidate_size"]} for rec in data["recommenders"]]

    return _validated(data)
