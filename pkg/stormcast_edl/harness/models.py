"""Data models for experiment configuration and training records."""

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from stormcast_edl.baselines.models import EnsembleSpec
from stormcast_edl.config import config as env_config
from stormcast_edl.data.models import SyntheticStormConfig
from stormcast_edl.evidential.models import LambdaSchedule
from stormcast_edl.model.models import ModelConfig

Variant = Literal["edl", "p-edl", "ensemble", "mc-dropout"]
UncertaintyKind = Literal["epistemic", "aleatoric", "total"]

VARIANTS: tuple[str, ...] = ("edl", "p-edl", "ensemble", "mc-dropout")
EVIDENTIAL_VARIANTS = ("edl", "p-edl")


class DataSection(BaseModel):
    """Where frames come from and how they are split and windowed."""

    synthetic: Optional[SyntheticStormConfig] = Field(default_factory=SyntheticStormConfig)
    raw_path: Optional[str] = Field(
        None, description="Raw frame file to ingest instead of generating"
    )
    split_fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    split_seed: int = 0
    stride: int = Field(1, gt=0, description="Window stride for training and validation")
    eval_stride: int = Field(12, gt=0, description="Window stride for the test split")

    @model_validator(mode="after")
    def check_source(self) -> "DataSection":
        if self.raw_path is not None:
            self.synthetic = None
        if self.synthetic is None and self.raw_path is None:
            raise ValueError("data needs either a synthetic generator section or a raw_path")
        return self


class TrainingSection(BaseModel):
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(8, gt=0)
    learning_rate: float = Field(1e-3, gt=0.0)
    grad_clip: float = Field(1.0, ge=0.0, description="Global gradient-norm bound; 0 disables")
    seed: int = Field(default_factory=lambda: env_config.DEFAULT_SEED)
    lambda_max: float = Field(0.01, ge=0.0, description="Evidence regularizer weight")
    lambda_mode: Literal["constant", "linear-ramp"] = "linear-ramp"
    lambda_ramp_epochs: float = Field(1.0, gt=0.0, description="Epochs over which lambda ramps up")
    patience: int = Field(5, ge=0, description="Early-stopping patience in epochs; 0 disables")
    pretrain_fraction: float = Field(
        0.5, ge=0.0, le=1.0, description="Share of epochs P-EDL spends on MSE pretraining"
    )

    def schedule(self, steps_per_epoch: int) -> LambdaSchedule:
        ramp = max(1, int(round(self.lambda_ramp_epochs * steps_per_epoch)))
        return LambdaSchedule(lambda_max=self.lambda_max, ramp_steps=ramp, mode=self.lambda_mode)

    def pretrain_split(self) -> tuple[int, int]:
        """(MSE pretraining epochs, evidential fine-tuning epochs) for P-EDL."""
        finetune = int(round((1.0 - self.pretrain_fraction) * self.epochs))
        return self.epochs - finetune, finetune


class EvaluationSection(BaseModel):
    n_passes: int = Field(10, ge=2, description="MC-dropout inference passes")
    uncertainty_kind: UncertaintyKind = "epistemic"
    normalize_correlation: bool = True
    reliability_max_points: int = Field(100_000, gt=0)
    map_leads: list[int] = Field(default_factory=lambda: [2, 4, 6, 8])
    profile_repeats: Optional[int] = Field(None, ge=1)
    profile_warmup: Optional[int] = Field(None, ge=0)
    seed: int = 0
    ood_speed_scale: float = Field(
        3.0, gt=0.0, description="Advection speed factor of the shifted regime"
    )


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce one training and evaluation run."""

    name: str = "experiment"
    variant: Variant = "edl"
    data: DataSection = Field(default_factory=DataSection)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingSection = Field(default_factory=TrainingSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    ensemble: EnsembleSpec = Field(default_factory=EnsembleSpec)
    output_dir: str = Field(default_factory=lambda: env_config.OUTPUT_DIR)

    @model_validator(mode="after")
    def check_lead_maps(self) -> "ExperimentConfig":
        bad = [lead for lead in self.evaluation.map_leads if not 1 <= lead <= self.model.out_steps]
        if bad:
            raise ValueError(f"map_leads {bad} fall outside 1..{self.model.out_steps}")
        return self

    @property
    def is_evidential(self) -> bool:
        return self.variant in EVIDENTIAL_VARIANTS

    def variant_model(self) -> ModelConfig:
        """Model configuration with the head this variant trains."""
        return self.model.with_head("evidential" if self.is_evidential else "deterministic")


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_metric: float
    lam: float = 0.0
    steps: int


class TrainingRecord(BaseModel):
    """Loss curve and stopping outcome of one model's training."""

    stage: str
    objective: Literal["mse", "evidential"]
    seed: int
    epochs: list[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False
    steps: int = 0
    rng_state: Optional[dict[str, Any]] = Field(
        None, description="Shuffling and dropout generator state after the last step"
    )

    @property
    def final_loss(self) -> Optional[float]:
        return self.epochs[-1].train_loss if self.epochs else None


class TrainOutcome(BaseModel):
    variant: Variant
    run_dir: str
    checkpoints: list[str]
    records: list[TrainingRecord]


class ShiftProbe(BaseModel):
    """Mean epistemic uncertainty in and out of the training distribution."""

    speed_scale: float
    in_distribution: float
    shifted: float
    n_samples: int

    @property
    def ratio(self) -> float:
        return self.shifted / self.in_distribution if self.in_distribution > 0.0 else float("inf")


class AcceptanceCheck(BaseModel):
    """Outcome of one directional criterion measured over several training seeds."""

    name: str
    passed: bool
    value: float = Field(..., description="Measured statistic: a share, ratio or count")
    threshold: float
    detail: str = ""


class AcceptanceSummary(BaseModel):
    seeds: list[int]
    checks: list[AcceptanceCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> AcceptanceCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(f"No acceptance check named {name!r}")
