"""Uniform prediction interface over the evidential model and the two baselines."""

import logging
from pathlib import Path
from typing import Any, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from stormcast_edl.baselines import DeepEnsemble, SampleUQ, mc_dropout_predict
from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation import GaussianPredictive, StudentTPredictive
from stormcast_edl.evidential import decompose
from stormcast_edl.harness.models import ExperimentConfig
from stormcast_edl.harness.training import ENSEMBLE_DIR, MODEL_FILE
from stormcast_edl.model import NowcastModel, load_checkpoint

logger = logging.getLogger(__name__)

Predictive = Union[GaussianPredictive, StudentTPredictive]


class Prediction(BaseModel):
    """Point forecast, uncertainty map and predictive distribution for a batch."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    point: np.ndarray
    uncertainty: np.ndarray
    predictive: Predictive


def _concat(parts: list[Prediction]) -> Prediction:
    first = parts[0].predictive
    if isinstance(first, StudentTPredictive):
        predictive = StudentTPredictive(
            loc=np.concatenate([p.predictive.loc for p in parts]),
            scale2=np.concatenate([p.predictive.scale2 for p in parts]),
            dof=np.concatenate([p.predictive.dof for p in parts]),
        )
    else:
        predictive = GaussianPredictive(
            mean=np.concatenate([p.predictive.mean for p in parts]),
            variance=np.concatenate([p.predictive.variance for p in parts]),
        )
    return Prediction(
        point=np.concatenate([p.point for p in parts]),
        uncertainty=np.concatenate([p.uncertainty for p in parts]),
        predictive=predictive,
    )


class Predictor:
    """Base class: batched prediction and a single-sample runner for profiling."""

    passes: int = 1
    uncertainty_kind: str = "variance"

    def predict_batch(self, x: np.ndarray) -> Prediction:
        raise NotImplementedError

    def run(self, x: Any) -> Any:
        raise NotImplementedError

    def parameter_count(self) -> int:
        raise NotImplementedError

    def predict(self, x: np.ndarray, batch_size: int = 8) -> Prediction:
        if len(x) == 0:
            raise EvaluationError("nothing to predict")
        batches = [self.predict_batch(x[i : i + batch_size]) for i in range(0, len(x), batch_size)]
        return _concat(batches)


class EvidentialPredictor(Predictor):
    def __init__(self, model: NowcastModel, uncertainty_kind: str = "epistemic"):
        self.model = model
        self.uncertainty_kind = uncertainty_kind

    def predict_batch(self, x: np.ndarray) -> Prediction:
        params = self.model.evidential_params(x)
        field = decompose(params)
        return Prediction(
            point=field.prediction.numpy(),
            uncertainty=field.select(self.uncertainty_kind),
            predictive=StudentTPredictive.from_params(params),
        )

    def run(self, x: Any) -> Any:
        return self.model.evidential_params(x)

    def parameter_count(self) -> int:
        return self.model.parameter_count()


def _sample_prediction(uq: SampleUQ) -> Prediction:
    return Prediction(point=uq.mean, uncertainty=uq.variance, predictive=uq.predictive())


class EnsemblePredictor(Predictor):
    def __init__(self, ensemble: DeepEnsemble):
        self.ensemble = ensemble
        self.passes = len(ensemble.members)

    def predict_batch(self, x: np.ndarray) -> Prediction:
        return _sample_prediction(self.ensemble.predict(x, keep_members=False))

    def run(self, x: Any) -> Any:
        return self.ensemble.predict(x, keep_members=False)

    def parameter_count(self) -> int:
        return self.ensemble.parameter_count()


class MCDropoutPredictor(Predictor):
    def __init__(self, model: NowcastModel, n_passes: int = 10, seed: int = 0):
        self.model = model
        self.passes = n_passes
        self.seed = seed
        self._batches = 0

    def predict_batch(self, x: np.ndarray) -> Prediction:
        seed = [self.seed, self._batches]
        self._batches += 1
        uq = mc_dropout_predict(self.model, x, self.passes, seed=seed, keep_members=False)
        return _sample_prediction(uq)

    def predict(self, x: np.ndarray, batch_size: int = 8) -> Prediction:
        self._batches = 0
        return super().predict(x, batch_size)

    def run(self, x: Any) -> Any:
        return mc_dropout_predict(self.model, x, self.passes, seed=self.seed, keep_members=False)

    def parameter_count(self) -> int:
        return self.model.parameter_count()


def load_predictor(config: ExperimentConfig, directory: Union[str, Path]) -> Predictor:
    """Rebuild the trained variant found in ``directory``."""
    directory = Path(directory)
    if config.variant == "ensemble":
        return EnsemblePredictor(DeepEnsemble.load(directory / ENSEMBLE_DIR))
    model = load_checkpoint(directory / MODEL_FILE).to_model()
    if config.variant in ("edl", "p-edl"):
        return EvidentialPredictor(model, config.evaluation.uncertainty_kind)
    return MCDropoutPredictor(model, config.evaluation.n_passes, config.evaluation.seed)
