"""Sampling-based uncertainty baselines: deep ensembles and Monte-Carlo dropout."""

from stormcast_edl.baselines.ensemble import DeepEnsemble, ensemble_predict
from stormcast_edl.baselines.mc_dropout import DEFAULT_PASSES, mc_dropout_predict
from stormcast_edl.baselines.models import EnsembleManifest, EnsembleSpec, SampleUQ

__all__ = [
    "DEFAULT_PASSES",
    "DeepEnsemble",
    "EnsembleManifest",
    "EnsembleSpec",
    "SampleUQ",
    "ensemble_predict",
    "mc_dropout_predict",
]
