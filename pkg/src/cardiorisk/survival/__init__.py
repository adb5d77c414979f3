"""Survival learning: boosted AFT, discrete-time MLP, losses and normalization."""
from .aft import AftConfig, BoostedAftModel, aft_nll, aft_survival_curve, train_boosted_aft
from .grid import DiscreteSurvivalDistribution, SurvivalCurve, TimeGrid, risk_within
from .losses import LossConfig, deephit_focal_nll, rank_loss, softmax_scores
from .mlp import MlpSpec, MlpSurvivalModel, TrainParams, train_mlp_deephit
from .normalize import QuantileNormalizer
from .persist import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "AftConfig",
    "BoostedAftModel",
    "aft_nll",
    "aft_survival_curve",
    "train_boosted_aft",
    "DiscreteSurvivalDistribution",
    "SurvivalCurve",
    "TimeGrid",
    "risk_within",
    "LossConfig",
    "deephit_focal_nll",
    "rank_loss",
    "softmax_scores",
    "MlpSpec",
    "MlpSurvivalModel",
    "TrainParams",
    "train_mlp_deephit",
    "QuantileNormalizer",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
]
