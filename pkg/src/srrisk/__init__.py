"""Statistically robust risk estimation and training for small numpy networks."""

from .data import Dataset, load_mnist, subset, synth_blobs
from .metrics import LossSpec
from .nn import Network, init_network, load_network, save_network
from .perturb import PerturbationSpec
from .risk import (
    MetricSpec,
    PgdConfig,
    RiskEstimate,
    adversarial_risk,
    brute_force_adversarial_risk,
    empirical_risk,
    pgd_attack,
    pointwise_violation_prob,
    srr_estimate,
    tsrm_estimate,
)
from .train import TrainConfig, generalization_gap, train

__version__ = "0.1.0"
