"""Natural, corruption and PGD-adversarial training, plus generalization gaps."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, NumericError
from .metrics import CROSS_ENTROPY, LossSpec
from .nn import Network, SgdState, backward_params, sgd_step
from .perturb import DIRAC, PerturbationSpec, sample_points
from .risk import MetricSpec, PgdConfig, RiskEstimate, _attack
from .rng import Purpose, branch, point_streams

log = logging.getLogger(__name__)

NATURAL = "natural"
CORRUPTION = "corruption"
PGD = "pgd"


@dataclass(frozen=True)
class TrainConfig:
    regime: str = NATURAL
    perturbation: PerturbationSpec = None
    pgd: PgdConfig = None
    epochs: int = 10
    batch_size: int = 128
    lr: float = 0.1
    momentum: float = 0.9
    seed: int = 0
    loss: LossSpec = LossSpec(CROSS_ENTROPY)
    eval_every: int = 0
    eval_metrics: tuple = ()
    dtype: str = "float64"

    def __post_init__(self):
        if self.regime not in (NATURAL, CORRUPTION, PGD):
            raise ConfigurationError(f"unknown training regime {self.regime!r}")
        if self.regime == CORRUPTION and self.perturbation is None:
            raise ConfigurationError("corruption training needs a perturbation")
        if self.regime == PGD and self.pgd is None:
            raise ConfigurationError("PGD training needs a PgdConfig")
        if not self.loss.differentiable:
            raise ConfigurationError(f"cannot train on non-differentiable loss {self.loss.kind}")
        if int(self.epochs) < 1 or int(self.batch_size) < 1:
            raise ConfigurationError("epochs and batch_size must be positive")
        if int(self.eval_every) < 0:
            raise ConfigurationError("eval_every must be non-negative")
        if self.dtype not in ("float64", "float32"):
            raise ConfigurationError(f"dtype must be float64 or float32, got {self.dtype}")
        SgdState(self.lr, self.momentum)

    def describe(self) -> dict:
        out = {"regime": self.regime, "epochs": self.epochs, "batch_size": self.batch_size, "lr": self.lr,
               "momentum": self.momentum, "seed": self.seed, "train_loss": str(self.loss), "dtype": self.dtype}
        if self.regime == CORRUPTION:
            out["train_perturbation"] = str(self.perturbation)
        if self.regime == PGD:
            out.update({"train_" + k: v for k, v in self.pgd.describe().items()})
        return out

    @classmethod
    def from_dict(cls, d: dict, class_count: int = 10) -> "TrainConfig":
        """Inverse of :meth:`describe`."""
        extra = {}
        if d["regime"] == CORRUPTION:
            extra["perturbation"] = PerturbationSpec.parse(d["train_perturbation"])
        if d["regime"] == PGD:
            extra["pgd"] = PgdConfig.from_dict(d, "train_pgd_")
        return cls(d["regime"], epochs=int(d["epochs"]), batch_size=int(d["batch_size"]), lr=float(d["lr"]),
                   momentum=float(d["momentum"]), seed=int(d["seed"]), loss=LossSpec.parse(d["train_loss"], class_count),
                   dtype=d["dtype"], **extra)


@dataclass
class Snapshot:
    epoch: int
    train: dict
    test: dict
    wall_time: float


@dataclass
class TrainHistory:
    config: TrainConfig
    snapshots: list = field(default_factory=list)
    epoch_losses: list = field(default_factory=list)
    draw_counts: list = field(default_factory=list)
    wall_time: float = 0.0

    def rows(self) -> list:
        out = []
        for snap in self.snapshots:
            for split, metrics in (("train", snap.train), ("test", snap.test)):
                for name, est in metrics.items():
                    out.append({"epoch": snap.epoch, "metric": name, "split": split, "value": est.mean,
                                "std_error": est.std_error, "n_terms": est.n_terms,
                                "wall_time": round(snap.wall_time, 6)})
        return out


def _perturbed_batch(config: TrainConfig, x, idx, epoch):
    streams = point_streams(config.seed, Purpose.TRAIN_PERTURB, idx, epoch)
    return sample_points(config.perturbation, x, streams, 1)[:, 0, :]


def _pgd_batch(net, config: TrainConfig, x, y, idx, epoch):
    cfg = config.pgd
    delta0 = None
    if cfg.random_start and cfg.eps > 0:
        streams = point_streams(config.seed, Purpose.PGD_TRAIN_START, idx, epoch)
        delta0 = np.stack([g.uniform(-cfg.eps, cfg.eps, size=x.shape[1]) for g in streams])
    return _attack(net, x.astype(np.float64), y, cfg, config.loss, delta0, None)


def snapshot(net: Network, train_data: Dataset, test_data: Dataset, metrics, seed: int, epoch: int) -> Snapshot:
    """Evaluate ``metrics`` on both splits with the evaluation-only stream for this epoch."""
    t0 = time.perf_counter()
    stream = (Purpose.SNAPSHOT, epoch)
    tr = {m.name: m.evaluate(net, train_data, seed, stream) for m in metrics}
    te = {m.name: m.evaluate(net, test_data, seed, stream) for m in metrics} if test_data is not None else {}
    return Snapshot(epoch, tr, te, time.perf_counter() - t0)


def train(net: Network, train_data: Dataset, test_data: Dataset, config: TrainConfig):
    """Minibatch momentum SGD under the configured regime; returns a new network and its history.

    Corruption training draws one fresh perturbation per point per epoch;
    PGD training replaces each point by its attack image under the training loss.
    """
    n = len(train_data)
    if config.batch_size > n:
        raise ConfigurationError(f"batch size {config.batch_size} exceeds dataset size {n}")
    if train_data.dim != net.layer_sizes[0]:
        raise ConfigurationError(f"data dimension {train_data.dim} != network input {net.layer_sizes[0]}")
    net = net.astype(np.dtype(config.dtype))
    state = SgdState(config.lr, config.momentum)
    history = TrainHistory(config)
    xs_all, ys_all = train_data.inputs, train_data.labels
    t_start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = branch(config.seed, Purpose.TRAIN_SHUFFLE, epoch).permutation(n)
        draws = np.zeros(n, dtype=np.int64)
        total, seen = 0.0, 0
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            xb, yb = xs_all[idx], ys_all[idx]
            if config.regime == CORRUPTION:
                xb = _perturbed_batch(config, xb, idx, epoch)
                np.add.at(draws, idx, 1)
            elif config.regime == PGD:
                xb = _pgd_batch(net, config, xb, yb, idx, epoch)
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, grads = backward_params(net, xb, yb, config.loss)
                if not np.isfinite(loss):
                    raise NumericError("non-finite training loss")
                sgd_step(net, grads, state)
            except NumericError as exc:
                raise NumericError(f"{exc} at epoch {epoch}, batch {b}") from exc
            total += loss * len(idx)
            seen += len(idx)
        history.epoch_losses.append(total / seen)
        history.draw_counts.append(draws)
        log.info("epoch %d/%d  train loss %.5f", epoch, config.epochs, total / seen)
        if config.eval_metrics and config.eval_every and (epoch % config.eval_every == 0 or epoch == config.epochs):
            history.snapshots.append(snapshot(net, train_data, test_data, config.eval_metrics, config.seed, epoch))
    history.wall_time = time.perf_counter() - t_start
    return net, history


def _comparable(spec: dict) -> dict:
    return {k: v for k, v in spec.items() if k not in ("n_points", "split")}


def gap_between(train_est: RiskEstimate, test_est: RiskEstimate) -> float:
    """Test risk minus train risk (equivalently train accuracy minus test accuracy)."""
    if _comparable(train_est.spec) != _comparable(test_est.spec):
        raise ConfigurationError(f"metric specs differ: {train_est.spec} vs {test_est.spec}")
    return test_est.mean - train_est.mean


def generalization_gap(source, train_data: Dataset = None, test_data: Dataset = None,
                       metric: MetricSpec = None, seed: int = 0):
    """Generalization gap for a metric, positive when the model does worse on test.

    ``source`` is either a :class:`TrainHistory` (the last snapshot is used; pass
    the metric name as ``metric``) or a :class:`Network` evaluated here on
    ``train_data`` and ``test_data`` with ``metric``.
    """
    if isinstance(source, TrainHistory):
        if not source.snapshots:
            raise ConfigurationError("history has no snapshots")
        snap = source.snapshots[-1]
        name = metric.name if isinstance(metric, MetricSpec) else metric
        if name not in snap.train or name not in snap.test:
            raise ConfigurationError(f"metric {name!r} missing from the last snapshot")
        return gap_between(snap.train[name], snap.test[name])
    if train_data is None or test_data is None or metric is None:
        raise ConfigurationError("need train data, test data and a metric")
    return gap_between(metric.evaluate(source, train_data, seed), metric.evaluate(source, test_data, seed))
