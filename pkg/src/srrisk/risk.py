"""Monte Carlo risk estimators: natural, statistically robust, TSRM, pointwise and PGD-adversarial.

Every per-datapoint random draw comes from its own stream keyed by
``(seed, purpose, point index)``, and logits are computed in fixed-height
blocks, so splitting a dataset across chunks or threads cannot change a result.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import CapabilityError, ConfigurationError, DomainError, NonDifferentiableLossError
from .metrics import CROSS_ENTROPY, ZERO_ONE, LossSpec, pointwise_loss, property_margin
from .nn import EVAL_BLOCK, Network, forward, grad_input
from .perturb import DIRAC, PerturbationSpec, sample, sample_points
from .rng import Purpose, branch, point_streams

# rows per forward call when expanding points into K perturbations
ROWS_PER_CHUNK = 4096


@dataclass
class RiskEstimate:
    mean: float
    std_error: float
    n_terms: int
    spec: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def __post_init__(self):
        if self.n_terms < 1:
            raise DomainError("an estimate needs at least one term")
        if self.std_error < 0:
            raise DomainError("negative standard error")

    def row(self) -> dict:
        out = {k: v for k, v in self.spec.items()}
        out.update(mean=self.mean, std_error=self.std_error, n_terms=self.n_terms,
                   wall_time=round(self.wall_time, 6))
        return out


@dataclass(frozen=True)
class PgdConfig:
    eps: float
    steps: int = 7
    step_size: float = None
    random_start: bool = True
    clip_to_unit_box: bool = False

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps < 0:
            raise ConfigurationError(f"PGD radius must be non-negative, got {self.eps}")
        if int(self.steps) < 1:
            raise ConfigurationError(f"PGD needs at least one step, got {self.steps}")
        if self.step_size is None:
            object.__setattr__(self, "step_size", 2.5 * self.eps / self.steps if self.eps > 0 else 1.0)
        if not self.step_size > 0:
            raise ConfigurationError(f"PGD step size must be positive, got {self.step_size}")

    def describe(self) -> dict:
        return {"pgd_eps": self.eps, "pgd_steps": self.steps, "pgd_step_size": self.step_size,
                "pgd_random_start": self.random_start, "pgd_clip": self.clip_to_unit_box}

    @classmethod
    def from_dict(cls, d: dict, prefix: str = "pgd_") -> "PgdConfig":
        """Inverse of :meth:`describe` (keys may carry an extra prefix)."""
        return cls(float(d[prefix + "eps"]), int(d[prefix + "steps"]), float(d[prefix + "step_size"]),
                   bool(d[prefix + "random_start"]), bool(d[prefix + "clip"]))


def _summarise(values, spec, t0) -> RiskEstimate:
    values = np.asarray(values, dtype=np.float64).ravel()
    n = values.size
    mean = float(values.mean())
    se = float(values.std() / np.sqrt(n))
    return RiskEstimate(mean, se, n, spec, time.perf_counter() - t0)


def _require_data(net: Network, data: Dataset):
    if len(data) == 0:
        raise DomainError("risk of an empty dataset is undefined")
    if data.dim != net.layer_sizes[0]:
        raise DomainError(f"data dimension {data.dim} != network input size {net.layer_sizes[0]}")


def _chunks(n, size):
    return [(s, min(s + size, n)) for s in range(0, n, size)]


def _map(fn, spans, n_jobs):
    if n_jobs and n_jobs > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, spans))
    return [fn(s) for s in spans]


def _losses(net, x, y, loss):
    return pointwise_loss(loss, forward(net, x, block=EVAL_BLOCK), y)


def empirical_risk(net: Network, data: Dataset, loss: LossSpec, *, n_jobs: int = 1,
                   chunk: int = ROWS_PER_CHUNK) -> RiskEstimate:
    """Exact mean loss over the dataset."""
    t0 = time.perf_counter()
    _require_data(net, data)
    spans = _chunks(len(data), chunk)
    parts = _map(lambda s: _losses(net, data.inputs[s[0]:s[1]], data.labels[s[0]:s[1]], loss), spans, n_jobs)
    spec = {"estimator": "empirical", "loss": str(loss), "perturbation": DIRAC, "k": 1, "n_points": len(data)}
    return _summarise(np.concatenate(parts), spec, t0)


def srr_terms(net: Network, data: Dataset, spec: PerturbationSpec, loss: LossSpec, k: int, seed: int,
              stream=(Purpose.EVAL_PERTURB,), *, n_jobs: int = 1, points_per_chunk: int = None):
    """Per-(point, draw) losses, shape ``(N, k)``."""
    per = points_per_chunk or max(1, ROWS_PER_CHUNK // k)
    d = data.dim

    def run(span):
        lo, hi = span
        streams = point_streams(seed, stream[0], range(lo, hi), *stream[1:])
        xs = sample_points(spec, data.inputs[lo:hi], streams, k).reshape(-1, d)
        ys = np.repeat(data.labels[lo:hi], k)
        return _losses(net, xs, ys, loss).reshape(hi - lo, k)

    return np.concatenate(_map(run, _chunks(len(data), per), n_jobs))


def srr_estimate(net: Network, data: Dataset, spec: PerturbationSpec, loss: LossSpec, k: int = 100,
                 seed: int = 0, *, stream=(Purpose.EVAL_PERTURB,), n_jobs: int = 1,
                 points_per_chunk: int = None) -> RiskEstimate:
    """Mean loss over the data and ``k`` perturbations of each point.

    A Dirac perturbation has nothing to average, so it reduces exactly to
    :func:`empirical_risk`.
    """
    if int(k) < 1:
        raise ConfigurationError(f"need at least one perturbation per point, got k={k}")
    desc = {"estimator": "srr", "loss": str(loss), "perturbation": str(spec), "k": int(k), "seed": int(seed),
            "n_points": len(data)}
    if spec.kind == DIRAC:
        est = empirical_risk(net, data, loss, n_jobs=n_jobs)
        est.spec = desc
        return est
    t0 = time.perf_counter()
    _require_data(net, data)
    terms = srr_terms(net, data, spec, loss, int(k), seed, stream, n_jobs=n_jobs, points_per_chunk=points_per_chunk)
    return _summarise(terms, desc, t0)


def tsrm_estimate(net: Network, data: Dataset, spec: PerturbationSpec, seed: int = 0, k: int = 100,
                  **kw) -> RiskEstimate:
    """Probability that a random datapoint's perturbed copy is misclassified (A-TSRM)."""
    est = srr_estimate(net, data, spec, LossSpec(ZERO_ONE), k, seed, **kw)
    est.spec["estimator"] = "tsrm"
    return est


def pointwise_violation_prob(net: Network, x, y: int, spec: PerturbationSpec, n: int, seed: int = 0,
                             chunk: int = ROWS_PER_CHUNK) -> RiskEstimate:
    """Fraction of ``n`` perturbations of ``x`` with non-negative property margin."""
    t0 = time.perf_counter()
    if int(n) < 1:
        raise ConfigurationError("need at least one sample")
    x = np.asarray(x, dtype=np.float64)
    rng = branch(seed, Purpose.POINTWISE)
    hits = 0
    for lo, hi in _chunks(int(n), chunk):
        xs = sample(spec, x, rng, hi - lo)
        margins = property_margin(forward(net, xs, block=EVAL_BLOCK), np.full(hi - lo, y))
        hits += int(np.count_nonzero(margins >= 0))
    p = hits / n
    desc = {"estimator": "pointwise", "perturbation": str(spec), "k": int(n), "seed": int(seed)}
    return RiskEstimate(p, float(np.sqrt(p * (1 - p) / n)), int(n), desc, time.perf_counter() - t0)


def _attack(net, x0, y, cfg: PgdConfig, loss: LossSpec, delta0, block):
    if cfg.eps == 0:
        return x0.copy()
    lo, hi = x0 - cfg.eps, x0 + cfg.eps
    x = x0 + delta0 if delta0 is not None else x0.copy()
    for _ in range(int(cfg.steps)):
        g = grad_input(net, x, y, loss, block=block)
        x = np.clip(x + cfg.step_size * np.sign(g), lo, hi)
        if cfg.clip_to_unit_box:
            np.clip(x, 0.0, 1.0, out=x)
    return x


def pgd_attack(net: Network, x, y, cfg: PgdConfig, loss: LossSpec = LossSpec(CROSS_ENTROPY),
               rng: np.random.Generator = None, block: int = None):
    """L-inf projected gradient ascent on ``loss`` around ``x`` (one point or a batch)."""
    if not loss.differentiable:
        raise NonDifferentiableLossError("PGD needs a differentiable attack loss")
    x0 = np.asarray(x, dtype=np.float64)
    delta0 = None
    if cfg.random_start and cfg.eps > 0:
        if rng is None:
            raise ConfigurationError("random_start needs an rng")
        delta0 = rng.uniform(-cfg.eps, cfg.eps, size=x0.shape)
    return _attack(net, x0, y, cfg, loss, delta0, block)


def adversarial_points(net: Network, data: Dataset, cfg: PgdConfig, attack_loss: LossSpec, seed: int,
                       stream=(Purpose.PGD_START,), lo: int = 0, hi: int = None, block: int = EVAL_BLOCK):
    """PGD images of ``data[lo:hi]``; random starts keyed by absolute point index."""
    hi = len(data) if hi is None else hi
    x0 = data.inputs[lo:hi].astype(np.float64)
    delta0 = None
    if cfg.random_start and cfg.eps > 0:
        streams = point_streams(seed, stream[0], range(lo, hi), *stream[1:])
        delta0 = np.stack([g.uniform(-cfg.eps, cfg.eps, size=data.dim) for g in streams])
    return _attack(net, x0, data.labels[lo:hi], cfg, attack_loss, delta0, block)


def adversarial_risk(net: Network, data: Dataset, cfg: PgdConfig, loss_eval: LossSpec = LossSpec(ZERO_ONE),
                     seed: int = 0, *, attack_loss: LossSpec = LossSpec(CROSS_ENTROPY), n_jobs: int = 1,
                     chunk: int = 1024) -> RiskEstimate:
    """Mean ``loss_eval`` at PGD points; the attack ascends ``attack_loss`` (CE by default)."""
    t0 = time.perf_counter()
    if not attack_loss.differentiable:
        raise NonDifferentiableLossError("PGD needs a differentiable attack loss")
    _require_data(net, data)

    def run(span):
        lo, hi = span
        xa = adversarial_points(net, data, cfg, attack_loss, seed, lo=lo, hi=hi)
        return _losses(net, xa, data.labels[lo:hi], loss_eval)

    parts = _map(run, _chunks(len(data), chunk), n_jobs)
    desc = {"estimator": "adversarial", "loss": str(loss_eval), "attack_loss": str(attack_loss), "seed": int(seed),
            "n_points": len(data), **cfg.describe()}
    return _summarise(np.concatenate(parts), desc, t0)


def _grid_offsets(eps: float, points: int, dim: int):
    if points < 1:
        raise ConfigurationError("need at least one grid point per dimension")
    m = points // 2
    if m == 0 or eps == 0:
        axis = np.zeros(1)
    else:
        pos = eps * np.arange(1, m + 1) / m
        axis = np.concatenate([-pos[::-1], [0.0], pos])
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def brute_force_adversarial_risk(net: Network, data: Dataset, eps: float, grid_points_per_dim: int = 21,
                                 loss: LossSpec = LossSpec(ZERO_ONE)) -> RiskEstimate:
    """Worst loss over a full grid of the L-inf ball (corners and centre included).

    An even ``grid_points_per_dim`` is rounded up to the next odd number.
    """
    t0 = time.perf_counter()
    _require_data(net, data)
    if data.dim > 3:
        raise CapabilityError(f"grid search is limited to inputs of dimension <= 3, got {data.dim}")
    offsets = _grid_offsets(float(eps), int(grid_points_per_dim), data.dim)
    worst = np.empty(len(data))
    for i, (x, y) in enumerate(zip(data.inputs, data.labels)):
        worst[i] = _losses(net, x + offsets, np.full(len(offsets), y), loss).max()
    desc = {"estimator": "brute_force_adversarial", "loss": str(loss), "eps": float(eps),
            "grid_points_per_dim": int(grid_points_per_dim), "n_points": len(data)}
    return _summarise(worst, desc, t0)


@dataclass(frozen=True)
class MetricSpec:
    """A named evaluation: loss under a perturbation distribution, or under PGD when ``pgd`` is set."""

    name: str
    loss: LossSpec
    perturbation: PerturbationSpec = PerturbationSpec()
    k: int = 100
    pgd: PgdConfig = None

    def evaluate(self, net: Network, data: Dataset, seed: int, stream=None, n_jobs: int = 1) -> RiskEstimate:
        if self.pgd is not None:
            est = adversarial_risk(net, data, self.pgd, self.loss, seed, n_jobs=n_jobs)
        else:
            est = srr_estimate(net, data, self.perturbation, self.loss, self.k, seed,
                               stream=stream or (Purpose.EVAL_PERTURB,), n_jobs=n_jobs)
        est.spec = {"metric": self.name, **est.spec}
        return est

    def describe(self) -> dict:
        out = {"metric": self.name, "loss": str(self.loss)}
        if self.pgd is not None:
            out.update(self.pgd.describe())
        else:
            out.update(perturbation=str(self.perturbation), k=self.k)
        return out

    @classmethod
    def from_dict(cls, d: dict, class_count: int = 10) -> "MetricSpec":
        loss = LossSpec.parse(d["loss"], class_count)
        if "pgd_eps" in d:
            return cls(d["metric"], loss, pgd=PgdConfig.from_dict(d))
        return cls(d["metric"], loss, PerturbationSpec.parse(d["perturbation"]), int(d["k"]))
