"""Pointwise losses and the misclassification property function.

All functions accept a single logit vector ``(M,)`` with a scalar label, or a
batch ``(B, M)`` with a label vector ``(B,)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, NonDifferentiableLossError, NumericError

ZERO_ONE = "zero_one"
CROSS_ENTROPY = "cross_entropy"
WEIGHTED_CE = "weighted_ce"


@dataclass(frozen=True)
class LossSpec:
    kind: str = CROSS_ENTROPY
    weights: tuple = None

    def __post_init__(self):
        if self.kind not in (ZERO_ONE, CROSS_ENTROPY, WEIGHTED_CE):
            raise ConfigurationError(f"unknown loss kind {self.kind!r}")
        if self.kind == WEIGHTED_CE:
            if not self.weights:
                raise ConfigurationError("weighted_ce needs a per-class weight vector")
            w = tuple(float(v) for v in self.weights)
            if not all(np.isfinite(v) and v > 0 for v in w):
                raise ConfigurationError(f"class weights must be strictly positive, got {w}")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ConfigurationError(f"{self.kind} takes no weights")

    @property
    def differentiable(self) -> bool:
        return self.kind != ZERO_ONE

    @classmethod
    def weighted(cls, class_count: int, overrides: dict) -> "LossSpec":
        w = [1.0] * class_count
        for c, v in overrides.items():
            if not 0 <= int(c) < class_count:
                raise ConfigurationError(f"weighted class {c} outside [0, {class_count})")
            w[int(c)] = float(v)
        return cls(WEIGHTED_CE, tuple(w))

    @classmethod
    def parse(cls, text: str, class_count: int = 10) -> "LossSpec":
        """Parse ``zero_one``, ``cross_entropy`` or ``weighted_ce class=8 weight=100``."""
        parts = text.split()
        if not parts:
            raise ConfigurationError("empty loss spec")
        kind, args = parts[0], parts[1:]
        if kind != WEIGHTED_CE:
            if args:
                raise ConfigurationError(f"{kind} takes no arguments: {text!r}")
            return cls(kind)
        kv = dict(a.split("=", 1) for a in args if "=" in a)
        if len(kv) != len(args):
            raise ConfigurationError(f"malformed weighted_ce arguments: {text!r}")
        classes = [int(c) for c in kv.get("class", "").split(",") if c]
        weights = [float(v) for v in kv.get("weight", "").split(",") if v]
        if not classes or len(weights) not in (1, len(classes)):
            raise ConfigurationError(f"weighted_ce needs class=<c> weight=<w>: {text!r}")
        if len(weights) == 1:
            weights = weights * len(classes)
        return cls.weighted(class_count, dict(zip(classes, weights)))

    def __str__(self):
        if self.kind != WEIGHTED_CE:
            return self.kind
        heavy = [(i, w) for i, w in enumerate(self.weights) if w != 1.0]
        if not heavy:
            return f"{WEIGHTED_CE} class=0 weight=1"
        cls_ = ",".join(str(i) for i, _ in heavy)
        wts = ",".join(repr(w) for _, w in heavy)
        return f"{WEIGHTED_CE} class={cls_} weight={wts}"


def _prepare(logits, y):
    z = np.asarray(logits, dtype=float)
    single = z.ndim == 1
    z2 = z[None, :] if single else z
    yy = np.atleast_1d(np.asarray(y))
    if z2.ndim != 2 or yy.shape != (z2.shape[0],):
        raise DomainError(f"logits {z.shape} and labels {np.shape(y)} do not pair up")
    if not np.issubdtype(yy.dtype, np.integer):
        if not np.all(yy == np.floor(yy)):
            raise DomainError("labels must be integer class indices")
        yy = yy.astype(np.int64)
    if yy.size and (yy.min() < 0 or yy.max() >= z2.shape[1]):
        raise DomainError(f"label out of range for {z2.shape[1]} classes")
    if not np.isfinite(z2).all():
        raise NumericError("non-finite logits")
    return z2, yy, single


def _out(v, single):
    return v[0] if single else v


def zero_one_loss(logits, y):
    """1 unless the label holds the strict maximum logit.

    A tie involving the label counts as a miss, so this is exactly
    ``property_margin(logits, y) >= 0``.
    """
    z, yy, single = _prepare(logits, y)
    return _out((_margin(z, yy) >= 0).astype(float), single)


def predict(logits):
    """Argmax class, lowest index on ties."""
    return np.argmax(np.asarray(logits), axis=-1)


def log_softmax(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(logits, y):
    z, yy, single = _prepare(logits, y)
    val = -log_softmax(z)[np.arange(len(yy)), yy]
    # log-sum-exp can round a hair below zero when the label logit dominates
    return _out(np.maximum(val, 0.0), single)


def weighted_cross_entropy(logits, y, w):
    w = np.asarray(w, dtype=float)
    z, yy, single = _prepare(logits, y)
    if w.shape != (z.shape[1],):
        raise ConfigurationError(f"weight vector length {w.size} != class count {z.shape[1]}")
    if not np.all(w > 0):
        raise ConfigurationError("class weights must be strictly positive")
    return _out(w[yy] * cross_entropy(z, yy), single)


def property_margin(logits, y):
    """Largest wrong-class logit minus the label logit; ``>= 0`` marks a violation."""
    z, yy, single = _prepare(logits, y)
    return _out(_margin(z, yy), single)


def _margin(z, yy):
    if z.shape[1] < 2:
        raise DomainError("property margin needs at least two classes")
    rows = np.arange(len(yy))
    others = z.copy()
    others[rows, yy] = -np.inf
    return others.max(axis=1) - z[rows, yy]


def pointwise_loss(spec: LossSpec, logits, y):
    if spec.kind == ZERO_ONE:
        return zero_one_loss(logits, y)
    if spec.kind == CROSS_ENTROPY:
        return cross_entropy(logits, y)
    return weighted_cross_entropy(logits, y, spec.weights)


def loss_and_logit_grad(spec: LossSpec, logits, y):
    """Per-row loss values and their gradients with respect to the logits."""
    if not spec.differentiable:
        raise NonDifferentiableLossError(f"{spec.kind} has no useful gradient")
    z, yy, _ = _prepare(logits, y)
    rows = np.arange(len(yy))
    logp = log_softmax(z)
    values = np.maximum(-logp[rows, yy], 0.0)
    grad = np.exp(logp)
    grad[rows, yy] -= 1.0
    if spec.kind == WEIGHTED_CE:
        wy = np.asarray(spec.weights)[yy]
        values = wy * values
        grad *= wy[:, None]
    return values, grad
