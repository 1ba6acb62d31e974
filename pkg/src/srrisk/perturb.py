"""Input perturbation distributions p(x' | x)."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

DIRAC = "dirac"
UNIFORM_LINF = "uniform_linf"
GAUSSIAN = "gaussian"

_ALIASES = {"dirac": DIRAC, "none": DIRAC, "uniform_linf": UNIFORM_LINF, "uniform": UNIFORM_LINF,
            "gaussian": GAUSSIAN, "gaussian_iso": GAUSSIAN, "normal": GAUSSIAN}


@dataclass(frozen=True)
class PerturbationSpec:
    """``scale`` is the L-inf radius for ``uniform_linf`` and sigma for ``gaussian``."""

    kind: str = DIRAC
    scale: float = None
    clip_to_unit_box: bool = False

    def __post_init__(self):
        if self.kind not in (DIRAC, UNIFORM_LINF, GAUSSIAN):
            raise ConfigurationError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == DIRAC:
            if self.scale is not None:
                raise ConfigurationError("dirac perturbation takes no parameter")
        else:
            if self.scale is None or not np.isfinite(self.scale) or self.scale <= 0:
                raise ConfigurationError(f"{self.kind} needs a positive parameter, got {self.scale}")
            object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def dirac(cls):
        return cls(DIRAC)

    @classmethod
    def uniform_linf(cls, eps, clip_to_unit_box=False):
        return cls(UNIFORM_LINF, eps, clip_to_unit_box)

    @classmethod
    def gaussian(cls, sigma, clip_to_unit_box=False):
        return cls(GAUSSIAN, sigma, clip_to_unit_box)

    @property
    def eps(self):
        return self.scale if self.kind == UNIFORM_LINF else None

    @property
    def sigma(self):
        return self.scale if self.kind == GAUSSIAN else None

    @classmethod
    def parse(cls, text: str) -> "PerturbationSpec":
        """Parse ``dirac``, ``uniform_linf 0.3`` or ``gaussian 0.3``, optionally followed by ``clip``.

        ``uniform_linf 0`` is read as ``dirac``: the zero-radius ball is a point mass.
        """
        parts = text.replace(":", " ").split()
        if not parts:
            raise ConfigurationError("empty perturbation spec")
        clip = False
        if parts[-1] in ("clip", "clip=true", "clip=1"):
            clip, parts = True, parts[:-1]
        elif parts[-1] in ("clip=false", "clip=0"):
            parts = parts[:-1]
        kind = _ALIASES.get(parts[0].lower())
        if kind is None:
            raise ConfigurationError(f"unknown perturbation kind {parts[0]!r}")
        if kind == DIRAC:
            if len(parts) != 1:
                raise ConfigurationError(f"dirac takes no parameter: {text!r}")
            return cls(DIRAC, None, clip)
        if len(parts) != 2:
            raise ConfigurationError(f"{kind} needs exactly one parameter: {text!r}")
        try:
            value = float(parts[1])
        except ValueError as exc:
            raise ConfigurationError(f"bad parameter in {text!r}") from exc
        if value == 0 and kind == UNIFORM_LINF:
            return cls(DIRAC, None, clip)
        return cls(kind, value, clip)

    def __str__(self):
        base = DIRAC if self.kind == DIRAC else f"{self.kind} {self.scale!r}"
        return base + (" clip" if self.clip_to_unit_box else "")


def sample(spec: PerturbationSpec, x, rng: np.random.Generator, n: int = None):
    """Draw ``x'`` around ``x``; with ``n`` set, return ``n`` stacked draws.

    Dirac draws nothing from ``rng`` and returns ``x`` unchanged.
    """
    x = np.asarray(x)
    shape = x.shape if n is None else (n,) + x.shape
    if spec.kind == DIRAC:
        out = np.broadcast_to(x, shape).copy()
    elif spec.kind == UNIFORM_LINF:
        out = x + rng.uniform(-spec.scale, spec.scale, size=shape)
    else:
        out = x + spec.scale * rng.standard_normal(size=shape)
    if spec.clip_to_unit_box and spec.kind != DIRAC:
        np.clip(out, 0.0, 1.0, out=out)
    return out.astype(x.dtype, copy=False) if np.issubdtype(x.dtype, np.floating) else out


def sample_points(spec: PerturbationSpec, xs, streams, k: int = 1):
    """``k`` draws for each row of ``xs``, row ``i`` using ``streams[i]``.

    Returns shape ``(len(xs), k, d)``.
    """
    xs = np.asarray(xs)
    if spec.kind == DIRAC:
        return np.repeat(xs[:, None, :], k, axis=1)
    return np.stack([sample(spec, x, g, k) for x, g in zip(xs, streams)]) if len(xs) else np.empty((0, k) + xs.shape[1:], xs.dtype)


def in_support(spec: PerturbationSpec, x, x_new) -> bool:
    x, x_new = np.asarray(x), np.asarray(x_new)
    if x.shape != x_new.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {x_new.shape}")
    if spec.kind == DIRAC:
        return bool(np.array_equal(x, x_new))
    if spec.kind == UNIFORM_LINF:
        # boundary included; slack of a few ulps because x + eps is itself rounded
        slack = 4 * np.spacing(np.maximum(np.maximum(np.abs(x), np.abs(x_new)), spec.scale))
        return bool(np.all(np.abs(x_new - x) <= spec.scale + slack))
    return True
