"""Reference activation functions (ReLU, sigmoid, tanh)."""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError

# exp() arguments are clamped here; both sigmoid and tanh are saturated far earlier
EXP_CLAMP = 500.0


class ActivationKind(str, enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"

    @classmethod
    def parse(cls, name: "str | ActivationKind") -> "ActivationKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise DomainError(f"unknown activation {name!r}") from None

    def __str__(self) -> str:
        return self.value


# canonical ordering, also used for distinguisher tie-breaks
KIND_ORDER = (ActivationKind.RELU, ActivationKind.SIGMOID, ActivationKind.TANH)


def _clamp(v: float) -> float:
    return min(max(v, -EXP_CLAMP), EXP_CLAMP)


def relu(x: float) -> float:
    return x if x > 0.0 else 0.0


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(_clamp(-x)))


def tanh(x: float) -> float:
    # (e^x - e^-x)/(e^x + e^-x) rewritten on |x| so the result is exactly odd and monotone
    e = math.exp(_clamp(-2.0 * abs(x)))
    r = (1.0 - e) / (1.0 + e)
    return r if x >= 0.0 else -r


_SCALAR = {
    ActivationKind.RELU: relu,
    ActivationKind.SIGMOID: sigmoid,
    ActivationKind.TANH: tanh,
}


def evaluate(kind: ActivationKind | str, x: float) -> float:
    """Evaluate activation ``kind`` at ``x``; raises DomainError on non-finite input."""
    kind = ActivationKind.parse(kind)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"activation input must be finite, got {x!r}")
    return _SCALAR[kind](x)


def evaluate_array(kind: ActivationKind | str, x) -> np.ndarray:
    kind = ActivationKind.parse(kind)
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("activation input must be finite")
    if kind is ActivationKind.RELU:
        return np.where(x > 0.0, x, 0.0)
    if kind is ActivationKind.SIGMOID:
        return 1.0 / (1.0 + np.exp(np.clip(-x, -EXP_CLAMP, EXP_CLAMP)))
    e = np.exp(np.clip(-2.0 * np.abs(x), -EXP_CLAMP, EXP_CLAMP))
    r = (1.0 - e) / (1.0 + e)
    return np.where(x >= 0.0, r, -r)
