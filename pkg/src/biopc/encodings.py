"""Error-neuron encodings and the objectives they minimize.

Three ways to represent the mismatch between an activity and its top-down
effective prediction f(p) + b:

* ``Subtractive`` -- the signed difference a - (f(p) + b).
* ``SubtractiveThreshold`` -- an affine remap of that difference onto
  non-negative firing rates with a baseline rate of 1 (a zero difference
  encodes to 1, the representable range [e_min, e_min + e_max] maps to
  [0, 2]). Decoding is exact, so update rules driven through this encoding
  reproduce the subtractive ones.
* ``Division`` -- the square-root ratio sqrt((a + eps) / (f(p) + b + eps)),
  always positive, equal to 1 when activity matches prediction. Its
  objective is the squared log of the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .linalg import ActivationKind, activate, as_matrix


class EncodingDomainError(ValueError):
    """Inputs fall outside the domain an encoding is defined on."""


@dataclass(frozen=True)
class Subtractive:
    pass


@dataclass(frozen=True)
class SubtractiveThreshold:
    e_min: float = -1.0
    e_max: float = 2.1

    def __post_init__(self):
        if not self.e_max > 0:
            raise ValueError(f"e_max must be positive, got {self.e_max}")
        if self.e_min > 0:
            raise ValueError(f"e_min must be <= 0, got {self.e_min}")


@dataclass(frozen=True)
class Division:
    epsilon: float = 1e-3

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


ErrorEncoding = Union[Subtractive, SubtractiveThreshold, Division]


def predicted_rate(p, kind: ActivationKind, bias: float) -> np.ndarray:
    """Effective prediction f(p) + b that activities are compared against."""
    return activate(kind, p) + bias


def subtractive_error(a, phat) -> np.ndarray:
    a = as_matrix(a)
    phat = as_matrix(phat)
    if a.shape != phat.shape:
        raise EncodingDomainError(f"subtractive_error: shapes disagree, {a.shape} vs {phat.shape}")
    return a - phat


def threshold_encode(e, e_min: float, e_max: float) -> np.ndarray:
    """Map signed errors onto non-negative rates: e* = 2 (e - e_min) / e_max."""
    e = as_matrix(e)
    lowest = e.min() if e.size else 0.0
    if lowest < e_min:
        raise EncodingDomainError(
            f"threshold_encode: entry {lowest} is below the representable minimum e_min={e_min}"
        )
    return 2.0 * (e - e_min) / e_max


def threshold_decode(estar, e_min: float, e_max: float) -> np.ndarray:
    """Exact inverse of threshold_encode: e = (e_max / 2) e* + e_min."""
    estar = as_matrix(estar)
    return (e_max / 2.0) * estar + e_min


def division_error(a, phat, epsilon: float) -> np.ndarray:
    """Ratio mismatch e** = sqrt((a + eps) / (phat + eps)); 1 where a == phat."""
    a = as_matrix(a)
    phat = as_matrix(phat)
    if a.shape != phat.shape:
        raise EncodingDomainError(f"division_error: shapes disagree, {a.shape} vs {phat.shape}")
    if a.size and a.min() < 0:
        raise EncodingDomainError(
            f"division_error: negative activity entry {a.min()}; positive rates required"
        )
    if phat.size and phat.min() < 0:
        raise EncodingDomainError(
            f"division_error: negative prediction entry {phat.min()}; positive rates required"
        )
    return np.sqrt((a + epsilon) / (phat + epsilon))


def division_cost(estar2) -> float:
    """Cost of ratio mismatches: sum over units of (1/2) ln(e**)^2, mean over batch."""
    estar2 = as_matrix(estar2)
    if estar2.size and estar2.min() <= 0:
        raise EncodingDomainError(
            f"division_cost: non-positive entry {estar2.min()}; ratios must be > 0"
        )
    logs = np.log(estar2)
    return float(0.5 * np.sum(logs * logs) / estar2.shape[1])


def energy(errors: list) -> float:
    """Total squared prediction error: sum over levels and units of (1/2) e^2, mean over batch."""
    total = 0.0
    for e in errors:
        e = as_matrix(e)
        total += 0.5 * np.sum(e * e) / e.shape[1]
    return float(total)
