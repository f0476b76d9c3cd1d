"""Log-less LIP scalar multiplication and the area-adaptive exponent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import to_gray
from .validation import check_in_range


@dataclass(frozen=True)
class LipParams:
    """Exponent bounds, area thresholds and weights of the adaptive exponent.

    ``lambda_`` fixes the exponent when set; otherwise it is derived from the
    dark/light area fractions with :func:`adaptive_lambda`.
    """

    lambda_: float | None = None
    t_low: float = 0.15
    t_high: float = 0.85
    lambda_min: float = 1.0
    lambda_max: float = 4.0
    lambda_base: float = 2.0
    w_black: float = 2.0
    w_white: float = 1.0

    def __post_init__(self):
        check_in_range("lambda_min", self.lambda_min, 0.0, lo_open=True)
        check_in_range("lambda_max", self.lambda_max, self.lambda_min)
        if self.lambda_ is not None:
            check_in_range("lambda", self.lambda_, 0.0, lo_open=True)
        check_in_range("t_low", self.t_low, 0.0, 1.0)
        check_in_range("t_high", self.t_high, self.t_low, 1.0, lo_open=True)
        check_in_range("w_black", self.w_black, 0.0)
        check_in_range("w_white", self.w_white, 0.0)


@dataclass(frozen=True)
class AreaStats:
    black: float
    white: float


def lip_mult(x, lam: float):
    """``lam (x) x = ((1+x)^lam - (1-x)^lam) / ((1+x)^lam + (1-x)^lam)``.

    Works elementwise on scalars or arrays with ``x`` in [0, 1].
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    x = np.asarray(x, dtype=np.float64)
    if lam == 1:
        return x.copy() if x.ndim else float(x)
    a = np.power(1.0 + x, lam)
    b = np.power(1.0 - x, lam)
    out = (a - b) / (a + b)
    return out if out.ndim else float(out)


def black_white_area(img, t_low: float = 0.15, t_high: float = 0.85) -> AreaStats:
    """Fractions of gray pixels strictly below ``t_low`` and above ``t_high``."""
    g = to_gray(img)
    n = g.size
    return AreaStats(
        black=float(np.count_nonzero(g < t_low)) / n,
        white=float(np.count_nonzero(g > t_high)) / n,
    )


def adaptive_lambda(area: AreaStats, params: LipParams = LipParams()) -> float:
    """Affine map of the area fractions clamped to the exponent bounds.

    Dark content pushes the exponent up (stronger expansion), bright content
    pulls it down.
    """
    lam = params.lambda_base + params.w_black * area.black - params.w_white * area.white
    return float(min(max(lam, params.lambda_min), params.lambda_max))


def resolve_lambda(img, params: LipParams = LipParams()) -> float:
    if params.lambda_ is not None:
        return float(params.lambda_)
    return adaptive_lambda(black_white_area(img, params.t_low, params.t_high), params)
