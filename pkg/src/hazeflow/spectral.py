"""Frequency-domain filtering on mirror-padded fields.

Frequencies are in cycles/pixel, so a cutoff given relative to the
half-diagonal of the spectrum (``sqrt(0.5)`` cycles/pixel) means the same
thing for every image size and for the padded grid.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

HALF_DIAGONAL = float(np.sqrt(0.5))


def radial_frequency(shape: tuple[int, int]) -> np.ndarray:
    """Radial frequency ``D`` in cycles/pixel laid out in FFT order."""
    fy = np.fft.fftfreq(shape[0])
    fx = np.fft.fftfreq(shape[1])
    return np.hypot(fy[:, None], fx[None, :])


def apply_transfer(field: np.ndarray, transfer: Callable[[np.ndarray], np.ndarray],
                   return_imag: bool = False):
    """Multiply the spectrum of ``field`` by ``transfer(D)`` and return the real part.

    The field is mirrored to twice its size first so the implied periodic
    extension has no seams.
    """
    h, w = field.shape
    padded = np.pad(field, ((0, h), (0, w)), mode="symmetric")
    spec = np.fft.fft2(padded)
    out = np.fft.ifft2(spec * transfer(radial_frequency(padded.shape)))
    crop = out[:h, :w]
    if return_imag:
        return crop.real.copy(), float(np.max(np.abs(crop.imag)))
    return crop.real.copy()
