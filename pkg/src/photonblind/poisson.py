"""Poisson forward model, likelihood and photon-level estimation."""

import numpy as np

from .conv import convolve_circular, convolve_symmetric
from .errors import DegenerateInputError
from .fields import as_field, check_kernel

#: Ratio between mean photons per pixel and the photon level, used when the
#: photon level of a capture is unknown.
PHOTON_LEVEL_BETA = 0.33


def simulate(x, h, alpha, seed, boundary="circular"):
    """Draw ``y ~ Poisson(alpha * (h * x))`` with a seeded generator.

    Parameters
    ----------
    x : ndarray
        Latent image with values in [0, 1].
    h : ndarray
        Blur kernel (nonnegative, sums to one).
    alpha : float
        Photon level, mean photon count per unit intensity.
    seed : int
        Seed for ``numpy.random.default_rng``; equal seeds give identical draws.
    boundary : {"circular", "symmetric"}

    Returns
    -------
    ndarray
        Float array of nonnegative integer counts.
    """
    x = as_field(x, "x")
    h = check_kernel(h)
    if alpha <= 0:
        raise ValueError(f"photon level must be positive, got {alpha}")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("latent image must lie in [0, 1]")
    if np.any(h < 0):
        raise ValueError("kernel must be nonnegative")
    blur = convolve_symmetric(x, h) if boundary == "symmetric" else convolve_circular(x, h)
    # FFT round-off can leave values a few ulps below zero
    lam = alpha * np.maximum(blur, 0.0)
    rng = np.random.default_rng(seed)
    return rng.poisson(lam).astype(np.float64)


def poisson_nll(y, lam):
    """Poisson negative log-likelihood ``sum(lam - y * log(lam))``.

    The ``log(y!)`` constant is dropped and ``0 * log(0)`` is taken as 0.
    Returns ``inf`` when some pixel has ``y > 0`` but ``lam == 0``.
    """
    y = np.asarray(y, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if y.shape != lam.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs lam {lam.shape}")
    if np.any(lam < 0):
        raise ValueError("rate must be nonnegative")
    pos = y > 0
    if np.any(lam[pos] == 0):
        return np.inf
    return float(lam.sum() - np.sum(y[pos] * np.log(lam[pos])))


def estimate_photon_level(y, beta=PHOTON_LEVEL_BETA):
    """Estimate the photon level as ``sum(y) / (beta * N)``."""
    y = as_field(y, "y")
    total = y.sum()
    if total <= 0:
        raise DegenerateInputError("cannot estimate the photon level of an all-zero image")
    return float(total / (beta * y.size))
