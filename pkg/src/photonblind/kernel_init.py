"""Initial kernel guess: a tilted anisotropic Gaussian fitted from edges.

The blur along a direction is inferred from the strongest directional
derivative of the (denoised, contrast-normalized) image in that direction:
a unit step blurred by a Gaussian of width ``s`` has peak slope about
``c / sqrt(s^2 + b^2)``, which is inverted per direction.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .fields import as_field, project_kernel

#: Peak slope of a unit step blurred by a unit-width Gaussian, 1/sqrt(2*pi).
SLOPE_CONSTANT = 1.0 / math.sqrt(2.0 * math.pi)
#: Width attributed to an unblurred step by central differences
#: (its peak slope is 0.5, i.e. c / b = 0.5).
INTRINSIC_WIDTH = 2.0 * SLOPE_CONSTANT
SIGMA_MIN = 0.3


@dataclass(frozen=True)
class GaussianBlurParams:
    """Widths in pixels along the tilt ``theta`` and across it.

    ``theta`` is the angle of the major axis in radians, measured from the
    column (x) axis toward the row (y) axis, in ``[0, pi)``.
    """

    sigma_major: float
    sigma_minor: float
    theta: float

    def __post_init__(self):
        if not self.sigma_major >= self.sigma_minor > 0:
            raise ValueError("need sigma_major >= sigma_minor > 0")

    def covariance(self):
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.array([[c, -s], [s, c]])
        return rot @ np.diag([self.sigma_major**2, self.sigma_minor**2]) @ rot.T


def _central_gradients(img):
    p = np.pad(img, 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return gx, gy


def directional_slopes(img, n_directions=36):
    """Maximal absolute directional derivative for evenly spaced angles in [0, pi).

    Returns ``(angles, slopes)``.
    """
    gx, gy = _central_gradients(img)
    angles = np.arange(n_directions) * (math.pi / n_directions)
    slopes = np.array([np.max(np.abs(math.cos(a) * gx + math.sin(a) * gy))
                       for a in angles])
    return angles, slopes


def estimate_gaussian_params(g, c=SLOPE_CONSTANT, b=INTRINSIC_WIDTH,
                             sigma_min=SIGMA_MIN, n_directions=36):
    """Fit the tilt and the two widths of a Gaussian blur to an image.

    The image is rescaled to [0, 1] first. The sharpest direction is the one
    with the steepest edge; the major axis is perpendicular to it. Per
    direction ``sigma = sqrt(max(c^2 / m^2 - b^2, sigma_min^2))`` where
    ``m`` is the steepest slope in that direction.

    Raises
    ------
    DegenerateInputError
        If the image is constant.
    """
    g = as_field(g, "g")
    lo, hi = g.min(), g.max()
    if not hi > lo:
        raise DegenerateInputError("cannot fit blur parameters to a constant image")
    img = (g - lo) / (hi - lo)
    angles, slopes = directional_slopes(img, n_directions)

    def width(m):
        return math.sqrt(max(c * c / (m * m) - b * b, sigma_min**2))

    sharpest = int(np.argmax(slopes))
    across = (sharpest + n_directions // 2) % n_directions
    theta = float(angles[across])
    s_along = width(slopes[across])
    s_across = width(slopes[sharpest])
    if s_along >= s_across:
        return GaussianBlurParams(s_along, s_across, theta)
    return GaussianBlurParams(s_across, s_along, float(angles[sharpest]))


def render_gaussian_kernel(params, size):
    """Sample the anisotropic Gaussian on an odd ``size x size`` grid and
    project it onto the simplex."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    if size < 2 * math.ceil(3 * params.sigma_major) + 1:
        warnings.warn(f"kernel size {size} truncates a Gaussian of width "
                      f"{params.sigma_major:.2f}", stacklevel=2)
    r = size // 2
    coords = np.arange(size) - r
    xx, yy = np.meshgrid(coords, coords)
    u = np.stack([xx, yy], axis=-1).astype(np.float64)
    prec = np.linalg.inv(params.covariance())
    q = np.einsum("...i,ij,...j->...", u, prec, u)
    return project_kernel(np.exp(-0.5 * q))


def initial_kernel(g, size, **kwargs):
    """Gaussian kernel of side ``size`` fitted to ``g``."""
    params = estimate_gaussian_params(g, **kwargs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return render_gaussian_kernel(params, size), params
