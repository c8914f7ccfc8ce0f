"""Image and kernel quality metrics."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fields import as_field

#: PSNR reported for identical images.
PSNR_CAP = 99.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    kernel_mae: float
    alignment_shift: tuple

    def as_dict(self):
        return {
            "psnr": self.psnr,
            "ssim": self.ssim,
            "kernel_mae": self.kernel_mae,
            "shift_dy": int(self.alignment_shift[0]),
            "shift_dx": int(self.alignment_shift[1]),
        }


def _pair(a, b):
    a = as_field(a, "a")
    b = as_field(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b):
    """Peak signal-to-noise ratio in dB for unit peak.

    Identical images give :data:`PSNR_CAP`, as does any PSNR above it.
    """
    a, b = _pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP
    return min(float(10.0 * np.log10(1.0 / mse)), PSNR_CAP)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = size // 2
    t = np.arange(-r, r + 1)
    g = np.exp(-(t**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b):
    """Mean structural similarity over all fully contained 11x11 windows.

    Gaussian weighting with sigma 1.5, ``C1 = 0.01^2``, ``C2 = 0.03^2`` for a
    unit dynamic range.
    """
    a, b = _pair(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    w = gaussian_window()
    r = SSIM_WINDOW // 2
    valid = (slice(r, a.shape[0] - r), slice(r, a.shape[1] - r))

    def filt(f):
        return ndimage.correlate(f, w, mode="constant")[valid]

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def kernel_mae(h_est, h_true, align=True):
    """Mean absolute kernel error ``||h_est - h_true||_1 / n_pixels``.

    With ``align`` the estimate is first circularly shifted by the integer
    offset giving the smallest error (ties go to the larger
    cross-correlation, then to the smaller shift), removing the translation
    ambiguity of blind deconvolution.

    Returns
    -------
    mae : float
    shift : tuple of int
        ``(dy, dx)`` displacement of ``h_est`` relative to ``h_true``; rolling
        ``h_est`` by its negative aligns the two.
    """
    h_est = as_field(h_est, "h_est")
    h_true = as_field(h_true, "h_true")
    if h_est.shape != h_true.shape:
        raise ValueError(f"kernel sizes differ: {h_est.shape} vs {h_true.shape}; "
                         "embed the smaller one first")
    n = h_true.size
    if not align:
        return float(np.abs(h_est - h_true).sum() / n), (0, 0)
    m0, m1 = h_true.shape
    best = None
    for dy in range(-(m0 // 2), m0 - m0 // 2):
        for dx in range(-(m1 // 2), m1 - m1 // 2):
            rolled = np.roll(h_est, (dy, dx), axis=(0, 1))
            err = np.abs(rolled - h_true).sum() / n
            key = (err, -np.sum(rolled * h_true), abs(dy) + abs(dx))
            if best is None or key < best[0]:
                best = (key, (dy, dx))
    dy, dx = best[1]
    return float(best[0][0]), (-dy, -dx)


def evaluate_pair(x_est, x_true, h_est=None, h_true=None, align=True):
    """Bundle PSNR, SSIM and kernel MAE into a :class:`MetricReport`."""
    mae, shift = (np.nan, (0, 0))
    if h_est is not None and h_true is not None:
        mae, shift = kernel_mae(h_est, h_true, align)
    return MetricReport(psnr(x_est, x_true), ssim(x_est, x_true), mae, shift)
