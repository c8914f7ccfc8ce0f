"""Synthetic kernels and test images for experiments."""

import math
import warnings

import numpy as np
from scipy.ndimage import gaussian_filter

from .fields import delta_kernel, project_kernel
from .kernel_init import GaussianBlurParams, render_gaussian_kernel


def motion_kernel(length, angle_deg, size, width=0.5):
    """Straight motion blur of ``length`` pixels at ``angle_deg``.

    The segment is splatted bilinearly at sub-pixel spacing, lightly
    smoothed across its direction by ``width`` and centered on its midpoint.
    """
    if size % 2 == 0:
        raise ValueError("kernel size must be odd")
    if length > size:
        raise ValueError(f"motion length {length} does not fit a {size}x{size} kernel")
    r = size // 2
    a = math.radians(angle_deg)
    t = np.linspace(-length / 2, length / 2, max(int(length * 8), 2))
    px = r + t * math.cos(a)
    py = r + t * math.sin(a)
    k = np.zeros((size, size))
    x0 = np.floor(px).astype(int)
    y0 = np.floor(py).astype(int)
    fx = px - x0
    fy = py - y0
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            yi = np.clip(y0 + dy, 0, size - 1)
            xi = np.clip(x0 + dx, 0, size - 1)
            np.add.at(k, (yi, xi), wy * wx)
    if width > 0:
        k = gaussian_filter(k, width, mode="constant")
    return project_kernel(k)


def parse_kernel_spec(spec, size=None):
    """Build a kernel from a short text spec.

    ``delta[:M]``, ``gauss:s_major,s_minor,theta_deg[:M]`` or
    ``motion:length,angle_deg[:M]``. ``M`` defaults to ``size`` or 15.
    """
    parts = spec.strip().split(":")
    kind = parts[0].lower()
    args = parts[1] if len(parts) > 1 else ""
    m = int(parts[2]) if len(parts) > 2 else (size or 15)
    if kind == "delta":
        if args:
            m = int(args)
        return delta_kernel(m)
    nums = [float(v) for v in args.split(",") if v]
    if kind == "gauss":
        if len(nums) != 3:
            raise ValueError(f"gauss spec needs 3 numbers, got {spec!r}")
        hi, lo = max(nums[0], nums[1]), min(nums[0], nums[1])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return render_gaussian_kernel(
                GaussianBlurParams(hi, lo, math.radians(nums[2]) % math.pi), m)
    if kind == "motion":
        if len(nums) != 2:
            raise ValueError(f"motion spec needs 2 numbers, got {spec!r}")
        return motion_kernel(nums[0], nums[1], m)
    raise ValueError(f"unknown kernel spec {spec!r}")


def shapes_chart(size=128, seed=0, n_shapes=14):
    """Random disks and rectangles on a dark background, values in [0, 1]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size]
    img = np.full((size, size), 0.1)
    for i in range(n_shapes):
        val = rng.uniform(0.2, 0.95)
        cy, cx = rng.uniform(0.1 * size, 0.9 * size, 2)
        r = rng.uniform(0.04, 0.15) * size
        if i % 2:
            img[(yy - cy) ** 2 + (xx - cx) ** 2 < r * r] = val
        else:
            img[(np.abs(yy - cy) < r) & (np.abs(xx - cx) < 0.7 * r)] = val
    return img
