"""Boundary handling and kernel projection for 2-D real fields.

Images and kernels are plain ``float64`` numpy arrays of shape ``(H, W)``.
Everything here is a pure function of its inputs.
"""

import numpy as np

from .errors import DegenerateKernelError

#: Tolerance on the kernel sum after projection.
SUM_TOL = 1e-12


def as_field(a, name="field"):
    """Return ``a`` as a finite 2-D float64 array, or raise ``ValueError``."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _mirror_index(n, before, after):
    # edge-inclusive reflection: [a b c] -> b a | a b c | c b
    idx = np.arange(-before, n + after)
    idx = np.where(idx < 0, -idx - 1, idx)
    idx = np.where(idx >= n, 2 * n - idx - 1, idx)
    return idx


def _check_pads(shape, top, bottom, left, right):
    h, w = shape
    for name, amount, limit in (("top", top, h), ("bottom", bottom, h),
                                ("left", left, w), ("right", right, w)):
        if int(amount) != amount or amount < 0:
            raise ValueError(f"{name} pad must be a non-negative integer, got {amount}")
        if amount > limit:
            raise ValueError(f"{name} pad {amount} exceeds image dimension {limit}")


def pad_symmetric(img, top, bottom, left, right):
    """Mirror-pad an image, repeating the edge row/column once.

    Padding ``[1, 2, 3]`` by one on each side gives ``[1, 1, 2, 3, 3]``.
    Each pad amount must not exceed the corresponding image dimension.
    """
    img = as_field(img, "img")
    _check_pads(img.shape, top, bottom, left, right)
    rows = _mirror_index(img.shape[0], int(top), int(bottom))
    cols = _mirror_index(img.shape[1], int(left), int(right))
    return img[np.ix_(rows, cols)]


def pad_symmetric_adjoint(grad, shape, top, bottom, left, right):
    """Adjoint of :func:`pad_symmetric`: fold the mirrored border back in."""
    grad = np.asarray(grad, dtype=np.float64)
    _check_pads(shape, top, bottom, left, right)
    rows = _mirror_index(shape[0], int(top), int(bottom))
    cols = _mirror_index(shape[1], int(left), int(right))
    if grad.shape != (rows.size, cols.size):
        raise ValueError(f"gradient shape {grad.shape} does not match padded shape")
    out = np.zeros(shape)
    np.add.at(out, np.ix_(rows, cols), grad)
    return out


def crop_center(img, out_h, out_w):
    """Cut the centered ``out_h x out_w`` window; offset is ``floor((H - out_h) / 2)``."""
    img = as_field(img, "img")
    h, w = img.shape
    if out_h > h or out_w > w or out_h < 1 or out_w < 1:
        raise ValueError(f"cannot crop {out_h}x{out_w} from a {h}x{w} field")
    top = (h - out_h) // 2
    left = (w - out_w) // 2
    return img[top:top + out_h, left:left + out_w].copy()


def crop_center_adjoint(grad, shape):
    """Zero-embed a centered crop back into a field of ``shape``."""
    grad = np.asarray(grad, dtype=np.float64)
    out = np.zeros(shape)
    top = (shape[0] - grad.shape[0]) // 2
    left = (shape[1] - grad.shape[1]) // 2
    out[top:top + grad.shape[0], left:left + grad.shape[1]] = grad
    return out


def project_kernel(k):
    """Clip negative entries to zero and rescale so the kernel sums to one.

    A kernel that is already valid (nonnegative, sum within ``SUM_TOL`` of
    one) is returned unchanged, which makes the projection idempotent.

    Raises
    ------
    DegenerateKernelError
        If nothing positive survives the clip.
    """
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError(f"kernel must be 2-D, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise DegenerateKernelError("kernel contains NaN or Inf")
    clipped = np.maximum(k, 0.0)
    total = clipped.sum()
    if not total > 0.0:
        raise DegenerateKernelError("kernel has no positive entries after clipping")
    if np.all(k >= 0.0) and abs(total - 1.0) <= SUM_TOL:
        return k.copy()
    return clipped / total


def check_kernel(h, name="kernel"):
    """Validate a square, odd-sized, finite kernel and return it as float64."""
    h = as_field(h, name)
    m, n = h.shape
    if m != n or m % 2 == 0:
        raise ValueError(f"{name} must be square with odd side, got {h.shape}")
    return h


def delta_kernel(size):
    """Identity kernel of odd side ``size``."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    h = np.zeros((size, size))
    h[size // 2, size // 2] = 1.0
    return h


def embed_kernel(h, size):
    """Center a smaller odd kernel inside a zero ``size x size`` grid."""
    h = check_kernel(h)
    m = h.shape[0]
    if size % 2 == 0 or size < m:
        raise ValueError(f"cannot embed a {m}x{m} kernel into {size}x{size}")
    out = np.zeros((size, size))
    off = (size - m) // 2
    out[off:off + m, off:off + m] = h
    return out
