"""Circular and symmetric-boundary 2-D convolution with centered kernels.

A kernel of odd side ``M`` has its center pixel at zero displacement, so
convolving with the delta kernel is the identity. Circular convolution is
done in the Fourier domain; :func:`direct_convolve_oracle` is a plain nested
sum kept as ground truth for tests.
"""

import numpy as np

from .fields import as_field, check_kernel, crop_center, pad_symmetric


def _check_sizes(shape, h):
    m = h.shape[0]
    if m > min(shape):
        raise ValueError(f"kernel side {m} exceeds image dimensions {shape}")


def kernel_to_otf(h, shape):
    """Embed a centered kernel in an ``shape`` grid with its center at (0, 0)
    and return the real-FFT spectrum."""
    h = check_kernel(h)
    _check_sizes(shape, h)
    m = h.shape[0]
    c = m // 2
    grid = np.zeros(shape)
    rows = (np.arange(m) - c) % shape[0]
    cols = (np.arange(m) - c) % shape[1]
    grid[np.ix_(rows, cols)] = h
    return np.fft.rfft2(grid)


class ConvPlan:
    """Precomputed kernel spectrum for repeated convolutions at one image size.

    Parameters
    ----------
    h : ndarray, shape (M, M)
        Centered kernel, ``M`` odd.
    shape : tuple of int
        Image shape ``(H, W)`` the plan is valid for.
    """

    def __init__(self, h, shape):
        self.shape = tuple(int(s) for s in shape)
        self.kernel = check_kernel(h).copy()
        self.kernel.setflags(write=False)
        self.otf = kernel_to_otf(self.kernel, self.shape)
        self.otf.setflags(write=False)

    @property
    def kernel_size(self):
        return self.kernel.shape[0]

    def _check(self, img):
        img = as_field(img, "img")
        if img.shape != self.shape:
            raise ValueError(f"plan built for {self.shape}, got image {img.shape}")
        return img

    def convolve(self, img):
        img = self._check(img)
        return np.fft.irfft2(np.fft.rfft2(img) * self.otf, s=self.shape)

    def correlate(self, img):
        """Adjoint of :meth:`convolve`."""
        img = self._check(img)
        return np.fft.irfft2(np.fft.rfft2(img) * np.conj(self.otf), s=self.shape)


def convolve_circular(img, h):
    """Periodic convolution ``sum_j h(j) x(i - j)`` with a centered kernel."""
    img = as_field(img, "img")
    return ConvPlan(h, img.shape).convolve(img)


def correlate_circular(img, h):
    """Periodic correlation, i.e. convolution with the kernel rotated by 180°.

    This is the exact adjoint of :func:`convolve_circular`:
    ``<convolve(x, h), z> == <x, correlate(z, h)>``.
    """
    img = as_field(img, "img")
    return ConvPlan(h, img.shape).correlate(img)


def direct_convolve_oracle(img, h):
    """Nested-loop periodic convolution. Slow; meant for images up to 64x64."""
    img = as_field(img, "img")
    h = check_kernel(h)
    if img.shape[0] > 64 or img.shape[1] > 64:
        raise ValueError("oracle is limited to images of at most 64x64")
    H, W = img.shape
    m = h.shape[0]
    c = m // 2
    out = np.zeros_like(img)
    for i in range(H):
        for j in range(W):
            acc = 0.0
            for a in range(m):
                for b in range(m):
                    acc += h[a, b] * img[(i - (a - c)) % H, (j - (b - c)) % W]
            out[i, j] = acc
    return out


def convolve_symmetric(img, h):
    """Convolution under mirror boundary conditions.

    Pads by ``(M - 1) / 2`` on every side, convolves circularly and crops the
    center back to the input size.
    """
    img = as_field(img, "img")
    h = check_kernel(h)
    _check_sizes(img.shape, h)
    r = h.shape[0] // 2
    padded = pad_symmetric(img, r, r, r, r)
    return crop_center(convolve_circular(padded, h), *img.shape)


def kernel_gradient(upstream, img, size):
    """Gradient of ``<upstream, convolve_circular(img, h)>`` with respect to ``h``.

    Entry ``(a, b)`` is ``sum_i upstream(i) img(i - d)`` with ``d`` the
    displacement of kernel pixel ``(a, b)`` from the center. The same routine
    gives the kernel gradient of a correlation by swapping the two fields.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    img = np.asarray(img, dtype=np.float64)
    shape = img.shape
    xc = np.fft.irfft2(np.fft.rfft2(upstream) * np.conj(np.fft.rfft2(img)), s=shape)
    c = size // 2
    rows = (np.arange(size) - c) % shape[0]
    cols = (np.arange(size) - c) % shape[1]
    return xc[np.ix_(rows, cols)]
