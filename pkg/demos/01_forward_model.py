"""Photon-limited observations: blur, Poisson counts, and the denoised target.

Run with ``python demos/01_forward_model.py``.
"""

# %%
import numpy as np

from photonblind import denoise, estimate_photon_level, psnr, simulate
from photonblind.synth import parse_kernel_spec, shapes_chart

# %% A latent image in [0, 1] and a tilted Gaussian blur.
x = shapes_chart(128, seed=0)
h = parse_kernel_spec("gauss:3,1.2,30", 15)
print("latent range", x.min(), x.max(), "kernel sum", h.sum())

# %% y = Poisson(alpha * h * x). Fewer photons means a noisier picture.
for alpha in (10.0, 20.0, 40.0):
    y = simulate(x, h, alpha, seed=1)
    print(f"alpha={alpha:4.0f}  mean count={y.mean():.2f}  "
          f"estimated alpha={estimate_photon_level(y):.2f}  "
          f"psnr(y/alpha, x)={psnr(np.clip(y / alpha, 0, 1), x):.2f} dB")

# %% The estimator assumes a mean intensity of 0.33, so it is only exact
# for images of that brightness.
print("true mean intensity", x.mean())

# %% The denoiser (Anscombe transform, TV, inverse) gives the smooth but
# still blurred target G(y) that the kernel is fitted against.
y = simulate(x, h, 20.0, seed=1)
g = denoise(y, 20.0)
from photonblind import convolve_circular  # noqa: E402

blurred = convolve_circular(x, h)
print(f"psnr(y/alpha, h*x) = {psnr(np.clip(y / 20, 0, 1), blurred):.2f} dB")
print(f"psnr(G(y),    h*x) = {psnr(g, blurred):.2f} dB")
