"""Blind kernel estimation from a single photon-limited image.

Run with ``python demos/03_blind_deconvolution.py``.
"""

# %%
import numpy as np

from photonblind import BlindConfig, kernel_mae, psnr, run, simulate, ssim
from photonblind.synth import parse_kernel_spec, shapes_chart

x = shapes_chart(128, seed=7)
h_true = parse_kernel_spec("gauss:3,1.2,35", 15)
y = simulate(x, h_true, 40.0, seed=11)

# %% The photon level is estimated when not given. Here it is passed in.
cfg = BlindConfig(kernel_size=15, max_iterations=20)
rep = run(y, 40.0, cfg, reference=x)
p = rep.init_params
print(f"Gaussian init: sigma_major={p.sigma_major:.2f} sigma_minor={p.sigma_minor:.2f} "
      f"theta={np.degrees(p.theta):.1f} deg")

# %% Loss, PSNR and accepted step per iteration. With backtracking on, the
# loss never rises. Near a stationary point of the loss, the pull toward the
# thresholded copy v raises it at every trial length, so later steps are
# rejected (step 0) and the kernel stays where the first steps left it.
for r in rep.per_iteration[:4] + rep.per_iteration[4::4]:
    print(f"k={r.k:2d}  loss={r.loss:.6f}  psnr={r.psnr:.3f}  step={r.step}")

# %% Kernel error after aligning the estimate to the truth over circular shifts.
mae0, _ = kernel_mae(rep.initial_kernel, h_true)
mae1, shift = kernel_mae(rep.final_kernel, h_true)
print(f"kernel MAE  init={mae0:.3e}  final={mae1:.3e}  shift={shift}")
print(f"image PSNR  init={psnr(rep.initial_image, x):.2f}  final={psnr(rep.final_image, x):.2f}")
print(f"image SSIM  init={ssim(rep.initial_image, x):.4f}  final={ssim(rep.final_image, x):.4f}")

# %% The step size is not stated by the method; a larger one moves further
# before the line search stops it.
for delta in (1e-2, 1e-1, 1.0):
    r = run(y, 40.0, BlindConfig(kernel_size=15, step_size=delta))
    print(f"step_size={delta:5.2f}  kernel MAE={kernel_mae(r.final_kernel, h_true)[0]:.4e}  "
          f"psnr={psnr(r.final_image, x):.3f}")

# %% The estimated kernel, as text.
np.set_printoptions(precision=3, suppress=True, linewidth=140)
print(rep.final_kernel[4:11, 4:11])
