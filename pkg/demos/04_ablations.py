"""Turning parts of the scheme off: denoiser, l1 prior, line search, iterations.

Run with ``python demos/04_ablations.py``.
"""

# %%
import numpy as np

from photonblind import BlindConfig, BlindRunAborted, kernel_mae, psnr, run, run_ablation, simulate
from photonblind.blind import initialize
from photonblind.synth import parse_kernel_spec, shapes_chart

cases = []
for i, spec in enumerate(["gauss:3,1,30", "motion:9,0", "gauss:2.5,1.2,120", "motion:11,60"]):
    x = shapes_chart(128, seed=20 + i)
    h = parse_kernel_spec(spec, 15)
    cases.append((x, h, simulate(x, h, 20.0, seed=40 + i)))

base = BlindConfig(kernel_size=15)


def score(**overrides):
    ps, ms = [], []
    for x, h, y in cases:
        try:
            rep = run_ablation(y, 20.0, base, **overrides)
        except BlindRunAborted as exc:
            rep = exc.report
        ps.append(psnr(rep.final_image, x))
        ms.append(kernel_mae(rep.final_kernel, h)[0])
    return np.mean(ps), np.mean(ms)


# %% Initialization only: the Gaussian fit and one solve, no iterations.
ps, ms = [], []
for x, h, y in cases:
    _, h0, x0, _ = initialize(y, 20.0, base)
    ps.append(psnr(x0, x))
    ms.append(kernel_mae(h0, h)[0])
print(f"{'init only':22s} psnr={np.mean(ps):.2f}  mae={np.mean(ms):.3e}")

# %% The full scheme and its ablations.
for name, kw in [("full", {}), ("no denoiser", {"denoiser_enabled": False}),
                 ("no l1 prior", {"l1_enabled": False}),
                 ("no backtracking", {"backtracking": False}),
                 ("5 iterations", {"max_iterations": 5})]:
    p, m = score(**kw)
    print(f"{name:22s} psnr={p:.2f}  mae={m:.3e}")
