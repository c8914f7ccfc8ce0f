"""File formats and the ``photonblind`` command line.

Run with ``python demos/05_files_and_cli.py``. Everything is written to a
temporary directory.
"""

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from photonblind.io import ExperimentConfig, read_counts, read_kernel, write_counts, write_kernel
from photonblind.synth import parse_kernel_spec

tmp = Path(tempfile.mkdtemp())

# %% Kernels are text: the side on the first line, then the rows.
h = parse_kernel_spec("motion:7,45", 9)
write_kernel(tmp / "h.txt", h)
print((tmp / "h.txt").read_text().splitlines()[0], "rows follow")
assert np.array_equal(read_kernel(tmp / "h.txt"), h)

# %% Counts go to 16-bit PNG or PGM when they fit, and to .txt otherwise.
y = np.random.default_rng(0).poisson(20.0, (16, 16)).astype(float)
write_counts(tmp / "y.png", y)
assert np.array_equal(read_counts(tmp / "y.png"), y)

# %% Experiment configs are key=value text and round-trip exactly.
cfg = ExperimentConfig(inputs=["chart:96"], alphas=[20.0], kernels=["gauss:2,1,30"],
                       variants=["full", "no_denoiser"], out_dir=str(tmp / "bench"))
print(cfg.to_text().splitlines()[:6])
assert ExperimentConfig.from_text(cfg.to_text()) == cfg


# %% The same pipeline through the command line.
def cli(*args):
    cmd = [sys.executable, "-m", "photonblind.cli", *args]
    out = subprocess.run(cmd, capture_output=True, text=True)
    print("$ photonblind", " ".join(args), "->", out.returncode)
    return out


cli("simulate", "--image", "chart:96", "--kernel", "gauss:2,1,30", "--kernel-size", "9",
    "--alpha", "20", "--seed", "1", "--out", str(tmp / "sim"))
cli("deblur", "--y", str(tmp / "sim" / "y.png"), "--alpha", "20", "--kernel-size", "9",
    "--reference", str(tmp / "sim" / "x_true.png"), "--out", str(tmp / "deblur"))
print((tmp / "deblur" / "report.txt").read_text())
out = cli("evaluate", "--x-hat", str(tmp / "deblur" / "x_hat.png"),
          "--x-true", str(tmp / "sim" / "x_true.png"),
          "--h-hat", str(tmp / "deblur" / "h_hat.txt"), "--h-true", str(tmp / "sim" / "h_true.txt"))
print(out.stdout)
print(cli("grad-check", "--n", "5").stdout)
