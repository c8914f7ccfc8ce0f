"""Unsupervised blind deconvolution of photon-limited images.

The kernel is fitted by differentiating through an unrolled Richardson-Lucy
solver, with a classical Poisson denoiser supplying the fitting target.
"""

from .blind import BlindConfig, RunReport, run, run_ablation, shrinkage
from .conv import ConvPlan, convolve_circular, correlate_circular
from .denoise import DenoiseConfig, denoise
from .errors import BlindRunAborted, DegenerateInputError, DegenerateKernelError
from .fields import project_kernel
from .kernel_init import GaussianBlurParams, initial_kernel, render_gaussian_kernel
from .metrics import MetricReport, evaluate_pair, kernel_mae, psnr, ssim
from .poisson import estimate_photon_level, poisson_nll, simulate
from .solver import SolverConfig, loss_and_grad, make_solver, solve

__version__ = "0.1.0"

__all__ = [
    "BlindConfig", "RunReport", "run", "run_ablation", "shrinkage",
    "ConvPlan", "convolve_circular", "correlate_circular",
    "DenoiseConfig", "denoise",
    "BlindRunAborted", "DegenerateInputError", "DegenerateKernelError",
    "project_kernel",
    "GaussianBlurParams", "initial_kernel", "render_gaussian_kernel",
    "MetricReport", "evaluate_pair", "kernel_mae", "psnr", "ssim",
    "estimate_photon_level", "poisson_nll", "simulate",
    "SolverConfig", "loss_and_grad", "make_solver", "solve",
]
