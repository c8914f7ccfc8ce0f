"""Finite-difference conformance check of the kernel gradient."""

from dataclasses import dataclass, field

import numpy as np

from .denoise import denoise
from .fields import project_kernel
from .poisson import simulate
from .solver import SolverConfig, fd_grad_oracle, loss_and_grad, make_solver, relative_max_error

ALPHAS = (10.0, 20.0, 40.0)


@dataclass
class GradCheckReport:
    n_instances: int
    image_size: int
    kernel_size: int
    unroll_steps: int
    method: str
    errors: list = field(default_factory=list)

    @property
    def max_error(self):
        return max(self.errors) if self.errors else 0.0

    def passed(self, tol=1e-4):
        return self.max_error <= tol

    def summary(self):
        return (f"instances={self.n_instances} size={self.image_size} M={self.kernel_size} "
                f"K={self.unroll_steps} solver={self.method} "
                f"max_rel_error={self.max_error:.3e}")


def random_instance(rng, image_size, kernel_size, alpha):
    """A random latent image, kernel, Poisson observation and denoised target."""
    x = rng.uniform(0.05, 0.95, (image_size, image_size))
    h = project_kernel(rng.uniform(0.0, 1.0, (kernel_size, kernel_size)))
    y = simulate(x, h, alpha, int(rng.integers(2**31)))
    return y, denoise(y, alpha), h


def gradient_check(n=50, image_size=24, kernel_size=7, unroll_steps=4, seed=0,
                   method="richardson_lucy", boundary="circular", fd_step=1e-6):
    """Compare :func:`loss_and_grad` with central differences on random instances.

    Image and kernel sides are drawn up to the given maxima (odd kernels of
    at least 3), K up to ``unroll_steps``, and alpha from {10, 20, 40}.

    Returns
    -------
    GradCheckReport
    """
    rng = np.random.default_rng(seed)
    report = GradCheckReport(n, image_size, kernel_size, unroll_steps, method)
    k_sizes = [m for m in range(3, kernel_size + 1, 2)] or [kernel_size]
    for _ in range(n):
        m = int(rng.choice(k_sizes))
        size = int(rng.integers(max(m, image_size // 2), image_size + 1))
        steps = int(rng.integers(1, unroll_steps + 1))
        alpha = float(rng.choice(ALPHAS))
        cfg = SolverConfig(unroll_steps=steps, boundary=boundary, method=method)
        solver = make_solver(cfg)
        y, g, h = random_instance(rng, size, m, alpha)
        _, grad = loss_and_grad(y, g, h, alpha, cfg, solver)
        fd = fd_grad_oracle(y, g, h, alpha, cfg, fd_step, solver)
        report.errors.append(relative_max_error(grad, fd))
    return report
