"""Unsupervised blind kernel estimation by half-quadratic splitting.

The kernel is the only unknown. Each iteration takes one gradient step on
``||G(y) - h * F(y, h)||^2 + mu/2 ||h - v||^2`` (the gradient of the first
term is pulled back through the unrolled non-blind solver), projects the
kernel onto the simplex, then soft-thresholds it into the split variable
``v``. ``mu`` grows and ``gamma`` shrinks by 1% per iteration.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .denoise import DenoiseConfig, denoise
from .errors import BlindRunAborted, DegenerateKernelError
from .fields import as_field, project_kernel
from .kernel_init import initial_kernel
from .metrics import psnr
from .poisson import PHOTON_LEVEL_BETA, estimate_photon_level
from .solver import SolverConfig, evaluate, make_solver, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlindConfig:
    """Settings of the outer iteration.

    ``backtracking`` halves the step (at most ``max_halvings`` times) when a
    step would raise the loss; turning it off gives the plain iteration.
    ``center_gradient`` removes the mean of the loss gradient before the
    step. ``mean_loss_step`` applies ``step_size`` to the per-pixel loss
    rather than the summed one.
    """

    max_iterations: int = 20
    step_size: float = 1e-2
    kernel_size: int = 31
    l1_enabled: bool = True
    denoiser_enabled: bool = True
    backtracking: bool = True
    max_halvings: int = 5
    center_gradient: bool = True
    mean_loss_step: bool = True
    mu0: float = 2.0
    gamma0: float = 1e-3
    schedule_factor: float = 1.01
    beta: float = PHOTON_LEVEL_BETA
    solver: SolverConfig = field(default_factory=SolverConfig)
    denoise: DenoiseConfig = field(default_factory=DenoiseConfig)

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and positive")
        if self.mu0 <= 0 or self.gamma0 < 0 or self.schedule_factor <= 0:
            raise ValueError("need mu0 > 0, gamma0 >= 0, schedule_factor > 0")


@dataclass
class HqsState:
    h: np.ndarray
    v: np.ndarray
    mu: float = 2.0
    gamma: float = 1e-3
    k: int = 0

    def advance(self, factor=1.01):
        """Grow ``mu`` and shrink ``gamma`` by ``factor``; bump the counter."""
        self.mu = self.mu * factor
        self.gamma = self.gamma / factor
        self.k += 1


@dataclass
class IterationRecord:
    k: int
    loss: float
    kernel: np.ndarray
    mu: float
    gamma: float
    psnr: float = None
    step: float = None


@dataclass
class RunReport:
    """Outcome of :func:`run`.

    ``per_iteration[k]`` describes kernel ``h^k``; entry 0 is the
    initialization.
    """

    per_iteration: list
    final_kernel: np.ndarray
    final_image: np.ndarray
    alpha_used: float
    initial_kernel: np.ndarray
    initial_image: np.ndarray
    target: np.ndarray
    init_params: object = None
    aborted: bool = False

    @property
    def losses(self):
        return np.array([r.loss for r in self.per_iteration])


def shrinkage(h, kappa):
    """Soft threshold ``sign(h) * max(|h| - kappa, 0)``."""
    if kappa < 0:
        raise ValueError("threshold must be nonnegative")
    h = np.asarray(h, dtype=np.float64)
    return np.sign(h) * np.maximum(np.abs(h) - kappa, 0.0)


def h_step(state, grad, delta, center=False):
    """``project(h - delta * (grad + mu * (h - v)))``.

    With ``center`` the mean of ``grad`` is removed first. The unrolled
    estimate does not change when the kernel is rescaled, so the uniform
    part of the loss gradient only reflects a flux mismatch between target
    and observation, and the projection would undo it anyway.

    Raises :class:`DegenerateKernelError` if the projection has nothing left.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.h.shape or state.v.shape != state.h.shape:
        raise ValueError("kernel, split variable and gradient shapes differ")
    if center:
        grad = grad - grad.mean()
    return project_kernel(state.h - delta * (grad + state.mu * (state.h - state.v)))


def v_step(state, l1_enabled=True):
    """Soft-threshold ``h`` by ``gamma / mu``, or copy it when the prior is off."""
    if not l1_enabled:
        return state.h.copy()
    return shrinkage(state.h, state.gamma / state.mu)


def _target(y, alpha, cfg):
    if cfg.denoiser_enabled:
        return denoise(y, alpha, cfg.denoise)
    return np.clip(y / alpha, 0.0, 1.0)


def _start(y, alpha, cfg, h_init):
    target = _target(y, alpha, cfg)
    if h_init is None:
        h, params = initial_kernel(target, cfg.kernel_size)
        return target, h, params
    return target, project_kernel(h_init), None


def initialize(y, alpha, cfg=None, h_init=None, solver=None):
    """Target, starting kernel and its non-blind estimate, before any iteration.

    Returns
    -------
    target, h0, x0, params
        ``params`` is the fitted :class:`GaussianBlurParams` (``None`` when
        ``h_init`` is given).
    """
    cfg = cfg or BlindConfig()
    y = as_field(y, "y")
    target, h, params = _start(y, alpha, cfg, h_init)
    return target, h, solve(y, h, alpha, cfg.solver, solver), params


def run(y, alpha=None, cfg=None, reference=None, h_init=None, solver=None):
    """Estimate the blur kernel and latent image from Poisson counts.

    Parameters
    ----------
    y : ndarray
        Observed counts.
    alpha : float, optional
        Photon level; estimated from ``y`` when omitted.
    cfg : BlindConfig, optional
    reference : ndarray, optional
        Ground-truth latent image; if given, PSNR is tracked per iteration.
    h_init : ndarray, optional
        Starting kernel replacing the Gaussian fit.
    solver : NonBlindSolver, optional
        Overrides the solver selected by ``cfg.solver.method``.

    Returns
    -------
    RunReport

    Raises
    ------
    BlindRunAborted
        When a step without backtracking collapses the kernel. The attached
        report carries the lowest-loss kernel seen.
    """
    cfg = cfg or BlindConfig()
    y = as_field(y, "y")
    if alpha is None:
        alpha = estimate_photon_level(y, cfg.beta)
    solver = solver or make_solver(cfg.solver)
    target, h, params = _start(y, alpha, cfg, h_init)
    state = HqsState(h=h, v=h.copy(), mu=cfg.mu0, gamma=cfg.gamma0)

    def score(x):
        return None if reference is None else psnr(x, reference)

    loss, grad, x = evaluate(y, target, h, alpha, cfg.solver, solver)
    # the supplied step applies to the per-pixel loss when mean_loss_step is set
    grad_scale = 1.0 / y.size if cfg.mean_loss_step else 1.0
    records = [IterationRecord(0, loss, h.copy(), state.mu, state.gamma, score(x))]
    init_image = x
    best = (loss, h, x)

    def report(aborted=False):
        return RunReport(records, best[1], best[2] if aborted else x, alpha,
                         records[0].kernel, init_image, target, params, aborted)

    for _ in range(cfg.max_iterations):
        delta = cfg.step_size
        accepted = None
        for _trial in range(cfg.max_halvings + 1 if cfg.backtracking else 1):
            try:
                cand = h_step(state, grad * grad_scale, delta, cfg.center_gradient)
            except DegenerateKernelError:
                if not cfg.backtracking:
                    raise BlindRunAborted(f"kernel collapsed at iteration {state.k}",
                                          report(aborted=True)) from None
                delta /= 2
                continue
            result = evaluate(y, target, cand, alpha, cfg.solver, solver)
            if not cfg.backtracking or result[0] <= loss:
                accepted = (cand, result)
                break
            delta /= 2
        if accepted is None:
            # every trial raised the loss: stay put this iteration
            log.debug("iteration %d: no descent after %d halvings", state.k, cfg.max_halvings)
            delta = 0.0
        else:
            state.h, (loss, grad, x) = accepted
        v = v_step(state, cfg.l1_enabled)
        if not np.any(v):
            v = state.h.copy()
        state.v = v
        state.advance(cfg.schedule_factor)
        records.append(IterationRecord(state.k, loss, state.h.copy(), state.mu,
                                       state.gamma, score(x), delta))
        if loss < best[0]:
            best = (loss, state.h, x)

    out = report()
    out.final_kernel = state.h.copy()
    return out


def run_ablation(y, alpha, cfg, **overrides):
    """:func:`run` with some :class:`BlindConfig` fields replaced."""
    return run(y, alpha, replace(cfg, **overrides))
