"""Exception types raised across the package."""


class DegenerateKernelError(ValueError):
    """A kernel has no positive mass left after clipping."""


class DegenerateInputError(ValueError):
    """An input image carries no usable signal (all zero or constant)."""


class BlindRunAborted(RuntimeError):
    """The blind iteration hit a degenerate kernel and stopped early.

    The partial :class:`~photonblind.blind.RunReport` is attached as
    ``report``; its ``final_kernel`` is the lowest-loss kernel seen so far.
    """

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report
