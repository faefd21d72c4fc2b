"""Exception types shared across the solvers and tuners."""


class VlassoError(RuntimeError):
    """Base class for numerical failures raised by this package."""


class ConvergenceError(VlassoError):
    """An iterative routine hit its iteration budget.

    Carries the best iterate found so far (``solution``) and its optimality
    certificate so callers can decide whether the partial result is usable.
    """

    def __init__(self, message, solution=None, certificate=None, history=None):
        super().__init__(message)
        self.solution = solution
        self.certificate = certificate
        self.history = history


class DegenerateBreakpointError(VlassoError):
    """Two path events collide within the breakpoint tolerance.

    The uniqueness theory behind the homotopy assumes the design is in
    generic position; a tie indicates that assumption is violated, so we
    refuse to tie-break silently.  ``indices`` names the offending columns.
    """

    def __init__(self, lam, indices):
        super().__init__(
            f"degenerate breakpoint at lambda={lam:.6g}: "
            f"events for columns {sorted(indices)} coincide"
        )
        self.lam = lam
        self.indices = tuple(indices)


class PathRangeError(VlassoError):
    """A lambda value falls outside the computed path range."""

    def __init__(self, lam, lambda_min, lambda_max):
        super().__init__(
            f"lambda={lam:.6g} outside path range [{lambda_min:.6g}, {lambda_max:.6g}]"
        )
        self.lam = lam
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max


class GammaRangeError(VlassoError):
    """The target level is not attained by the tuning function on the path.

    ``attainable`` is the (lo, hi) range the tuning function covers over the
    computed path, so callers can see how far off the request was.
    """

    def __init__(self, target, attainable):
        lo, hi = attainable
        super().__init__(
            f"target {target:.6g} outside attainable range ({lo:.6g}, {hi:.6g})"
        )
        self.target = target
        self.attainable = attainable
