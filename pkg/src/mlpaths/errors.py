"""Exception hierarchy.

Everything a solver can raise for numerical reasons derives from
:class:`NumericalError`; the CLI maps those to exit code 2.
"""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure."""


class CollapsedPathError(NumericalError):
    def __init__(self, length):
        super().__init__(f"collapsed path (total length {length:.3e})")
        self.length = length


class DriftSingularityError(NumericalError):
    def __init__(self, where=""):
        super().__init__("drift singularity" + (f" at {where}" if where else ""))


class BlowUpError(NumericalError):
    def __init__(self, what="state"):
        super().__init__(f"blow-up: non-finite {what}")


class FixedPointTouchError(NumericalError):
    def __init__(self, index):
        super().__init__(f"path touches fixed point; infinite time (node {index})")
        self.index = index


class DegenerateNodeError(NumericalError):
    def __init__(self, index, reason=""):
        msg = f"degenerate node {index}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.index = index


class ConvergenceError(NumericalError):
    """Iteration cap hit, or divergence; carries the partial history."""

    def __init__(self, message, history=None, state=None):
        super().__init__(message)
        self.history = [] if history is None else list(history)
        self.state = state


class AmbiguousSeparatrixError(NumericalError):
    def __init__(self, survivors):
        survivors = sorted(int(j) for j in survivors)
        super().__init__(f"ambiguous separatrix point; surviving indices {survivors}")
        self.survivors = survivors


class OrbitEscapedError(NumericalError):
    def __init__(self, time):
        super().__init__(f"orbit escaped at t={time:.4g}")
        self.time = time


class NotInBasinError(NumericalError):
    def __init__(self, steps):
        super().__init__(f"not in basin: target not reached after {steps} steps")
        self.steps = steps


class BadCrossingPointError(NumericalError):
    def __init__(self, detail=""):
        super().__init__("bad crossing point" + (f": {detail}" if detail else ""))


class NotOrthogonalTypeError(ValueError):
    def __init__(self, name):
        super().__init__(f"system {name!r} is not orthogonal-type (no decomposition)")


class NoFixedPointError(ValueError):
    def __init__(self, kappa, n_period):
        super().__init__(
            f"no such fixed point: 2*pi*sqrt(kappa)={6.283185307179586 * kappa ** 0.5:.4f}"
            f" exceeds period 1/{n_period}"
        )
