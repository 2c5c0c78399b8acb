"""Exception hierarchy shared by the library and the command line front end."""


class HelmholtzError(Exception):
    """Base class for all library errors."""


class UsageError(HelmholtzError):
    """Bad user input: malformed expressions, invalid intervals, bad flags."""


class ExpressionSyntaxError(UsageError):
    def __init__(self, message, offset, source=""):
        self.offset = offset
        self.source = source
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class EvaluationError(HelmholtzError):
    """Expression evaluated outside its domain (log of non-positive, overflow, ...)."""

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t!r})"
        super().__init__(message)


class PotentialError(UsageError):
    """Coefficient function violates the phi >= 0, phi != 0 assumption."""


class IntegrationError(HelmholtzError):
    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} at step {step}"
        super().__init__(message)


class ConvergenceError(HelmholtzError):
    pass


class EigenvalueNotBracketed(HelmholtzError):
    """The requested eigenvalue lies above the scanned lambda range."""

    def __init__(self, n, lam_max, turns):
        self.n = n
        self.lam_max = lam_max
        self.turns = turns
        super().__init__(
            f"eigenvalue n={n} not below lambda_max={lam_max:.9g}; "
            f"alpha(b)/pi reached only {turns:.6g}"
        )


class NotSpectral(HelmholtzError):
    """The transfer matrix is not triangular: lambda is not an eigenvalue."""


class SigmaReciprocalMismatch(HelmholtzError):
    pass


class AliasingError(HelmholtzError):
    pass
