"""Exception hierarchy shared by all musyn modules."""


class MusynError(Exception):
    """Base class for all musyn errors."""


class DimensionMismatch(MusynError):
    pass


class SingularAtFrequency(MusynError):
    def __init__(self, omega, msg=None):
        self.omega = omega
        super().__init__(msg or f"(jwI - A) is numerically singular at omega={omega}")


class UnstableSystem(MusynError):
    pass


class AlgebraicLoop(MusynError):
    pass


class NotHermitian(MusynError):
    pass


class SolverFailure(MusynError):
    def __init__(self, msg, omega=None, index=None):
        self.omega = omega
        self.index = index
        super().__init__(msg)


class NotStabilizable(MusynError):
    pass


class NotDetectable(MusynError):
    pass


class ReconstructionIllConditioned(MusynError):
    pass


class BracketExhausted(MusynError):
    pass


class InfeasibleOverbound(MusynError):
    pass


class NumericalRooting(MusynError):
    pass


class GridMismatch(MusynError):
    pass


class RankDeficient(MusynError):
    def __init__(self, omega, model_index, msg=None):
        self.omega = omega
        self.model_index = model_index
        super().__init__(
            msg
            or f"residual equations rank deficient at omega={omega}, model {model_index}"
        )


class IterationError(MusynError):
    """Wraps a failure inside DK-iteration with the iteration index."""

    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {cause}")
