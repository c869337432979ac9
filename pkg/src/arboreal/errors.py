"""Error types shared by every module."""


class ArborealError(Exception):
    pass


class OutOfDomain(ArborealError):
    pass


class EmptyDomain(ArborealError):
    pass


class Inconclusive(ArborealError):
    pass


class Infeasible(ArborealError):
    pass


class PreconditionViolated(ArborealError):
    pass


class LevelOverflow(ArborealError):
    pass


class MalformedCylinder(ArborealError):
    pass


class PrecisionExhausted(ArborealError):
    pass


class HeightExhausted(ArborealError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
