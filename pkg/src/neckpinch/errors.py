"""Exception types shared across the package."""


class NeckpinchError(Exception):
    """Base class for all library errors."""


class DegenerateMatrix(NeckpinchError):
    pass


class IdentityInput(NeckpinchError):
    pass


class DegenerateGeodesic(NeckpinchError):
    pass


class NoAxis(NeckpinchError):
    pass


class BranchAmbiguity(UserWarning):
    """Warning: an elliptic of angle pi has two natural logarithms."""


class UnknownGenerator(NeckpinchError):
    pass


class BadDimensions(NeckpinchError):
    pass


class TargetMismatch(NeckpinchError):
    pass


class BoundaryMismatch(NeckpinchError):
    pass


class NonCommutingTwist(NeckpinchError):
    pass


class NoHyperbolicGenerator(NeckpinchError):
    pass


class NotConvergentInChi(NeckpinchError):
    pass


class NormalizationFailure(NeckpinchError):
    def __init__(self, case, message=""):
        self.case = case
        super().__init__(f"case {case}: {message}")


class BadGluing(NeckpinchError):
    def __init__(self, edges, message=""):
        self.edges = edges
        super().__init__(f"edges {edges}: {message}")


class OpenPath(NeckpinchError):
    pass


class NotOrderTwo(NeckpinchError):
    pass


class ZeroPeriod(NeckpinchError):
    pass


class NonPositiveDistance(NeckpinchError):
    pass


class RootBracketFailure(NeckpinchError):
    def __init__(self, interval, message=""):
        self.interval = interval
        super().__init__(f"no bracket on {interval}: {message}")


class BranchSelectionFailure(NeckpinchError):
    pass


class SolverFailure(NeckpinchError):
    def __init__(self, index, message=""):
        self.index = index
        super().__init__(f"sample {index}: {message}")


class ConfigError(NeckpinchError):
    pass
