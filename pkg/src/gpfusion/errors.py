"""Exception hierarchy shared by every module of the package."""


class GPFusionError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(GPFusionError, ValueError):
    pass


class RankDeficient(GPFusionError, ArithmeticError):
    """The column submatrix handed to a least-squares solve is numerically rank deficient."""

    def __init__(self, support, rank):
        self.support = tuple(support)
        self.rank = rank
        super().__init__(
            f"submatrix on {len(self.support)} columns has numerical rank {rank}"
        )


class InsufficientCandidates(GPFusionError, ValueError):
    pass


class InvalidInitialSupport(GPFusionError, ValueError):
    pass


class ConfigInvalid(GPFusionError, ValueError):
    pass


class EmptyAggregate(GPFusionError, ValueError):
    pass
