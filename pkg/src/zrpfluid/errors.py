"""Exception hierarchy shared by all zrpfluid modules."""


class ZRPFluidError(Exception):
    """Base class for every error raised by zrpfluid."""


class ModelError(ZRPFluidError, ValueError):
    """Invalid user input: rates, subsets, simplex points, jump-rate tables."""


class EmptySiteSet(ModelError):
    pass


class NonZeroDiagonal(ModelError):
    def __init__(self, index, label):
        self.index = index
        self.label = label
        super().__init__(f"NonZeroDiagonal at sites[{index}] ({label!r})")


class NotIrreducible(ModelError):
    """The support digraph of the rates is not strongly connected.

    ``source`` cannot reach ``target``; ``reachable`` is the set of labels
    reachable from ``source`` and ``rest`` its complement.
    """

    def __init__(self, source, target, reachable, rest):
        self.source = source
        self.target = target
        self.reachable = tuple(reachable)
        self.rest = tuple(rest)
        super().__init__(
            f"NotIrreducible: no path from {source!r} to {target!r}; "
            f"partition {list(self.reachable)} | {list(self.rest)}"
        )


class UnknownSite(ModelError):
    pass


class NotStochastic(ModelError):
    pass


class DriftNotBalanced(ModelError):
    pass


class TooManySites(ModelError):
    pass


class HorizonExceeded(ModelError):
    pass


class SingularSolve(ZRPFluidError, ArithmeticError):
    """A linear system was numerically rank deficient."""


class NonTermination(ZRPFluidError, RuntimeError):
    """Fluid construction produced more breakpoints than sites (tolerance misconfigured)."""


class ConsistencyFailure(ZRPFluidError, RuntimeError):
    """Two independent computations of the same quantity disagree."""
