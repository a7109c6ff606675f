"""Exception hierarchy.

Input problems derive from ``InvalidInput`` (also a ``ValueError``); numerical
failures derive from ``ComputationError``.  The CLI maps the former to exit
code 2 and the latter to exit code 1.
"""


class TransportError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(TransportError, ValueError):
    pass


class ComputationError(TransportError, ArithmeticError):
    pass


# model
class NonHermitianSample(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class EmptyLeads(InvalidInput):
    pass


class BadBeta(InvalidInput):
    pass


class RootFindFailure(ComputationError):
    pass


# lead
class OutOfBand(InvalidInput):
    pass


class BranchError(InvalidInput):
    pass


# scattering
class SingularEffectiveHamiltonian(ComputationError):
    pass


class UnitarityViolation(ComputationError):
    pass


class NodeError(ComputationError):
    """Wraps a per-node failure of an energy sweep; ``index`` is the node."""

    def __init__(self, index, eps, cause):
        super().__init__(f"node {index} (eps={eps!r}): {cause}")
        self.index = index
        self.eps = eps
        self.cause = cause


# numerics
class QuadratureFailure(ComputationError):
    pass


class BracketFailure(ComputationError):
    pass


# transport / fcs
class EpUndefined(ComputationError):
    pass


class NotTRI(InvalidInput):
    pass


class DeterminantNotPositive(ComputationError):
    pass


class WrongShape(InvalidInput):
    pass


# timeevo
class PacketNotResolved(InvalidInput):
    pass


# fock
class SingularGenerator(InvalidInput):
    pass


class OracleMismatch(ComputationError):
    pass


class TooLarge(InvalidInput):
    pass


# cli
class ConfigError(InvalidInput):
    pass
