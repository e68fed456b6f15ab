"""
Exception hierarchy for the upgrade pricing toolkit.

Negative checker verdicts are values, not exceptions. These classes are
raised only where an operation cannot produce its result at all.
"""


class UpgradePricingError(Exception):
    """Base class for every error raised by this package."""


# Instances

class InstanceError(UpgradePricingError):
    """Raw instance data cannot be turned into a valid Instance."""


class NegativeValue(InstanceError):
    """Some marginal value theta_i^k is negative."""


class BadDistribution(InstanceError):
    """Some f_i is not strictly positive, or the f_i do not sum to one."""


class ShapeMismatch(InstanceError):
    """Declared n and d disagree with the supplied matrices."""


# Menus

class MenuError(UpgradePricingError):
    """A mechanism has no upgrade menu representation."""


class NotChainOrdered(MenuError):
    """Allocations cannot be totally ordered component-wise."""


class InconsistentPricing(MenuError):
    """Two types receive the same allocation at different transfers."""


# Conditions and ironing

class BadCutoff(UpgradePricingError):
    """Cutoffs are outside the argmax sets or not nondecreasing."""


class TooLarge(UpgradePricingError):
    """Exhaustive search requested on too many types."""


class AmbiguousContainment(UpgradePricingError):
    """A type lies in overlapping intervals of neighbouring items, neither containing the other."""

    def __init__(self, type_index: int, first, second):
        self.type_index = type_index
        self.first = first
        self.second = second
        super().__init__(
            f"type {type_index} lies in {first} and {second}, neither contains the other"
        )


class NoRoot(UpgradePricingError):
    """The ironing equation for some type has no solution in [0, 1]."""

    def __init__(self, type_index: int, item: int, message: str):
        self.type_index = type_index
        self.item = item
        super().__init__(f"type {type_index}, item {item}: {message}")


# Pricing

class PricingError(UpgradePricingError):
    """Conversion between upgrade menus and separate prices failed."""


class NotMonotone(PricingError):
    """The type space is not component-wise monotone in index order."""


class FractionalBundle(PricingError):
    """A menu bundle is not a 0/1 vector."""


class EmptyBundleTier(PricingError):
    """A menu bundle is chosen by no type."""


class InfeasiblePriceBounds(PricingError):
    """An upgrade price falls outside the bounds implied by the buyers."""


# Linear programming

class LpError(UpgradePricingError):
    """A linear program that must have an optimum did not."""


class LpUnbounded(LpError):
    pass


class LpInfeasible(LpError):
    pass


# Files

class FormatError(UpgradePricingError):
    """An input file does not follow the expected JSON schema."""


class InvalidMechanism(UpgradePricingError):
    """Allocation entries outside [0, 1] or shapes that disagree with the instance."""
