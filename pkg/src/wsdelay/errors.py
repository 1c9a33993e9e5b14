"""Exception types raised across the package.

Every error derives from :class:`WsdelayError`; configuration problems
additionally derive from :class:`ConfigError` so the CLI can map them to
exit code 2, numerical invariant breaches to :class:`NumericalError` (exit
code 3).
"""


class WsdelayError(Exception):
    pass


class ConfigError(WsdelayError, ValueError):
    pass


class NumericalError(WsdelayError, ArithmeticError):
    pass


# potential-model
class NonPositiveWidth(ConfigError):
    pass


class NonFiniteHeight(ConfigError):
    pass


class EmptyGeometry(ConfigError):
    pass


class NegativeRadius(ConfigError):
    pass


# scattering-engine
class EnergyAtThreshold(NumericalError):
    """The energy sits on a layer height, where the local wavenumber vanishes."""


class ReferenceInsideSupport(ConfigError):
    pass


class NonPositiveEnergy(ConfigError):
    pass


# timedelay-core
class NonUnitaryInput(NumericalError):
    pass


class RefinementLimit(NumericalError):
    pass


class OutOfRange(ConfigError):
    pass


# resonance-fit
class InsufficientSamples(ConfigError):
    pass


class NegativeTime(ConfigError):
    pass


# adiabatic-oscillator
class StepTooLarge(ConfigError):
    pass


class TooFewPeriods(NumericalError):
    pass


# wigner-bridge
class OffGridEpsilon(ConfigError):
    pass


class NonUniformGrid(ConfigError):
    pass


# io-cli
class ConfigSyntaxError(ConfigError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownKey(ConfigError):
    pass


class ConstraintViolation(ConfigError):
    pass


class BadHeader(ConfigError):
    pass


class NonMonotonicEnergy(ConfigError):
    pass


class TooFewRows(ConfigError):
    pass
