"""Exception types shared by the mixture modelling modules."""


class MixtureError(Exception):
    """Base class for every error raised by this package"""


class MixtureInputError(MixtureError, ValueError):
    """Invalid input: non-finite values, empty lists, inconsistent counts"""


class ConfigError(MixtureInputError):
    """Invalid run configuration (schedule, sampler sizes, seeds)"""


class EmptyClassError(MixtureError):
    """A class has no members, so its parameters cannot be re-estimated"""


class CoderError(MixtureError):
    """The message length coder was called with inconsistent arguments"""
