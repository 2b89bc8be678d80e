"""Exception types raised by mamiso."""


class MamisoError(Exception):
    """Base class for library-specific failures."""


class SingularGramError(MamisoError):
    """Channel Gram matrix H^H H is singular or too ill-conditioned to invert."""


class BracketingError(MamisoError):
    """Bisection failed to bracket the power-constraint multiplier."""
