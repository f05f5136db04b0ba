"""Exception hierarchy shared by every module (and by the compiled core)."""


class LocalFracError(Exception):
    """Base class for all errors raised by localfrac."""


class InputError(LocalFracError):
    """Bad user input: unknown names, malformed flags, violated preconditions."""


class DomainError(InputError, ValueError):
    """A function was evaluated outside its natural domain."""


class PoleError(DomainError):
    """Gamma evaluated at a non-positive integer."""


class ParseError(InputError):
    """Expression text could not be parsed.

    ``offset`` is the character offset where parsing failed and ``expected``
    describes what the parser was looking for.
    """

    def __init__(self, offset: int, expected: str, text: str = ""):
        self.offset = offset
        self.expected = expected
        self.text = text
        super().__init__(f"at offset {offset}: expected {expected}")


class UnsupportedFormError(InputError):
    """Symbolic differentiation is not available for this expression."""


class NumericalError(LocalFracError, ArithmeticError):
    """A numerical procedure failed (overflow, non-convergence, stalled refinement)."""


class OverflowGuardError(NumericalError):
    """A value would leave the double-precision range."""


class NonConvergenceError(NumericalError):
    """An iterative or series procedure did not reach its tolerance."""


class QuadratureError(NumericalError):
    """Adaptive quadrature stalled (typically a non-integrable singularity)."""


class StepUnderflowError(NumericalError):
    """The ODE step size shrank below the representable minimum."""


class ProgramError(Exception):
    """Raised by the evaluation core; carries the failing instruction index.

    Translated to :class:`DomainError` by :mod:`localfrac.expr`.
    """

    def __init__(self, index: int, code: int):
        self.index = index
        self.code = code
        super().__init__(index, code)


# Error codes used by the compiled and pure-Python program evaluators.
ERR_DIV_ZERO = 1
ERR_ZERO_NEG_POW = 2
ERR_NEG_FRAC_POW = 3
ERR_LOG_DOMAIN = 4
ERR_SQRT_DOMAIN = 5
ERR_NONFINITE = 6

ERROR_MESSAGES = {
    ERR_DIV_ZERO: "division by zero",
    ERR_ZERO_NEG_POW: "zero raised to a negative power",
    ERR_NEG_FRAC_POW: "negative base raised to a non-integer power",
    ERR_LOG_DOMAIN: "logarithm of a non-positive number",
    ERR_SQRT_DOMAIN: "square root of a negative number",
    ERR_NONFINITE: "overflow (non-finite result)",
}
