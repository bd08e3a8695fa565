"""Exception hierarchy shared by all modules."""


class AbelEquivError(Exception):
    """Base class for every error raised by this package."""


# jet arithmetic

class JetError(AbelEquivError, ValueError):
    pass


class BasePointMismatch(JetError):
    pass


class OrderMismatch(JetError):
    pass


class OrderTooLow(JetError):
    pass


class DivisionByZeroConstantTerm(JetError, ZeroDivisionError):
    pass


class NonInvertibleJet(JetError):
    pass


class DomainError(JetError):
    pass


# expressions

class ExpressionSyntaxError(AbelEquivError, ValueError):
    """Malformed expression text.

    ``offset`` is the byte offset (UTF-8) of the offending token and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, text="", offset=0, expected=()):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        detail = message
        if expected:
            detail += " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(f"{detail} at byte offset {offset}")


class NonIntegerExponent(ExpressionSyntaxError):
    pass


class EvalDomainError(AbelEquivError, ValueError):
    """Evaluation left the domain of a function; ``subexpression`` names the culprit."""

    def __init__(self, message, subexpression=""):
        self.subexpression = subexpression
        if subexpression:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


# equations

class EquationFormatError(AbelEquivError, ValueError):
    pass


class UnknownFamily(EquationFormatError):
    pass


class MissingCoefficient(EquationFormatError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing coefficient '{name}'")


class UnexpectedKey(EquationFormatError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unexpected key '{name}'")


class WrongFamily(AbelEquivError, ValueError):
    pass


# transformations

class NonInvertibleAtPoint(AbelEquivError, ValueError):
    pass


class NotCanonical(AbelEquivError, ValueError):
    pass


# invariants and equivalence

class TresseDenominatorVanishes(AbelEquivError, ArithmeticError):
    pass


class FitFailed(AbelEquivError, RuntimeError):
    pass


class FamilyMismatch(AbelEquivError, ValueError):
    pass
