"""Exception hierarchy shared by all gf2synth modules."""


class GF2SynthError(Exception):
    """Base class for every error raised by this package."""


class ZeroModulus(GF2SynthError, ZeroDivisionError):
    pass


class ZeroInverse(GF2SynthError, ZeroDivisionError):
    pass


class PatternParityMismatch(GF2SynthError, ValueError):
    pass


class ParseError(GF2SynthError, ValueError):
    """Malformed polynomial, circuit or formula text.

    ``line`` is the 1-based line number when the input was multi-line.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WidthMismatch(GF2SynthError, ValueError):
    pass


class NonlinearGate(GF2SynthError, ValueError):
    pass


class SingularMatrix(GF2SynthError, ValueError):
    pass


class PolyShapeUnsupported(GF2SynthError, ValueError):
    pass


class StrategyShapeMismatch(GF2SynthError, ValueError):
    pass


class BadFamilyParam(GF2SynthError, ValueError):
    pass


class FormulaInvalid(GF2SynthError, ValueError):
    pass


class UnsupportedGate(GF2SynthError, ValueError):
    pass


class VerificationFailed(GF2SynthError):
    """A circuit disagreed with its oracle; ``witness`` holds the failing input."""

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class NoPolynomialFound(GF2SynthError, LookupError):
    pass
