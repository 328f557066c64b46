"""Exception taxonomy shared by the library and the command line.

Each class carries the process exit code the CLI reports for it.
"""


class QIndexError(Exception):
    exit_code = 1


class UsageError(QIndexError):
    exit_code = 2


class InputError(QIndexError):
    exit_code = 3


class MalformedInput(InputError):
    pass


class InconsistentData(InputError):
    pass


class NoQuadFound(InputError):
    pass


class SingularSystem(InputError):
    pass


class NumericDivergence(QIndexError):
    exit_code = 4


class PoleProximity(NumericDivergence):
    pass


class PinchDetected(NumericDivergence):
    pass


class NoConvergence(NumericDivergence):
    pass


class NonConvergent(NumericDivergence):
    pass


class NoStrictAngles(NumericDivergence):
    pass


class VerificationFailure(QIndexError):
    exit_code = 5


class AmbiguousConvention(VerificationFailure):
    pass
