"""Exception hierarchy shared by every qfp module."""


class QfpError(Exception):
    """Base class for domain errors; the CLI maps these to exit code 1."""

    code = "qfp-error"


class MatrixFormatError(QfpError):
    code = "matrix-format"


class NotSymmetric(MatrixFormatError):
    code = "not-symmetric"

    def __init__(self, i, j, aij, aji):
        super().__init__(f"matrix is not symmetric at (i, j) = ({i}, {j}): {aij} != {aji}")
        self.i, self.j = i, j


class DimensionMismatch(QfpError):
    code = "dimension-mismatch"


class NoUniqueSolution(QfpError):
    code = "no-unique-solution"


class NoOffDiagonalSubmatrix(QfpError):
    code = "no-offdiagonal-submatrix"


class NotOffDiagRank1(QfpError):
    code = "not-offdiag-rank-1"


class NotOffDiagRank2(QfpError):
    code = "not-offdiag-rank-2"


class CaseMismatch(QfpError):
    code = "case-mismatch"


class InternalInconsistency(QfpError):
    """A structural identity that should always hold was violated."""

    code = "internal-inconsistency"


class NoQuintuple(QfpError):
    code = "no-quintuple"


class NonIntegralAssembly(QfpError):
    code = "non-integral-assembly"


class NotCoprime(QfpError):
    code = "not-coprime"


class ModulusTooLarge(QfpError):
    code = "modulus-too-large"


class BudgetExceeded(QfpError):
    code = "budget-exceeded"


class DegenerateSamples(QfpError):
    code = "degenerate-samples"


class SplitUnavailable(QfpError):
    code = "split-unavailable"


class PTooLarge(QfpError):
    code = "p-too-large"
