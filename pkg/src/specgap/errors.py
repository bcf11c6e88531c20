"""Exception hierarchy shared by all modules."""


class SpecgapError(Exception):
    """Base class; the CLI maps these to exit code 1."""

    module = "specgap"

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class DomainError(SpecgapError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DivergentSymbolError(SpecgapError):
    module = "core_model"


class ClassificationIndeterminate(SpecgapError):
    module = "core_model"


class DivergentCouplingError(SpecgapError):
    """m is infinite because the potential has non-zero mean."""

    module = "weak_coupling"


class QuadratureError(SpecgapError):
    pass


class ShapeMismatch(SpecgapError, ValueError):
    module = "operator_grid"


class NoRootError(SpecgapError):
    """No bracket for mu_+(lambda) = 1/sigma: no negative eigenvalue detected.

    Informative outcome rather than a failure (CLI exit code 2).
    """

    module = "eigensolve"


class ContractionError(SpecgapError):
    module = "halfline_shooting"


class StepSizeUnderflow(SpecgapError):
    module = "halfline_shooting"


class MissingZeroCrossing(SpecgapError):
    module = "halfline_shooting"


class ScenarioError(SpecgapError):
    """Scenario file failed validation; ``problems`` lists every violation."""

    module = "cli"

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
