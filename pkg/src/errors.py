class MlbError(Exception):
    """Base class for every error raised by the workbench."""


class ScenarioError(MlbError, ValueError):
    pass


class InvalidActionError(MlbError, ValueError):
    pass


class DimensionMismatchError(MlbError, ValueError):
    pass


class DivergenceError(MlbError, ArithmeticError):
    """Raised when non-finite gradients reach an optimizer (diverged run)."""


class ReplayUnderflowError(MlbError, ValueError):
    pass


class ClusteringError(MlbError, ValueError):
    pass


class MissingScoreError(MlbError, ValueError):
    pass


class ConfigError(MlbError, ValueError):
    def __init__(self, problems):
        # problems: {field_name: message}
        if isinstance(problems, str):
            problems = {"config": problems}
        self.problems = dict(problems)
        detail = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"Invalid config ({detail})")
