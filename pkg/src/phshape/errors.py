"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the command
line front end when it reports failures.
"""


class PHShapeError(Exception):
    code = "error"


class ModelError(PHShapeError):
    code = "model-error"


class UnsupportedModelError(ModelError):
    code = "unsupported-model"


class DimensionError(PHShapeError, ValueError):
    code = "dimension-error"


class ParameterError(PHShapeError, ValueError):
    code = "parameter-error"


class ConfigurationError(PHShapeError, ValueError):
    code = "configuration-error"


class SingularityError(PHShapeError, ArithmeticError):
    code = "singularity-error"


class WrongSolverError(PHShapeError):
    code = "wrong-solver"


class StepError(PHShapeError, ArithmeticError):
    code = "step-error"


class NumericError(PHShapeError, ArithmeticError):
    code = "numeric-error"


class InputError(PHShapeError, ValueError):
    code = "input-error"


class ParseError(PHShapeError, ValueError):
    code = "parse-error"
