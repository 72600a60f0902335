class CorefError(RuntimeError):
    exit_code = 2


class ConfigurationError(CorefError):
    exit_code = 1


class DataError(CorefError):
    exit_code = 2


class ParseError(DataError):
    pass


class SerializationError(DataError):
    pass


class VocabularyMismatchError(DataError):
    pass


class ContractViolation(CorefError):
    """Raised when a caller breaks an operation's precondition"""

    exit_code = 2


class TrainingDivergence(CorefError):
    exit_code = 3
