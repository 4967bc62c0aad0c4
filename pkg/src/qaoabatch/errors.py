"""Exception hierarchy shared by every subsystem."""


class QaoaBatchError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(QaoaBatchError, ValueError):
    pass


class CapacityError(QaoaBatchError):
    """Input exceeds a hard size cap (qubits, nodes)."""


class NumericError(QaoaBatchError):
    pass


class PartitionError(QaoaBatchError):
    pass


class ContractError(QaoaBatchError):
    """A precondition on the shape of the input was violated."""


class QasmError(QaoaBatchError):
    """Parse failure with a source location.

    ``line`` and ``column`` are 1-based; either may be 0 when unknown.
    """

    def __init__(self, message, line=0, column=0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UnsupportedGateError(QasmError):
    def __init__(self, gate, line=0, column=0):
        self.gate = gate
        super().__init__(f"unsupported gate '{gate}'", line, column)


class SelectionError(QaoaBatchError):
    """Every candidate backend failed; ``causes`` maps backend name to message."""

    def __init__(self, causes):
        self.causes = dict(causes)
        detail = "; ".join(f"{k}: {v}" for k, v in self.causes.items())
        super().__init__(f"all candidate backends failed ({detail})")


class CalibrationError(QaoaBatchError):
    pass


class ConfigurationError(QaoaBatchError):
    pass


class PoisonedPointError(QaoaBatchError):
    def __init__(self, params):
        self.params = params
        super().__init__(f"objective returned NaN at {params!r}")


class IntegrityError(QaoaBatchError):
    """Checkpoint or journal data failed its checksum or could not be decoded."""


class JobNotFound(QaoaBatchError, KeyError):
    def __str__(self):
        return f"unknown job {self.args[0]!r}"


class SubmissionError(QaoaBatchError):
    def __init__(self, message, circuit_ids=()):
        self.circuit_ids = list(circuit_ids)
        super().__init__(message)


class PayloadTooLarge(SubmissionError):
    """A submission or one of its circuits exceeds the configured size limit."""
