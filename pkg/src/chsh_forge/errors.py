"""Exception types.

Every error carries a short machine-readable ``code`` (``"empty-sample"``,
``"pi-mismatch"``, ...) that is echoed in CLI messages and JSON reports.
"""


class ForgeError(Exception):
    code = "error"

    def __init__(self, message=None, **details):
        self.details = details
        text = self.code if message is None else f"{self.code}: {message}"
        super().__init__(text)


class EmptySampleError(ForgeError, ValueError):
    code = "empty-sample"


class InvalidParameterError(ForgeError, ValueError):
    code = "invalid-parameter"


class InvalidStrategyError(ForgeError, ValueError):
    code = "invalid-strategy"


class LocalityBreachError(ForgeError, ValueError):
    code = "locality-breach-in-local-model"


class MissingSettingError(ForgeError, ValueError):
    code = "missing-setting"


class RequiresDichotomicError(ForgeError, ValueError):
    code = "requires-dichotomic"


class UnboundedValueError(ForgeError, ValueError):
    code = "unbounded-value"


class LengthMismatchError(ForgeError, ValueError):
    code = "length-mismatch"


class InsufficientIterationsError(ForgeError, ValueError):
    code = "insufficient-iterations"


class EmptySubtableError(ForgeError, ValueError):
    code = "empty-subtable"


class TableFormatError(ForgeError, ValueError):
    """Malformed CSV input; ``row`` is 1-based counting the header line."""

    code = "malformed-table"

    def __init__(self, message, row=None, column=None):
        super().__init__(message, row=row, column=column)
        self.row = row
        self.column = column


class ContractBreach(ForgeError):
    """A model broke its declared contract while a run was in progress."""

    code = "contract-breach"


class SettingLeakageError(ContractBreach):
    code = "setting-leakage"


class PIMismatchError(ForgeError):
    """Column multisets too different for a parameter-independence step."""

    code = "pi-mismatch"

    def __init__(self, step, discrepancy, tolerance, audits=(), table=None):
        super().__init__(
            f"step {step}: discrepancy {discrepancy} > tolerance {tolerance}",
            step=step, discrepancy=discrepancy, tolerance=tolerance,
        )
        self.step = step
        self.discrepancy = discrepancy
        self.tolerance = tolerance
        self.audits = tuple(audits)
        self.table = table


class OIMismatchError(ForgeError):
    """Within-B' multisets of the two A' columns differ beyond tolerance."""

    code = "oi-mismatch"

    def __init__(self, d_plus, d_minus, tolerance, audits=(), table=None):
        super().__init__(
            f"discrepancy (B'=+1: {d_plus}, B'=-1: {d_minus}) > tolerance {tolerance}",
            d_plus=d_plus, d_minus=d_minus, tolerance=tolerance,
        )
        self.step = "OI_Ap3Ap4"
        self.d_plus = d_plus
        self.d_minus = d_minus
        self.discrepancy = d_plus + d_minus
        self.tolerance = tolerance
        self.audits = tuple(audits)
        self.table = table


class PIStepsNotAppliedError(ForgeError, ValueError):
    code = "pi-steps-not-applied"
