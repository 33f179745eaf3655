"""Exception hierarchy.

Every engine error carries a module-qualified ``code`` so the CLI can emit a
machine-readable record without string matching.
"""


class MaxvarError(Exception):
    code = "maxvar.error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def record(self):
        out = {"code": self.code, "message": self.message}
        out.update(self.details)
        return out


class ExprSyntaxError(MaxvarError):
    code = "symexpr.syntax"

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}", position=position)
        self.position = position


class UnknownIdentifier(MaxvarError):
    code = "symexpr.unknown_identifier"

    def __init__(self, name, position=None):
        msg = f"unknown identifier {name!r}"
        if position is not None:
            msg += f" at position {position}"
        super().__init__(msg, identifier=name, position=position)
        self.name = name


class EvaluationError(MaxvarError):
    code = "symexpr.evaluation"


class ZeroTestError(MaxvarError):
    code = "symexpr.zero_test_budget"


class ChartMismatch(MaxvarError):
    code = "extcalc.chart_mismatch"


class DegreeError(MaxvarError):
    code = "extcalc.degree"


class SingularFormError(MaxvarError):
    """A form or function required to be nowhere zero vanishes at a witness point."""

    code = "varprin.singular"


class ConsistencyError(MaxvarError):
    code = "varprin.consistency"


class VerificationError(MaxvarError):
    code = "liouville.verification"


class DegenerateFormError(MaxvarError):
    code = "liouville.degenerate"


class BlowUpError(MaxvarError):
    code = "flow.blow_up"


class TangencyError(MaxvarError):
    code = "flow.tangency"


class GridError(MaxvarError):
    code = "flow.grid"


class ScenarioError(MaxvarError):
    code = "cli.scenario"
