"""Exception types shared across the package.

Every error carries a machine-readable ``code`` and a ``details`` dict so the
CLI can emit structured JSON diagnostics.
"""

from __future__ import annotations


class MultilaneError(Exception):
    code = "Error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self), "details": self.details}


class ModelInvalid(MultilaneError):
    code = "ModelInvalid"


class ZeroLaneRate(ModelInvalid):
    code = "ZeroLaneRate"


class NotWeaklyIrreducible(ModelInvalid):
    code = "NotWeaklyIrreducible"


class NoReversibleMeasure(ModelInvalid):
    code = "NoReversibleMeasure"


class ExponentTooSmall(MultilaneError):
    code = "ExponentTooSmall"


class OutOfRange(MultilaneError):
    code = "OutOfRange"


class UnstableStep(MultilaneError):
    code = "UnstableStep"


class DisjointWindows(MultilaneError):
    code = "DisjointWindows"


class NewtonDivergence(MultilaneError):
    code = "NewtonDivergence"


class ProfileOutOfRange(MultilaneError):
    code = "ProfileOutOfRange"


class WindowTooSmall(MultilaneError):
    code = "WindowTooSmall"


class GridTooCoarse(MultilaneError):
    code = "GridTooCoarse"


class ConfigInvalid(MultilaneError):
    code = "ConfigInvalid"


class SchemaMismatch(MultilaneError):
    code = "SchemaMismatch"


class IoError(MultilaneError):
    code = "IoError"
