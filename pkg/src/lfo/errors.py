"""Error taxonomy shared across the pipeline.

Every domain failure raises an LfoError subclass carrying a stable ``code``
so the CLI and service can emit machine-readable errors.
"""

from __future__ import annotations


class LfoError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InvalidInputError(LfoError):
    code = "invalid-input"


class ScoreParseError(LfoError):
    code = "score-parse"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self), "line": self.line}


class ProgramFormatError(LfoError):
    code = "program-format"

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class SegmentationError(LfoError):
    code = "segmentation"


class SlotFillError(LfoError):
    code = "slot-fill"

    def __init__(self, slot: str, message: str):
        super().__init__(f"slot '{slot}': {message}")
        self.slot = slot


class UnrecognizedInstructionError(LfoError):
    code = "unrecognized-instruction"


class GrammarError(LfoError):
    code = "grammar"

    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)

    def payload(self) -> dict:
        return {
            "error": self.code,
            "message": str(self),
            "violations": [str(v) for v in self.violations],
        }


class InfeasibleGraspError(LfoError):
    code = "infeasible-grasp"


class FitError(LfoError):
    code = "fit"


class LocalizationError(LfoError):
    code = "localization"


class IKError(LfoError):
    code = "ik-failure"

    def __init__(self, message: str, closest_approach: float):
        super().__init__(f"{message} (closest approach {closest_approach:.4f} m)")
        self.closest_approach = closest_approach


class SkillError(LfoError):
    code = "skill"

    def __init__(self, message: str, frame_index: int, trace=None, world=None):
        super().__init__(f"frame {frame_index}: {message}")
        self.frame_index = frame_index
        self.trace = trace
        self.world = world

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self), "frame": self.frame_index}
