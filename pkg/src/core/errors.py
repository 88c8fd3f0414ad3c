#!/usr/bin/env python3
"""
Error bases shared by every stage.
The CLI maps these to exit codes; packages subclass them next to the code
that raises.
"""


class PdqrngError(Exception):
    """Root of all pipeline errors"""
    pass


class ValidationError(PdqrngError, ValueError):
    """Bad input or configuration (exit code 1)"""
    pass


class StageError(PdqrngError):
    """A pipeline stage failed at run time (exit code 2)"""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class CertificationError(PdqrngError):
    """Certified entropy below the acceptance threshold (exit code 3)"""
    pass


EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_STAGE_FAILURE = 2
EXIT_CERTIFICATION = 3


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, CertificationError):
        return EXIT_CERTIFICATION
    if isinstance(error, ValidationError):
        return EXIT_VALIDATION
    return EXIT_STAGE_FAILURE
