"""
Custom Exception Module for the polydisc dilation toolkit

This module provides the base exception and the domain exceptions raised by
the numerical components (operator tuples, Hardy-space model, colligations,
dilations, von Neumann comparisons) and by the file/CLI layer.

Usage:
    from src.exception import CustomException

    try:
        # your code
    except Exception as e:
        raise CustomException(e, sys)

    # domain errors take a plain message
    raise InputError("operator 2 is not square")
"""

import sys
from typing import Union


def get_error_details(error: Union[Exception, str], error_detail=sys) -> str:
    """
    Extract detailed error information including file name, line number, and error message.

    Args:
        error (Exception | str): The original exception (or a message)
        error_detail (sys): The sys module to access exception info

    Returns:
        str: Formatted error message with file name, line number, and error details
    """
    _, _, exc_tb = error_detail.exc_info()

    if exc_tb is not None:
        file_name = exc_tb.tb_frame.f_code.co_filename
        line_number = exc_tb.tb_lineno

        error_message = (
            f"\n{'='*60}\n"
            f"EXCEPTION OCCURRED\n"
            f"{'='*60}\n"
            f"File: {file_name}\n"
            f"Line: {line_number}\n"
            f"Error: {str(error)}\n"
            f"{'='*60}"
        )
    else:
        error_message = f"Error: {str(error)}"

    return error_message


class CustomException(Exception):
    """
    Base exception of the toolkit.

    Captures the file name and line number of the active traceback (when
    raised inside an ``except`` block) together with the original message.

    Usage:
        from src.exception import CustomException
        import sys

        try:
            result = some_function()
        except Exception as e:
            raise CustomException(e, sys)

    Attributes:
        error_message (str): Detailed formatted error message
        reason (str): The bare message, without traceback decoration
    """

    tag = ""

    def __init__(self, error_message: Union[Exception, str], error_detail=sys):
        """
        Initialize the CustomException.

        Args:
            error_message (Exception | str): The original exception or a message
            error_detail (sys): The sys module for accessing traceback info
        """
        super().__init__(str(error_message))
        self.reason = str(error_message)
        self.error_message = get_error_details(error_message, error_detail)
        if self.tag:
            self.error_message = f"[{self.tag}] {self.error_message}"

    def __str__(self) -> str:
        """Return the formatted error message."""
        return self.error_message


# ============================================================================
# DOMAIN EXCEPTIONS
# ============================================================================
# The CLI maps InputError (and ParseError) to exit code 2 and every other
# CustomException to exit code 1.

class InputError(CustomException):
    """Malformed operator tuple, index or parameter."""
    tag = "INPUT"


class ParseError(InputError):
    """Tuple/polynomial file that does not match its schema."""
    tag = "PARSE"


class NotSzegoPositive(CustomException):
    """Szegő defect with an eigenvalue below the PSD tolerance."""
    tag = "SZEGO"


class NotIsometric(CustomException):
    """Vector families whose Gram matrices disagree, or a failed isometry check."""
    tag = "ISOMETRY"


class NeedsPadding(CustomException):
    """Unitary completion needs extra dimensions but padding is disabled."""
    tag = "PADDING"


class BoundarySingular(CustomException):
    """I - zD is singular at a boundary point of the disc."""
    tag = "BOUNDARY"


class DecompositionError(CustomException):
    """Reduced colligation of a canonical decomposition is not unitary."""
    tag = "DECOMPOSITION"


class NotInClass(CustomException):
    """Tuple outside the dilation class for the requested (p, q)."""
    tag = "CLASS"


class EmptyVariety(CustomException):
    """Supremum requested over an empty variety sample set."""
    tag = "VARIETY"


class TruncationError(CustomException):
    """Embedding tail still above target at the cutoff cap or size limit."""
    tag = "TRUNCATION"
