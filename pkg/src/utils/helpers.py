"""
Utility functions shared by the command line and the check runner
"""
import math
import re
import time
from functools import lru_cache, wraps
from typing import Optional
import logging

from src.config.settings import CSV_DIGITS
from src.core.errors import ValidationError

logger = logging.getLogger(__name__)

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL = re.compile(rf"^[+-]?{_NUM}$")
_IMAGINARY = re.compile(rf"^(?P<im>[+-]?(?:{_NUM})?)[ij]$")
_FULL = re.compile(rf"^(?P<re>[+-]?{_NUM})(?P<im>[+-](?:{_NUM})?)[ij]$")


class PerformanceMonitor:
    """Monitor execution times of check suites and sweeps"""

    @staticmethod
    def measure_time(func):
        """Decorator to measure function execution time"""
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.time()
            result = func(*args, **kwargs)
            end_time = time.time()
            execution_time = (end_time - start_time) * \
                1000  # Convert to milliseconds
            logger.info(f"{func.__name__} executed in {execution_time:.2f}ms")
            return result, execution_time
        return wrapper


class ComplexParser:
    """Parse user supplied complex numbers such as ``0.5+0.5i``, ``-2``, ``i`` or ``1e-3-2j``"""

    @staticmethod
    @lru_cache(maxsize=1000)
    def parse(text: str) -> complex:
        cleaned = text.strip().replace(" ", "")
        if _REAL.match(cleaned):
            value = complex(float(cleaned), 0.0)
        else:
            match = _IMAGINARY.match(cleaned) or _FULL.match(cleaned)
            if not match:
                raise ValidationError(f"Cannot parse complex number {text!r}")
            real = float(match.groupdict().get("re") or 0.0)
            imag_text = match.group("im")
            if imag_text in ("", "+"):
                imag = 1.0
            elif imag_text == "-":
                imag = -1.0
            else:
                imag = float(imag_text)
            value = complex(real, imag)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ValidationError(f"Complex number {text!r} is not finite")
        return value


class NumberFormatter:
    """Round-trip formatting for reports"""

    digits = CSV_DIGITS

    @staticmethod
    def real(value: Optional[float]) -> str:
        return "" if value is None else format(value, f".{NumberFormatter.digits}g")


# Global instances
performance_monitor = PerformanceMonitor()
complex_parser = ComplexParser()
number_formatter = NumberFormatter()


def parse_complex(text: str) -> complex:
    return complex_parser.parse(text)
