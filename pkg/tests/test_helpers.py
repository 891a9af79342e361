"""
Tests for parsing, formatting and timing helpers
"""
import pytest

from src.core.errors import ValidationError
from src.utils.helpers import NumberFormatter, PerformanceMonitor, parse_complex


class TestComplexParser:
    """Test command line complex numbers"""

    @pytest.mark.parametrize("text,expected", [
        ("2", 2 + 0j),
        ("-1.5", -1.5 + 0j),
        ("i", 1j),
        ("-i", -1j),
        ("2i", 2j),
        ("0.5+0.5i", 0.5 + 0.5j),
        ("1e-3-2j", 0.001 - 2j),
        (" 3 - i ", 3 - 1j),
    ])
    def test_parse(self, text, expected):
        assert parse_complex(text) == expected

    @pytest.mark.parametrize("text", ["", "abc", "1+", "1++2i", "nan", "inf"])
    def test_invalid(self, text):
        with pytest.raises(ValidationError):
            parse_complex(text)


class TestNumberFormatter:
    """Test round-trip formatting"""

    def test_round_trip(self):
        value = 0.1 + 0.2
        assert float(NumberFormatter.real(value)) == value

    def test_missing_value(self):
        assert NumberFormatter.real(None) == ""


class TestPerformanceMonitor:
    """Test execution timing"""

    def test_measure_time(self):
        @PerformanceMonitor.measure_time
        def add(a, b):
            return a + b

        result, elapsed = add(2, 3)
        assert result == 5
        assert elapsed >= 0
        assert add.__name__ == "add"
