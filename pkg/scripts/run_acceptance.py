"""Run the eight acceptance criteria and print one PASS/FAIL line per criterion.

    python3 scripts/run_acceptance.py

Extra arguments are passed to pytest (for example ``-k criterion_6``).
"""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(pytest.main([str(ROOT / "tests" / "test_acceptance.py"), "-q", "-s", "-p", "no:cacheprovider", *sys.argv[1:]]))
