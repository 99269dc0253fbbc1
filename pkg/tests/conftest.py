import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

SINGLE_CASES = ["single_case1.c", "single_case2.c", "single_case3.c", "single_case4.c"]
MULTIPLE_CASES = [
    "multiple_case1.c",
    "multiple_case2.c",
    "multiple_case3.c",
    "multiple_case4.c",
]


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def compiler_available() -> bool:
    return any(shutil.which(c) for c in ("clang", "gcc", "cc"))


requires_compiler = pytest.mark.skipif(
    not compiler_available(), reason="no C/C++ compiler on PATH"
)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
