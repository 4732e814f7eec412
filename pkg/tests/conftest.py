import pytest

from mgantenna.geometry import DesignSpec, build_scene


@pytest.fixture(scope="session")
def design():
    # 10 GHz, 7 wavelengths, quarter-wave spacing, 0.0085 wavelength slab, eps_r 3
    return DesignSpec.in_wavelengths()


@pytest.fixture(scope="session")
def scene(design):
    return build_scene(design)


ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(number, ok, detail)``."""
    def record(number, ok, detail):
        ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
