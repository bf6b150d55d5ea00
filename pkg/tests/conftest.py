import pytest

from henonpressure.mapcore import MapParams, Variant

# frozen from find_a_star at b = 1e-3 (checked by test_manifolds)
A_STAR_REV = 2.002248170054192
A_STAR_PRES = 2.0019974201702935
B = 1e-3


@pytest.fixture(scope="session")
def p_rev():
    return MapParams(A_STAR_REV, B, Variant.REVERSING)


@pytest.fixture(scope="session")
def p_pres():
    return MapParams(A_STAR_PRES, B, Variant.PRESERVING)


@pytest.fixture(scope="session", params=["rev", "pres"])
def p_star(request, p_rev, p_pres):
    return p_rev if request.param == "rev" else p_pres


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, print it and fail the test when not met."""

    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
