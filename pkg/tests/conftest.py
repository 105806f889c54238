import math

import pytest

from psmet import MeterSpec, SelectionSpec

PI = math.pi

_acceptance_results: dict[str, str] = {}


def symmetric(phi0):
    """theta_i = theta_f = pi/2 with the given relative phase."""
    return SelectionSpec.with_phi0(PI / 2, PI / 2, phi0)


@pytest.fixture
def meter4():
    return MeterSpec.from_photon_number(4)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, summarised at the end of the run")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    label = dict(report.user_properties).get("criterion")
    if label is not None and _acceptance_results.get(label) != "FAIL":
        # a parametrised criterion passes only if every instance passes
        _acceptance_results[label] = "PASS" if report.passed else "FAIL"


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance_results, key=_criterion_key):
        terminalreporter.write_line(f"{_acceptance_results[label]:4s}  {label}")


def _criterion_key(label):
    head = label.split()[0]
    digits = "".join(ch for ch in head if ch.isdigit())
    return (int(digits) if digits else 99, label)
