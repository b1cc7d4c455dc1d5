import pytest

from qevmc import vmc

SWEEP_DELTAS = (2.0, 1.0, 0.0, -1.0, -2.0)


@pytest.fixture(scope="session")
def xxz_sweep():
    """n=8 XXZ sweep with the default sampled training protocol, run once per session."""
    points = vmc.xxz_sweep(8, SWEEP_DELTAS, 1.0, vmc.TrainingConfig(seed=0, phase_init="staggered"))
    return {p.delta: p for p in points}


ACCEPTANCE_LINES = []


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
