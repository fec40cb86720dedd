import numpy as np
import pytest

from netlti.model import NetworkedSystem, SubsystemRealization


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def scalar_subsystem(A_TT=0.5, A_TS=1.0, A_ST=1.0, A_SS=0.0, C_T=1.0, C_S=0.0,
                     B_T=None, B_S=None, D=None):
    """One state, one internal input/output, one external output, no inputs."""
    return SubsystemRealization.create(
        [[A_TT]], A_TS=[[A_TS]], A_ST=[[A_ST]], A_SS=[[A_SS]], C_T=[[C_T]],
        C_S=[[C_S]], B_T=B_T, B_S=B_S, D=D, n_v=1, n_z=1, n_y=1,
        n_u=0 if B_T is None else np.asarray(B_T).shape[-1])


def single(sub, phi):
    return NetworkedSystem.build([sub], np.asarray(phi, dtype=float))


def example_two_phi():
    """The six-row SCM with one all-zero row used in the worked example."""
    return np.array([
        [0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 1, 0],
        [1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
    ], dtype=float)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", None) != "call":
                continue
            for name, value in getattr(rep, "user_properties", []):
                if name == "acceptance":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
