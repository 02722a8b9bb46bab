"""Shared fixtures: the 2x2 hand fixture F1 and random connected instances."""

import numpy as np
import pytest

from complexity_cca import ingest, synth

SQ2 = np.sqrt(2.0)


def f1():
    """X = [[1,1],[0,1]]: products p1, p2 by countries A, B."""
    return ingest.SpecializationMatrix.from_binary(
        np.array([[1, 1], [0, 1]]), ("p1", "p2"), ("A", "B"))


def make_env(sm, Y_raw, names=None):
    Y_raw = np.asarray(Y_raw, dtype=float)
    if Y_raw.ndim == 1:
        Y_raw = Y_raw[:, None]
    names = tuple(names or [f"v{k + 1}" for k in range(Y_raw.shape[1])])
    raw = ingest.RawVariables(names, {c: tuple(Y_raw[j]) for j, c in enumerate(sm.country_labels)})
    return ingest.standardize_environment(raw, sm)


def random_instances(count=100, seed=20180, n_max=30, m_max=20, z_max=5):
    """Random connected ``(sm, env)`` pairs with n <= 30, m <= 20, z <= 5."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        m = int(rng.integers(4, m_max + 1))
        n = int(rng.integers(3, n_max + 1))
        z = int(rng.integers(1, min(z_max, m - 2) + 1))
        sm = synth.random_specialization(rng, n, m, density=rng.uniform(0.25, 0.6))
        env = make_env(sm, rng.standard_normal((m, z)))
        out.append((sm, env))
    return out


@pytest.fixture
def F1():
    return f1()


@pytest.fixture(scope="session")
def instances():
    return random_instances()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
