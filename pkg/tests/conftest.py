import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from objloc import ObjectMap, ObjectRecord, Pose, make_map


def random_pose(rng) -> Pose:
    R = Rotation.random(random_state=rng).as_matrix()
    u, _, vt = np.linalg.svd(R)
    return Pose(u @ vt, rng.uniform(-10, 10, 3))


def random_instance(rng, n_global=None, n_local=None, n_classes=None, noise=0.0, clutter=0):
    """Small global/local map pair with repeated classes; local ids equal true global ids."""
    n_global = n_global or int(rng.integers(3, 11))
    n_classes = n_classes or int(rng.integers(1, 4))
    n_local = min(n_local or int(rng.integers(2, 7)), n_global)
    pos = rng.uniform(0, 6, (n_global, 3))
    labels = [f"c{int(k)}" for k in rng.integers(0, n_classes, n_global)]
    G = make_map(pos, labels)
    T = random_pose(rng)
    chosen = rng.choice(n_global, n_local - min(clutter, n_local - 1), replace=False)
    local_pos = T.inverse().apply(pos[chosen]) + rng.uniform(-noise, noise, (len(chosen), 3))
    objs = [ObjectRecord(int(i), labels[i], p) for i, p in zip(chosen, local_pos)]
    for k in range(n_local - len(chosen)):
        objs.append(ObjectRecord(100 + k, labels[int(rng.integers(n_global))], rng.uniform(-6, 6, 3)))
    return G, ObjectMap(objs), T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def l_scene():
    """Three distinct-class objects in an L, and the same seen from a rotated, shifted frame."""
    G = make_map([(0, 0, 0), (2, 0, 0), (0, 1, 0)], ["a", "b", "c"])
    T = Pose.from_yaw(np.pi / 2, (5, 5, 0))
    L = ObjectMap([ObjectRecord(o.id, o.class_label, p)
                   for o, p in zip(G, T.apply(G.positions))])
    return G, L, T


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion; echoed in the terminal summary."""
    def emit(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
