from __future__ import annotations

import random

import pytest

from mcmsched.hardware import mesh_mcm
from mcmsched.workload import LayerParams, Model, Scenario

# criterion number -> (passed, one-line detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def random_layer(rng: random.Random, name: str, batch: int) -> LayerParams:
    kind = rng.choice(["conv", "conv", "fc", "attention-proj", "depthwise", "pool"])
    if kind == "fc":
        return LayerParams(name, "fc", batch, rng.choice([64, 256, 1024]), rng.choice([64, 512, 2048]), 1, 1, 1)
    ip = rng.choice([7, 14, 28, 56])
    k = rng.choice([1, 3])
    if kind in ("depthwise", "pool"):
        c = rng.choice([32, 64, 128])
        return LayerParams(name, kind, batch, c, c, ip, ip, k, rng.choice([1, 2]))
    if kind == "attention-proj":
        return LayerParams(name, kind, batch, rng.choice([256, 768]), rng.choice([256, 768]), 8, 16, 1)
    return LayerParams(name, "conv", batch, rng.choice([3, 16, 64, 256]), rng.choice([16, 64, 256]), ip, ip, k, rng.choice([1, 1, 2]))


def random_model(rng: random.Random, name: str, max_layers: int = 20) -> Model:
    batch = rng.choice([1, 2, 4, 8, 16, 32])
    n = rng.randint(1, max_layers)
    layers = tuple(random_layer(rng, f"{name}.l{i}", batch) for i in range(n))
    return Model(name, layers, tuple((i, i + 1) for i in range(n - 1)))


def random_scenario(rng: random.Random, max_models: int = 4, max_layers: int = 20) -> Scenario:
    k = rng.randint(1, max_models)
    return Scenario(f"rand{rng.randrange(10**6)}", tuple(random_model(rng, f"m{i}", max_layers) for i in range(k)))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def tiny_scenario() -> Scenario:
    a = (
        LayerParams("a0", "conv", 4, 16, 32, 16, 16, 3),
        LayerParams("a1", "conv", 4, 32, 32, 14, 14, 3),
    )
    b = (
        LayerParams("b0", "fc", 2, 256, 512, 1, 1, 1),
        LayerParams("b1", "fc", 2, 512, 128, 1, 1, 1),
    )
    return Scenario("tiny", (Model("A", a, ((0, 1),)), Model("B", b, ((0, 1),))))


@pytest.fixture
def mesh2x2():
    return mesh_mcm(2, 2, ["ws", "ws", "ws", "os"])
