import json
from fractions import Fraction as F

import pytest

from upgrade_pricing.duality import Flow
from upgrade_pricing.model import Instance, Mechanism


def make_instance(theta, f):
    return Instance(
        theta=tuple(tuple(F(v) for v in row) for row in theta),
        f=tuple(F(v) for v in f),
    )


@pytest.fixture
def inst_a():
    """Instance with no compatible cutoffs for item 2."""
    return make_instance(
        [("9/128", "27/64"), ("1/4", "3/2"), ("1/2", "2"), (1, 1)],
        ["7/16", "3/16", "1/8", "1/4"],
    )


@pytest.fixture
def inst_b():
    """Mostly regular instance: item 1 needs ironing at type 2."""
    return make_instance(
        [("57/64", 1), (1, "5/4"), (2, 3), ("9/4", 5)],
        ["3/8", "1/4", "1/8", "1/4"],
    )


@pytest.fixture
def inst_c():
    """Separate prices (2, 2) sell incomparable bundles here."""
    return make_instance(
        [(1, 1), (1, 3), (3, 3), (4, 1)],
        ["1/4"] * 4,
    )


@pytest.fixture
def overlap_instance():
    """Item 1 irons {2, 3}, item 2 irons {3, 4}: a partial overlap."""
    return make_instance(
        [(10, 1), (6, "12/5"), (9, 0), (16, 2), (9, 9), (6, 24)],
        ["1/6"] * 6,
    )


@pytest.fixture
def inst_b_mechanism():
    """Good 1 at 57/64 to everyone, the upgrade to good 2 at 5 for type 4."""
    one, zero = F(1), F(0)
    return Mechanism(
        q=((one, zero), (one, zero), (one, zero), (one, one)),
        t=(F(57, 64), F(57, 64), F(57, 64), F(377, 64)),
    )


@pytest.fixture
def inst_b_final_flow():
    return Flow.from_mapping(4, {
        (1, 0): F(1),
        (2, 1): F(1, 2),
        (3, 1): F(1, 8),
        (3, 2): F(1, 4),
        (4, 3): F(1, 4),
    })


@pytest.fixture
def write_json(tmp_path):
    """Write a payload to tmp_path/name and return the path."""
    def _write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def inst_b_file(write_json):
    return write_json("inst_b.json", {
        "n": 4, "d": 2,
        "theta": [["57/64", 1], [1, "5/4"], [2, 3], ["9/4", 5]],
        "f": ["3/8", "1/4", "1/8", "1/4"],
    })


@pytest.fixture
def inst_a_file(write_json):
    return write_json("inst_a.json", {
        "n": 4, "d": 2,
        "theta": [["9/128", "27/64"], ["1/4", "3/2"], ["1/2", 2], [1, 1]],
        "f": ["7/16", "3/16", "1/8", "1/4"],
    })
