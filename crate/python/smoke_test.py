#!/usr/bin/env python3
"""End-to-end smoke test for the ergolab Python module.

Builds nothing itself: expects `cargo build -p ergolab-py` (or --release) to
have produced target/<profile>/libergolab.so, loads it in place, and checks
each exported surface with small, fast cases.
"""

import importlib.machinery
import importlib.util
import json
import math
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO_ROOT / "target" / profile / "libergolab.so"
        for profile in ("release", "debug")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "libergolab.so not found; run `cargo build -p ergolab-py` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    loader = importlib.machinery.ExtensionFileLoader("ergolab", str(newest))
    spec = importlib.util.spec_from_loader("ergolab", loader, origin=str(newest))
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    print(f"loaded {newest.relative_to(REPO_ROOT)}")
    return module


ergolab = load_module()

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


@check
def catalog_lists_the_built_in_systems():
    ids = ergolab.catalog()
    assert len(ids) >= 7, ids
    for required in ("bernoulli:2", "gauss:M=50", "skew:rotation:r=2"):
        assert required in ids, (required, ids)
    chains = ergolab.chain_names()
    assert "finfty_chain" in chains and "two_state" in chains, chains


@check
def trees_report_size_height_and_words():
    tree = ergolab.Tree.complete(2, 3)
    assert len(tree) == 15 and tree.height == 3 and tree.label == "t15h3"
    words = tree.words()
    assert words[0] == [] and [0] in words and [1, 0, 1] in words

    ball = ergolab.Tree.free_group_ball(2, 2)
    # 1 + 4 + 4*3 reduced words of length <= 2 in the rank-2 free group.
    assert len(ball) == 17, len(ball)

    explicit = ergolab.Tree.from_words([[], [0], [1], [0, 0]])
    assert len(explicit) == 4 and explicit.height == 2

    try:
        ergolab.Tree.from_words([[0, 1]])
    except ValueError:
        pass
    else:
        raise AssertionError("a tree without its root must be rejected")

    random = ergolab.Tree.random(3, 4, 12, seed=5)
    again = ergolab.Tree.random(3, 4, 12, seed=5)
    assert random.words() == again.words()


@check
def points_validate_their_coordinates():
    p = ergolab.Point.symbolic([0, 1, 0])
    assert p.depth == 3

    golden = (math.sqrt(5.0) - 1.0) / 2.0
    assert ergolab.Point.real(golden).depth > 10**6

    for bad in (0.0, 1.5, 0.5):  # 0.5 has a terminating expansion
        try:
            ergolab.Point.real(bad)
        except ValueError:
            pass
        else:
            raise AssertionError(f"Point.real({bad}) should be rejected")


@check
def complete_balls_carry_weight_depth_plus_one():
    system = ergolab.System.by_id("bernoulli:2")
    x = system.sample_point(seed=11, depth=8)
    for depth in range(4):
        tree = ergolab.Tree.complete(2, depth)
        assert abs(system.tree_weight(tree, x) - (depth + 1)) < 1e-9


@check
def bernoulli_averages_obey_the_exact_error_bound():
    system = ergolab.System.by_id("bernoulli:2")
    f = ergolab.Observable.indicator(2, 0)
    assert f.name == "ind(x0=0)"
    x = system.sample_point(seed=3, depth=13)
    rows = system.cesaro_backward(f, 12, x)
    assert len(rows) == 13
    for n, row in enumerate(rows):
        assert row["n"] == str(n)
        assert abs(row["average"] - 0.5) <= 1.0 / (n + 1) + 1e-15, row
        assert row["target"] == 0.5
        assert abs(row["total_weight"] - (n + 1)) < 1e-9


@check
def gauss_averages_report_their_analytic_target():
    system = ergolab.System.by_id("gauss:M=50")
    f = ergolab.Observable.identity()
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    x = ergolab.Point.real(golden)
    assert abs(system.evaluate(f, x) - golden) < 1e-15
    target = system.invariant_target(f, x)
    assert abs(target - (1.0 / math.log(2.0) - 1.0)) < 1e-15

    rows = system.cesaro_backward(f, 6, x, theta=1e-6)
    last = rows[-1]
    assert abs(last["average"] - target) < 0.2
    assert 0.0 < last["truncation_tail"] < 1.0
    # Each row's tail is that level's weight shortfall, so the absorbed
    # mass plus the realized weight reconstructs the exact ball weight.
    absorbed = sum(row["truncation_tail"] for row in rows)
    assert abs(last["total_weight"] + absorbed - 7.0) < 1e-9
    eval = system.weighted_average(f, ergolab.Tree.complete(50, 1), x)
    assert abs(eval["total_weight"] + eval["truncation_tail"] - 2.0) < 1e-12


@check
def chains_expose_their_stationary_structure():
    two_state = ergolab.Chain.by_name("two_state")
    assert two_state.states == 2
    assert abs(two_state.initial_probability(0) - 0.8) < 1e-12
    assert abs(two_state.initial_probability(1) - 0.2) < 1e-12
    assert two_state.transition(0, 0) == 0.9

    solved = ergolab.Chain.from_matrix([[0.9, 0.1], [0.4, 0.6]])
    assert abs(solved.initial_probability(0) - 0.8) < 1e-12

    free = ergolab.Chain.by_name("free_group:2")
    assert all(abs(free.initial_probability(s) - 0.25) < 1e-12 for s in range(4))
    # Steps onto the inverse generator never happen.
    assert free.transition(1, 0) == 0.0

    path = two_state.sample_path(50, seed=9)
    assert path == two_state.sample_path(50, seed=9)
    assert len(path) == 50 and set(path) <= {0, 1}


@check
def countable_walk_returns_in_two_and_a_half_steps():
    chain = ergolab.Chain.by_name("finfty_chain")
    assert chain.states is None
    stats = chain.expected_return_time(0, samples=20_000, seed=5, horizon=1_000)
    assert abs(stats["mean_return"] - 2.5) < 0.1, stats
    assert abs(stats["survival"][2] - 0.25) < 0.03, stats
    assert stats["censored_fraction"] < 1e-3


@check
def forward_rotation_balls_have_unit_level_mass():
    rows = ergolab.forward_rotation_report(2, 6, base=0.25)
    assert len(rows) == 7
    for n, row in enumerate(rows):
        assert abs(row["mass"] - (n + 1)) < 1e-9, row

    flat = ergolab.forward_rotation_report(2, 4, base=0.25, f=lambda t: 1.0)
    assert all(abs(row["average"] - 1.0) < 1e-12 for row in flat)

    def explode(t):
        raise RuntimeError("observable failed")

    try:
        ergolab.forward_rotation_report(2, 2, base=0.25, f=explode)
    except RuntimeError as e:
        assert "observable failed" in str(e)
    else:
        raise AssertionError("callback errors must propagate")

    ball = ergolab.Tree.free_group_ball(2, 3)
    eval = ergolab.forward_tree_average(2, ball, base=0.3)
    assert abs(eval["mass"] - 4.0) < 1e-9
    assert abs(eval["average"] - eval["weighted_sum"] / eval["mass"]) < 1e-15


@check
def greedy_tiling_covers_multiples_of_the_period():
    system = ergolab.System.by_id("bernoulli:2")
    x = system.sample_point(seed=21, depth=1)
    full = system.greedy_tile(2, 8, x)
    assert full["coverage"] == 1.0, full
    ragged = system.greedy_tile(2, 9, x)
    assert ragged["coverage"] == 0.9, ragged
    assert abs(ragged["total_weight"] - 10.0) < 1e-9

    sweep = ergolab.tiling_sweep("bernoulli:2", 2, epsilon=0.25, points=10, seed=4)
    assert sweep["band_height"] == 2 and sweep["n"] == 16
    assert sweep["success_fraction"] == 1.0
    assert len(sweep["coverages"]) == 10


@check
def run_toml_writes_the_documented_report_files():
    config = """
kind = "backward"
system = "bernoulli:2"
seed = 7
n_max = 8
points = 3
"""
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "report.csv"
        manifest = ergolab.run_toml(config, out=str(out))
        assert manifest["kind"] == "backward"
        assert manifest["rows"] == 3 * 9
        assert len(manifest["sub_seeds"]) == 3

        lines = out.read_text().splitlines()
        assert lines[0] == "# ergolab-csv-v1 kind=backward system=bernoulli:2 seed=7"
        assert lines[1] == "point_id,n,total_weight,average,target,abs_error"
        assert len(lines) == 2 + manifest["rows"]
        assert lines[2].startswith("p000,0,1,")

        on_disk = json.loads(out.with_suffix(".manifest.json").read_text())
        assert on_disk["rows"] == manifest["rows"]

        again = Path(tmp) / "again.csv"
        ergolab.run_toml(config, out=str(again))
        assert again.read_bytes() == out.read_bytes()

    try:
        ergolab.run_toml("kind = [unclosed")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed TOML must raise ValueError")


def main():
    failures = 0
    for fn in CHECKS:
        try:
            fn()
        except Exception:
            failures += 1
            print(f"fail - {fn.__name__.replace('_', ' ')}")
            import traceback

            traceback.print_exc()
        else:
            print(f"ok - {fn.__name__.replace('_', ' ')}")
    if failures:
        sys.exit(f"{failures} of {len(CHECKS)} checks failed")
    print(f"all {len(CHECKS)} checks passed")


if __name__ == "__main__":
    main()
