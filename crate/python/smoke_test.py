"""Smoke test for the Python extension.

Build it first (``cargo build --release -p conceptpref-py``, or
``maturin develop``), then run ``python3 python/smoke_test.py``.
"""

import importlib
import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load():
    try:
        return importlib.import_module("conceptpref_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        path = ROOT / "target" / profile / "libconceptpref_py.so"
        if path.exists():
            loader = importlib.machinery.ExtensionFileLoader("conceptpref_py", str(path))
            spec = importlib.util.spec_from_file_location("conceptpref_py", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("conceptpref_py not built; run: cargo build --release -p conceptpref-py")


def main():
    cp = load()

    qsr = cp.qsr_closed_form("oaqs", 0.64, 0.62, 0.72, 50)
    assert abs(qsr - 0.77) < 0.005, qsr
    assert cp.qsr_closed_form("top", 0.64, 0.62, 0.72, 50) == 0.64
    est, se, _, _ = cp.monte_carlo_qsr("oaqs", 0.5, 0.7, 0.8, 3, trials=20000, seed=1)
    assert abs(est - cp.qsr_closed_form("oaqs", 0.5, 0.7, 0.8, 3)) < 5 * se
    assert cp.bt_prob(1.0, 0.0, 0.0) == 0.5
    assert abs(cp.bt_prob(0.3, 0.1, 10.0) + cp.bt_prob(0.1, 0.3, 10.0) - 1.0) < 1e-12
    try:
        cp.qsr_closed_form("bogus", 0.5, 0.5, 0.5, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown strategy accepted")

    env = cp.Environment("routing", seed=0, pool_size=40)
    assert len(env) == 40 and len(env.concepts) == 10
    assert all(len(f) == 10 for _, f in env.features())

    templates = dict(cp.builtin_templates("routing"))
    assert "natural-01" in templates

    config = {
        "env": {"kind": "routing", "seed": 0},
        "instruction_id": "natural-01",
        "method": "maple_oaqs",
        "budget": 3,
        "oracle": {"kind": "mock", "y0": 0.62, "y1": 0.72},
        "seed": 5,
    }
    result = json.loads(cp.run_session(json.dumps(config)))
    assert len(result["records"]) == 3
    assert result == json.loads(cp.run_session(json.dumps(config)))

    session = cp.Session(json.dumps(config))
    assert session.phase == "selecting"
    q = session.next_query()
    assert q == session.next_query()
    summary = session.submit("skip", difficulty="they look the same")
    assert len(summary["map"]) == 10 and math.isclose(sum(x * x for x in summary["map"]), 1.0)
    session.next_query()
    session.submit("first", explanation="I prefer quiet streets")
    assert session.iteration == 2
    final = json.loads(session.stop())
    assert final == json.loads(session.stop())
    assert final["final_metrics"]["cosine_distance"] is not None

    free = dict(config, method="maple_random")
    del free["instruction_id"]
    s = cp.Session(json.dumps(free), instruction="Avoid highways.")
    s.next_query()
    s.submit("second")
    assert json.loads(s.stop())["final_metrics"]["cosine_distance"] is None
    try:
        s.next_query()
    except ValueError as e:
        assert "session stopped" in str(e)
    else:
        raise AssertionError("stopped session served a query")

    batch = {
        "base": dict(config, method="brex"),
        "methods": ["brex", "maple_random"],
        "instructions": ["clear-01"],
        "seeds": [0, 1],
        "feedback_counts": [0, 2],
    }
    out = json.loads(cp.run_experiment(json.dumps(batch)))
    assert {m["method"] for m in out["methods"]} == {"brex", "maple_random"}

    print("python smoke test passed")


if __name__ == "__main__":
    main()
