"""End-to-end smoke tests for the python bindings and the CLI."""

import json
import math
import os
import subprocess
import sys

import pytest

import mlmcgrad as m


def test_core_ops():
    assert m.dot([1.0, 2.0], [3.0, 4.0]) == 11.0
    l1, l2sq = m.norms([3.0, -4.0])
    assert l1 == 7.0 and l2sq == 25.0


def test_compressor_roundtrip():
    c = m.make_compressor("topk")
    v = [4.0, -3.0, 1.0]
    assert c.compress(v, 1) == [4.0, 0.0, 0.0]
    assert c.compress(v, 3) == v
    assert c.num_levels(3) == 3
    total = [0.0, 0.0, 0.0]
    for level in (1, 2, 3):
        r = c.residual_dense(v, level)
        total = [a + b for a, b in zip(total, r)]
    assert total == pytest.approx(v, abs=1e-12)


def test_distributions():
    fixed = m.fixed_point_distribution()
    assert len(fixed.probs) == 63
    assert sum(fixed.probs) == pytest.approx(1.0, abs=1e-12)
    assert fixed.prob(1) == pytest.approx(0.5, abs=1e-15)

    c = m.make_compressor("topk")
    d = m.adaptive_distribution(c, [4.0, -3.0])
    assert d.probs == pytest.approx([4 / 7, 3 / 7], abs=1e-14)


def test_estimator_unbiased_by_enumeration():
    c = m.make_compressor("stopk", s=2)
    v = [4.0, -3.0, 1.0, 0.5, -0.25]
    dist = m.adaptive_distribution(c, v)
    mean = [0.0] * len(v)
    for level, p in enumerate(dist.probs, start=1):
        if p == 0.0:
            continue
        est = m.estimate_at_level(c, v, dist, level)
        mean = [a + p * b for a, b in zip(mean, est["estimate"])]
    assert mean == pytest.approx(v, abs=1e-12)


def test_variance_report():
    c = m.make_compressor("topk")
    rep = m.analytic_variance(c, [4.0, -3.0], m.adaptive_distribution(c, [4.0, -3.0]))
    assert rep["second_moment"] == pytest.approx(49.0)
    assert rep["comp_variance"] == pytest.approx(24.0)
    assert m.exp_decay_variance_prediction(0.01, 100.0, 1.0) == pytest.approx(3.0)


def test_simulated_run_descends():
    rows = m.run_mlmc_sgd(d=16, M=4, sigma=0.0, T=200, eta=0.25,
                          compressor="stopk", s=4, distribution="adaptive")
    assert len(rows) == 201
    assert rows[0]["t"] == 0
    assert rows[-1]["gap"] < rows[0]["gap"] * 1e-2
    bits = [r["cum_bits"] for r in rows]
    assert bits == sorted(bits)


def test_run_experiment_writes_outputs(tmp_path):
    config = {
        "name": "pysmoke",
        "problem": {"type": "quadratic", "d": 4, "M": 2, "sigma": 0.1, "seed": 1},
        "methods": [
            {"name": "sgd", "type": "sgd"},
            {"name": "mlmc", "type": "mlmc", "compressor": "topk",
             "distribution": "adaptive"},
        ],
        "T": 25,
        "eta": 0.25,
        "seeds": [1, 2],
        "output_dir": "runs",
    }
    outputs = m.run_experiment(json.dumps(config), str(tmp_path))
    assert len(outputs) == 4
    for out in outputs:
        assert os.path.exists(out["csv"])
        assert not out["diverged"]
        assert math.isfinite(out["final_gap"])


def test_verify_bits_suite():
    results = m.verify_suite("bits")
    assert results and all(r["pass"] for r in results)


@pytest.mark.skipif("MLMCGRAD_CLI" not in os.environ,
                    reason="CLI path not provided")
def test_cli_run_is_deterministic(tmp_path):
    cli = os.environ["MLMCGRAD_CLI"]
    config = {
        "name": "det",
        "problem": {"type": "quadratic", "d": 6, "M": 2, "sigma": 0.2, "seed": 9},
        "methods": [{"name": "mlmc", "type": "mlmc", "compressor": "topk",
                     "distribution": "adaptive"}],
        "T": 40,
        "eta": 0.2,
        "seeds": [5],
        "output_dir": "out",
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))

    csvs = []
    for sub in ("a", "b"):
        env = dict(os.environ, MLMCGRAD_OUTPUT_ROOT=str(tmp_path / sub))
        proc = subprocess.run([cli, "run", str(cfg_path)], env=env,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        csvs.append((tmp_path / sub / "out" / "det_mlmc_5.csv").read_bytes())
    assert csvs[0] == csvs[1]


@pytest.mark.skipif("MLMCGRAD_CLI" not in os.environ,
                    reason="CLI path not provided")
def test_cli_rejects_bad_config(tmp_path):
    cli = os.environ["MLMCGRAD_CLI"]
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text('{"methods": [{"type": "mlmc", "compressor": "bogus"}], "eta": 0.1}')
    proc = subprocess.run([cli, "run", str(cfg_path)], capture_output=True,
                          text=True)
    assert proc.returncode == 1
    assert "compressor" in proc.stderr
