"""Smoke test for the wcb extension module. Run after `maturin develop`."""

import math
import tempfile
from pathlib import Path

import wcb


def close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, (a, b)


def main():
    close(wcb.aging_factor(0.5, 2), math.sqrt(0.5))
    close(wcb.potential_init(0.0), 0.5)
    close(wcb.potential_update(0.5, 0.6), 0.8)
    sigma, pi = wcb.refresh_potential(1, 2, 7, 100, 0.5, 2)
    close(sigma, 0.5 + 0.07 + math.sqrt(0.5))
    close(pi, 1.0 / (1.0 + math.exp(-sigma)))

    shares = wcb.dividends(200.0, 0.5, {"a": 0.9, "b": 0.6, "c": 0.3})
    close(sum(shares.values()), 100.0)
    close(wcb.satisfaction(0.8, 1.0, 60.0, 50.0, 3, 0.5), 0.7)
    close(wcb.threshold_from_pool([0.7, 0.8, 0.9], 0.05)["threshold"], 0.75)

    tasks = [{"id": "t1", "budget": 100.0, "required_skills": ["a", "b"], "arrival": 0.0, "duration": 5.0}]
    volunteers = [
        {"id": "v1", "expense": 30.0, "skills": ["a"], "arrival": 0.0, "departure": 50.0,
         "willingness": 0.9, "bias": 0.5, "rating": 0.5},
        {"id": "v2", "expense": 40.0, "skills": ["b"], "arrival": 0.0, "departure": 50.0,
         "willingness": 0.8, "bias": 0.5, "rating": 0.5},
    ]
    picks = wcb.assign_round(tasks, volunteers)
    assert sorted(v for v, _ in picks["t1"]) == ["v1", "v2"], picks

    config = wcb.Config(rounds=4, round_length=10.0, replications=2, task_rate=3.0, volunteer_rate=30.0)
    assert config.replications == 2
    experiment = wcb.run_experiment(config)
    assert len(experiment) == 2
    reports = experiment.reports(0)
    assert [r["round"] for r in reports] == [1, 2, 3, 4]
    assert all(abs(x) <= 1e-6 for x in experiment.imbalances())

    with tempfile.TemporaryDirectory() as tmp:
        experiments, comparison = wcb.compare(config.replace(rng_seed=9), out_dir=tmp)
        assert [e.policy for e in experiments] == ["vrave", "fixed", "training", "increasing"]
        assert len(comparison["bands"]) == 7
        assert (Path(tmp) / "summary.json").exists()

    threshold = wcb.calibrate(config)["threshold"]
    assert 0.0 <= threshold <= 1.0

    for bad in (lambda: wcb.Config(gamma=2.0), lambda: wcb.Config(bogus=1), lambda: wcb.aging_factor(0.0, 1)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("wcb smoke test passed")


if __name__ == "__main__":
    main()
