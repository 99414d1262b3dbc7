import math

from segbreak.datamodel import SegmentedCoefficients
from segbreak.ingest import SyntheticConfig
from segbreak.simulate import replication_seeds, run_simulation


def test_seeds_are_deterministic():
    assert replication_seeds(5, 4) == replication_seeds(5, 4)
    assert len(set(replication_seeds(5, 50))) == 50


def test_noiseless_study(noiseless_config):
    report = run_simulation(noiseless_config, reps=5, seed=1)
    assert report["recovery_rate"] == 1.0
    for stats in report["mean"].values():
        assert abs(stats["bias"]) < 1e-8
        assert stats["coverage"] == 1.0
    assert report["pattern"] == "break"


def test_no_break_pattern_flagged():
    coef = SegmentedCoefficients(1.0, 0.5, 1.0, 0.5, 175000)
    cfg = SyntheticConfig(coef, noise_sd=1.0, n=1000)
    report = run_simulation(cfg, reps=40, seed=3)
    assert report["pattern"] == "no-break"
    assert report["modal_argmin_share"] < 0.5
    assert len(report["argmin_distribution"]) >= 5


def test_workers_do_not_change_report(jump_config):
    a = run_simulation(jump_config, reps=6, seed=2, quantiles=(0.5,), workers=1)
    b = run_simulation(jump_config, reps=6, seed=2, quantiles=(0.5,), workers=3)
    assert a == b
    assert set(a["quantile"]) == {"quantile(0.5)"}
    assert math.isfinite(a["quantile"]["quantile(0.5)"]["b"]["rmse"])
