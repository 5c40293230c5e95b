import numpy as np
import pytest

from confsets.experiment import (
    ExperimentPlan,
    SweepPlan,
    comparison_report,
    run_experiment,
    run_sweep,
    trial_split,
    trial_u,
)
from confsets.metrics import coverage, efficiency, informativeness
from confsets.scores import ScoreSpec
from confsets.synth import SynthConfig, generate


@pytest.fixture(scope="module")
def synth_data():
    return generate(SynthConfig(n_classes=8, n_examples=600, seed=21))


class TestSplits:
    def test_partition_is_disjoint_and_complete(self):
        cal, test = trial_split(7, 0, 100, 0.45)
        assert sorted(np.concatenate([cal, test]).tolist()) == list(range(100))

    def test_split_depends_only_on_seed_trial_and_size(self):
        a = trial_split(7, 3, 100, 0.45)
        b = trial_split(7, 3, 100, 0.45)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        c = trial_split(7, 4, 100, 0.45)
        assert not np.array_equal(a[0], c[0])

    def test_default_ratio(self):
        cal, test = trial_split(0, 0, 1000, 13.5 / 30.0)
        assert len(cal) == 450 and len(test) == 550

    def test_u_stream_deterministic(self):
        assert np.array_equal(trial_u(5, 2, 50), trial_u(5, 2, 50))
        assert not np.array_equal(trial_u(5, 2, 50), trial_u(5, 3, 50))


class TestRunExperiment:
    def test_specs_share_identical_partitions(self, synth_data):
        # identical splits are observable through identical coverage for
        # scores that produce the same sets; probe via the split function
        P, labels = synth_data
        for t in range(3):
            a = trial_split(11, t, P.shape[0], 0.45)
            b = trial_split(11, t, P.shape[0], 0.45)
            assert np.array_equal(a[0], b[0])

    def test_perfect_classifier_all_metrics_one(self):
        K, n = 4, 80
        labels = np.arange(n) % K
        P = np.zeros((n, K))
        P[np.arange(n), labels] = 1.0
        plan = ExperimentPlan(specs=(ScoreSpec("ip"),), n_trials=1, master_seed=0)
        agg = run_experiment(P, labels, plan)[ScoreSpec("ip")]
        assert agg.coverage.mean == 1.0
        assert agg.efficiency.mean == 1.0
        assert agg.informativeness.mean == 1.0

    def test_rerun_bitwise_identical(self, synth_data):
        P, labels = synth_data
        plan = ExperimentPlan(specs=(ScoreSpec("pip"), ScoreSpec("ms")),
                              n_trials=4, master_seed=9)
        a = run_experiment(P, labels, plan)
        b = run_experiment(P, labels, plan)
        for spec in plan.specs:
            assert np.array_equal(a[spec].coverage.values, b[spec].coverage.values)
            assert np.array_equal(a[spec].efficiency.values, b[spec].efficiency.values)

    def test_metrics_recomputable_from_sets(self, synth_data):
        from confsets.experiment import _run_one
        P, labels = synth_data
        spec = ScoreSpec("repip", gamma=0.02, k_reg=3)
        sets, test_idx, _ = _run_one(P, labels, spec, 0.1, 3, 0, 0.45)
        plan = ExperimentPlan(specs=(spec,), n_trials=1, master_seed=3,
                              cal_fraction=0.45)
        agg = run_experiment(P, labels, plan)[spec]
        assert agg.coverage.values[0] == coverage(sets, labels[test_idx])
        assert agg.efficiency.values[0] == efficiency(sets)
        assert agg.informativeness.values[0] == informativeness(sets)

    def test_insufficient_data(self):
        plan = ExperimentPlan(specs=(ScoreSpec("ip"),), n_trials=1)
        with pytest.raises(ValueError):
            run_experiment(np.array([[0.6, 0.4]]), [0], plan)

    def test_fill_empty_removes_empty_sets(self, synth_data):
        P, labels = synth_data
        spec = ScoreSpec("ms")
        plan = ExperimentPlan(specs=(spec,), n_trials=3, master_seed=1,
                              alpha=0.5, fill_empty_with_argmax=True)
        agg = run_experiment(P, labels, plan)[spec]
        # every set has at least the argmax class
        assert agg.efficiency.min >= 1.0


class TestRunSweep:
    def test_zero_lambda_reproduces_aps(self, synth_data):
        P, labels = synth_data
        sweep = SweepPlan(parameter="lambda", grid=(0.0,), k_reg=3,
                          n_trials=3, master_seed=4)
        rows, _ = run_sweep(P, labels, sweep, "raps")
        plan = ExperimentPlan(specs=(ScoreSpec("aps"),), n_trials=3, master_seed=4)
        agg = run_experiment(P, labels, plan)[ScoreSpec("aps")]
        for r in rows:
            assert r["efficiency"] == agg.efficiency.values[r["trial"]]
            assert r["informativeness"] == agg.informativeness.values[r["trial"]]

    def test_saturation_reported_not_asserted(self, synth_data):
        P, labels = synth_data
        sweep = SweepPlan(parameter="gamma", grid=(0.5, 1.0), k_reg=3,
                          n_trials=3, master_seed=4)
        rows, saturation = run_sweep(P, labels, sweep, "repip")
        assert len(saturation) == 1
        assert 0 <= saturation[0]["identical_trials"] <= 3

    def test_paper_operating_point_runs(self, synth_data):
        P, labels = synth_data
        sweep = SweepPlan(parameter="gamma", grid=(0.02,), k_reg=3,
                          n_trials=2, master_seed=0)
        rows, _ = run_sweep(P, labels, sweep, "repip")
        assert len(rows) == 2

    def test_splits_shared_across_grid_values(self, synth_data):
        P, labels = synth_data
        sweep = SweepPlan(parameter="lambda", grid=(0.0, 10.0), k_reg=1,
                          n_trials=2, master_seed=8)
        rows, _ = run_sweep(P, labels, sweep, "raps")
        # huge lambda shrinks sets but never below the grid-shared split's
        # coverage floor; what we check is structural: same trials per value
        trials_per_value = {}
        for r in rows:
            trials_per_value.setdefault(r["value"], []).append(r["trial"])
        assert trials_per_value[0.0] == trials_per_value[10.0]

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            SweepPlan(parameter="lambda", grid=(0.5, 0.1))
        with pytest.raises(ValueError):
            SweepPlan(parameter="mu", grid=(0.1,))


class TestComparisonReport:
    def test_report_flags_expected_orderings(self, synth_data):
        P, labels = synth_data
        specs = (ScoreSpec("ip"), ScoreSpec("ms"), ScoreSpec("pip"))
        plan = ExperimentPlan(specs=specs, n_trials=5, master_seed=2)
        lines = comparison_report(run_experiment(P, labels, plan))
        assert len(lines) == 2
        assert "smallest mean set size" in lines[0]
        assert "highest singleton fraction" in lines[1]
