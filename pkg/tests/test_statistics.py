import json

import numpy as np
import pytest
from scipy import stats

from topo_lidar.errors import TopoLidarError
from topo_lidar.evaluation.statistics import StatisticalEvaluator


@pytest.fixture
def evaluator():
    return StatisticalEvaluator(alpha=0.05)


def test_paired_t_test_agrees_with_scipy(evaluator, rng):
    a = rng.normal(1.0, 0.5, size=12)
    b = a - rng.normal(0.3, 0.2, size=12)
    result = evaluator.paired_t_test(a, b, "full", "ablated")
    t_stat, p_value = stats.ttest_rel(a, b)
    assert result["comparison"] == "full vs ablated"
    assert result["t_statistic"] == pytest.approx(t_stat)
    assert result["p_value"] == pytest.approx(p_value)
    assert result["ci_95_lower"] < result["mean_difference"] < result["ci_95_upper"]


def test_identical_groups(evaluator):
    result = evaluator.paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert result["t_statistic"] == 0.0
    assert result["p_value"] == 1.0
    assert not result["significant"]


def test_constant_shift_is_significant(evaluator):
    result = evaluator.paired_t_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
    assert result["t_statistic"] == float("inf")
    assert result["p_value"] == 0.0
    assert result["significant"]


def test_groups_must_pair_up(evaluator):
    with pytest.raises(TopoLidarError):
        evaluator.paired_t_test([1.0, 2.0], [1.0])
    with pytest.raises(TopoLidarError):
        evaluator.paired_t_test([1.0], [1.0])


def test_cohens_d(evaluator):
    assert evaluator.cohens_d([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]) == pytest.approx(-1.0)
    assert evaluator.cohens_d([5.0, 5.0], [5.0, 5.0]) == 0.0
    assert evaluator.cohens_d([6.0, 6.0], [5.0, 5.0]) == float("inf")


@pytest.mark.parametrize(
    "d, label",
    [(0.1, "negligible"), (-0.3, "small"), (0.6, "medium"), (-1.0, "large"), (2.5, "very large")],
)
def test_interpret_effect(d, label):
    assert StatisticalEvaluator.interpret_effect(d) == label


def test_compare_variants_is_recorded(evaluator):
    comparison = evaluator.compare_variants([1.0, 1.2, 0.9, 1.1], [2.0, 2.1, 1.8, 2.2])
    assert comparison["difference"] == pytest.approx(-0.975)
    assert comparison["effect_interpretation"] == "very large"
    assert "topo+anchor vs anchor-only" in evaluator.results


def test_seed_sweep(evaluator):
    sweep = evaluator.seed_sweep([0.01, 0.2, 0.05, 0.08], threshold=0.1)
    assert sweep["n_seeds"] == 4
    assert sweep["pass_rate"] == 0.75
    assert sweep["mean"] == pytest.approx(0.085)
    assert evaluator.seed_sweep([3.0], threshold=1.0, below=False)["pass_rate"] == 1.0
    with pytest.raises(TopoLidarError):
        evaluator.seed_sweep([], threshold=1.0)


def test_report_file(evaluator, tmp_path):
    comparison = evaluator.compare_variants([1.0, 1.1, 0.9], [2.0, 2.3, 1.9])
    path = tmp_path / "report.json"
    report = evaluator.generate_report([comparison], output_file=str(path))
    saved = json.loads(path.read_text())
    assert saved["summary"] == report["summary"]
    assert saved["summary"]["total_comparisons"] == 1
    assert np.isclose(saved["comparisons"][0]["difference"], comparison["difference"])
