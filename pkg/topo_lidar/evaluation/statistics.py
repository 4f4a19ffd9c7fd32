"""
Statistical evaluation of per-seed results.
Paired t-tests, Cohen's d and seed-sweep pass rates for comparing
optimizer variants run on the same seeds.
"""

import json
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from ..errors import TopoLidarError

logger = logging.getLogger(__name__)


class StatisticalEvaluator:
    def __init__(self, alpha: float = 0.001):
        self.alpha = alpha
        self.results = {}

    def paired_t_test(self, group1: Sequence[float], group2: Sequence[float],
                      name1: str = "Group 1", name2: str = "Group 2") -> Dict:
        """
        Paired t-test between two groups measured on the same seeds.
        Returns t-statistic, p-value, a 95% interval of the mean difference and interpretation.
        """
        a = np.asarray(group1, dtype=np.float64)
        b = np.asarray(group2, dtype=np.float64)
        if len(a) != len(b) or len(a) < 2:
            raise TopoLidarError(f"paired test needs two equal groups of >= 2 values, got {len(a)} and {len(b)}")

        diff = a - b
        mean_diff = float(diff.mean())
        if np.all(diff == diff[0]):
            # constant differences: scipy returns nan or inf, report the limit instead
            t_stat = 0.0 if mean_diff == 0 else float(np.sign(mean_diff) * np.inf)
            p_value = 1.0 if mean_diff == 0 else 0.0
            ci_95 = (mean_diff, mean_diff)
        else:
            t_stat, p_value = stats.ttest_rel(a, b)
            ci_95 = stats.t.interval(0.95, len(a) - 1, loc=mean_diff, scale=stats.sem(diff))

        return {
            "comparison": f"{name1} vs {name2}",
            "t_statistic": float(t_stat),
            "p_value": float(p_value),
            "mean_difference": mean_diff,
            "ci_95_lower": float(ci_95[0]),
            "ci_95_upper": float(ci_95[1]),
            "significant": bool(p_value < self.alpha),
            "significance_level": f"p < {self.alpha:g}" if p_value < self.alpha else f"p = {p_value:.4f}",
        }

    def cohens_d(self, group1: Sequence[float], group2: Sequence[float]) -> float:
        """
        Cohen's d effect size with pooled standard deviation.
        Interpretation: 0.2=small, 0.5=medium, 0.8=large, 2.0=very large
        """
        mean1, mean2 = np.mean(group1), np.mean(group2)
        std1, std2 = np.std(group1, ddof=1), np.std(group2, ddof=1)

        # Pooled standard deviation
        n1, n2 = len(group1), len(group2)
        pooled_std = np.sqrt(((n1 - 1) * std1**2 + (n2 - 1) * std2**2) / (n1 + n2 - 2))
        if pooled_std == 0:
            return 0.0 if mean1 == mean2 else float(np.sign(mean1 - mean2) * np.inf)
        return float((mean1 - mean2) / pooled_std)

    @staticmethod
    def interpret_effect(d: float) -> str:
        size = abs(d)
        if size < 0.2:
            return "negligible"
        if size < 0.5:
            return "small"
        if size < 0.8:
            return "medium"
        if size < 2.0:
            return "large"
        return "very large"

    def compare_variants(self, results: Sequence[float], baseline: Sequence[float],
                         name: str = "topo+anchor", baseline_name: str = "anchor-only") -> Dict:
        """Full statistical comparison of a variant against a baseline on shared seeds."""
        t_test = self.paired_t_test(results, baseline, name, baseline_name)
        effect_size = self.cohens_d(results, baseline)

        comparison = {
            "t_test": t_test,
            "cohens_d": effect_size,
            "effect_interpretation": self.interpret_effect(effect_size),
            "variant_mean": float(np.mean(results)),
            "baseline_mean": float(np.mean(baseline)),
            "difference": float(np.mean(results) - np.mean(baseline)),
        }
        self.results[t_test["comparison"]] = comparison
        return comparison

    def seed_sweep(self, values: Sequence[float], threshold: float, below: bool = True) -> Dict:
        """Fraction of seeds whose value is below (or at/above) `threshold`, with mean and std."""
        v = np.asarray(values, dtype=np.float64)
        if len(v) == 0:
            raise TopoLidarError("seed sweep needs at least one value")
        passed = v < threshold if below else v >= threshold
        return {
            "n_seeds": int(len(v)),
            "threshold": float(threshold),
            "pass_rate": float(passed.mean()),
            "mean": float(v.mean()),
            "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0,
        }

    def generate_report(self, comparisons: List[Dict], output_file: Optional[str] = None) -> Dict:
        """
        Bundle comparisons into a report; saved as JSON when `output_file` is given.
        """
        report = {
            "comparisons": comparisons,
            "summary": {
                "total_comparisons": len(comparisons),
                "significant_results": sum(1 for c in comparisons if c["t_test"]["significant"]),
            },
        }

        if output_file:
            with open(output_file, "w") as f:
                json.dump(report, f, indent=2)
            logger.info("[Stats] Report saved to %s", output_file)
        return report
