"""
Verification tools for validating benchmark result rows
"""
import math
from typing import List

from app.logger import logger
from app.models import ResultRow, RunStatus, VerificationResult


class VerifierTool:
    """Rule-based sanity checks on result rows before they are written"""

    def __init__(self, pass_score: float = 0.7):
        self.pass_score = pass_score

    def verify_row(self, row: ResultRow) -> VerificationResult:
        issues: List[str] = []
        score = 1.0

        if row.status == RunStatus.FAILED:
            if not row.error:
                issues.append("critical: failed row without an error message")
                score -= 0.5
            return VerificationResult(score=max(0.0, score), issues=issues, passed=score >= self.pass_score)

        if not (math.isfinite(row.rmse_mean) and math.isfinite(row.mae_mean)):
            issues.append("critical: non-finite mean error")
            score -= 1.0
        if len(row.rmse_per_step) != row.output_len or len(row.mae_per_step) != row.output_len:
            issues.append(f"critical: per-step vectors do not have {row.output_len} entries")
            score -= 0.5
        for n, (rmse, mae) in enumerate(zip(row.rmse_per_step, row.mae_per_step)):
            if mae > rmse * (1 + 1e-9) + 1e-12:
                issues.append(f"critical: MAE exceeds RMSE at step {n}")
                score -= 0.5
                break
        if row.num_test_examples < 1:
            issues.append("critical: no test examples")
            score -= 0.5
        if row.best_epoch > row.stopped_epoch:
            issues.append("best epoch after stopped epoch")
            score -= 0.2
        if row.train_time_s < 0:
            issues.append("negative training time")
            score -= 0.2

        score = max(0.0, score)
        passed = score >= self.pass_score and not any("critical" in issue for issue in issues)
        for issue in issues:
            logger.warning(f"{row.family.value} T_x={row.input_len} T_y={row.output_len} seed={row.seed}: {issue}")
        return VerificationResult(score=score, issues=issues, passed=passed)


# Global verifier instance
verifier_tool = VerifierTool()
