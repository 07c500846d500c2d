import logging
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

from config import settings
from errors import AffinityError, ParameterOrder
from ifs_model import (
    CONJUGATOR, CONJUGATOR_INV, IfsSystem, PaperFamily51Tail, SubsetSpec,
    build_isolated_point_family, build_paper_family_51, check_irreducibility, paper51_conditions,
    paper51_head_matrix,
)
from langfuse_utils import log_error, send_trace_minimal
from linalg2 import Matrix2
from spectrum import (
    CheckResult, certify_hole, isolated_point_demo, non_compact_demo,
    verify_digit_monotonicity, verify_lemma_crucial, verify_lemma_sI,
)

logger = logging.getLogger(__name__)

CONJUGACY_TOLERANCE = 1e-12


class VerificationBattery:
    """
    Runs every executable check of the conjugated-diagonal gallery in order,
    recording each step with its status, timing and margin
    """

    def __init__(self, system: Optional[IfsSystem] = None, budget: Optional[int] = None,
                 tolerance: Optional[float] = None, n_max: Optional[int] = None,
                 include_demos: bool = False):
        self.system = system or build_paper_family_51()
        if not isinstance(self.system.tail, PaperFamily51Tail):
            raise ParameterOrder("the verification battery needs the conjugated-diagonal gallery",
                                 {"system": self.system.name})
        self.budget = budget or settings.default_budget
        self.tolerance = tolerance or settings.default_tolerance
        self.n_max = n_max
        self.include_demos = include_demos
        self.app_name = settings.app_name
        params = self.system.parameters
        self.params = {k: float(params[k]) for k in ("beta", "gamma", "b", "d", "c", "eta")}

    def run(self) -> Dict[str, Any]:
        start_time = datetime.now()
        result: Dict[str, Any] = {
            "system": self.system.name,
            "parameters": self.params,
            "timestamp": start_time.isoformat(),
            "processing_steps": [],
            "checks": [],
            "final_result": {},
            "processing_time_seconds": 0,
        }
        steps: List[tuple] = [
            ("standing_assumptions", self._check_standing),
            ("conjugacy", self._check_conjugacy),
            ("irreducibility", self._check_irreducibility),
            ("head_growth", self._check_head_growth),
            ("prime_pressure_bound", self._check_crucial),
            ("digit_monotonicity", self._check_digits),
            ("hole_certificate", self._check_hole),
        ]
        if self.include_demos:
            steps += [("non_compact_demo", self._check_non_compact),
                      ("isolated_point_demo", self._check_isolated)]

        for name, step in steps:
            self._run_step(result, name, step)

        failed = [c for c in result["checks"] if not c["passed"] and not c["advisory"]]
        result["final_result"] = {
            "passed": not failed,
            "status": "all_checks_passed" if not failed else "checks_failed",
            "failed": [c["name"] for c in failed],
            "advisory_failures": [c["name"] for c in result["checks"]
                                  if not c["passed"] and c["advisory"]],
        }
        result["processing_time_seconds"] = (datetime.now() - start_time).total_seconds()
        self._log_battery(result)
        logger.info(f"Battery finished in {result['processing_time_seconds']:.2f}s: "
                    f"{result['final_result']['status']}")
        return result

    def _run_step(self, result: Dict[str, Any], name: str,
                  step: Callable[[], List[CheckResult]]) -> None:
        entry = {"step": name, "status": "started", "timestamp": datetime.now().isoformat()}
        result["processing_steps"].append(entry)
        logger.info(f"Running {name}")
        try:
            checks = step()
            result["checks"].extend(c.to_dict() for c in checks)
            entry["status"] = "completed"
        except AffinityError as e:
            entry["status"] = "failed"
            entry["error"] = e.to_dict()
            result["checks"].append(CheckResult(name, False, None, e.to_dict()).to_dict())
            log_error(type(e).__name__, str(e), {"step": name, **e.to_dict()["context"]})

    # -- steps -------------------------------------------------------------

    def _check_standing(self) -> List[CheckResult]:
        conditions = paper51_conditions(**self.params)
        return [CheckResult(f"condition:{k}", bool(v)) for k, v in conditions.items()]

    def _check_conjugacy(self) -> List[CheckResult]:
        beta, gamma = self.params["beta"], self.params["gamma"]
        expected = CONJUGATOR @ Matrix2.diag(1.0 / beta, 1.0 / gamma) @ CONJUGATOR_INV
        head = paper51_head_matrix(beta, gamma)
        error = max(abs(x - y) for x, y in zip(head.entries(), expected.entries()))
        return [CheckResult("conjugacy", error <= CONJUGACY_TOLERANCE,
                            CONJUGACY_TOLERANCE - error, {"max_entry_error": error})]

    def _check_irreducibility(self) -> List[CheckResult]:
        t = self.system.tail.start_index
        expected = [
            (SubsetSpec((1, 2, 3)), "reducible"),
            (SubsetSpec((1, t)), "strongly-irreducible"),
            (SubsetSpec((1, 2), t), "strongly-irreducible"),
            (SubsetSpec((), t), "strongly-irreducible"),
        ]
        checks = []
        for subset, want in expected:
            verdict = check_irreducibility(self.system, subset)
            checks.append(CheckResult(f"irreducibility:{subset.label()}", verdict.verdict == want,
                                      None, {"verdict": verdict.verdict, "expected": want,
                                             "witness": verdict.witness,
                                             "reason": verdict.reason}))
        return checks

    def _check_head_growth(self) -> List[CheckResult]:
        check = verify_lemma_sI(self.params["beta"], self.params["c"], self.params["eta"])
        # sufficient condition for the simplified bound only; the direct bound gates
        check.advisory = True
        return [check]

    def _check_crucial(self) -> List[CheckResult]:
        return [verify_lemma_crucial(system=self.system, budget=self.budget, **self.params)]

    def _check_digits(self) -> List[CheckResult]:
        t = self.system.tail.start_index
        return [verify_digit_monotonicity(self.system, SubsetSpec((1, 2)), t, t + 1,
                                          tolerance=self.tolerance)]

    def _check_hole(self) -> List[CheckResult]:
        hole = certify_hole(self.system, self.n_max, self.tolerance, self.budget)
        return [CheckResult("hole_certificate", hole.certified and hole.width > 0, hole.width,
                            hole.to_dict(), hole.certified)]

    def _check_non_compact(self) -> List[CheckResult]:
        report = non_compact_demo(budget=self.budget, system=self.system, with_hole=False)
        return [CheckResult("non_compact_demo", report.passed, report.shrink_factor,
                            report.to_dict())]

    def _check_isolated(self) -> List[CheckResult]:
        cloud = isolated_point_demo(self.tolerance, self.budget, self.n_max,
                                    system=build_isolated_point_family())
        return [CheckResult("isolated_point_demo", bool(cloud.details["bands_hold"]), None,
                            {"bands": cloud.details["bands"],
                             "violations": cloud.details["band_violations"],
                             "isolated_candidates": cloud.isolated_candidates})]

    # -- reporting ---------------------------------------------------------

    def _log_battery(self, result: Dict[str, Any]) -> None:
        try:
            send_trace_minimal(
                name="verification_battery",
                input_payload={"system": result["system"], "parameters": result["parameters"]},
                output_payload={
                    "status": result["final_result"]["status"],
                    "failed": result["final_result"]["failed"],
                    "processing_time": result["processing_time_seconds"],
                },
                metadata={"app_name": self.app_name, "timestamp": result["timestamp"]},
            )
        except Exception as e:
            logger.warning(f"Langfuse logging error: {e}")

    def get_validation_report(self, result: Dict[str, Any]) -> str:
        """Human-readable pass/fail table with margins"""
        final = result["final_result"]
        report = f"""
=== VERIFICATION REPORT ===
System: {result['system']}
Parameters: {', '.join(f'{k}={v:g}' for k, v in result['parameters'].items())}
Timestamp: {result['timestamp']}
Processing Time: {result['processing_time_seconds']:.2f} seconds

CHECKS:
"""
        for check in result["checks"]:
            mark = "✓" if check["passed"] else ("~" if check["advisory"] else "✗")
            margin = "" if check["margin"] is None else f"  margin {check['margin']:.17g}"
            note = "  (advisory)" if check["advisory"] else ""
            report += f"  {mark} {check['name']}{margin}{note}\n"

        report += f"\nFINAL: {'PASS' if final['passed'] else 'FAIL'}\n"
        if final["failed"]:
            report += "Failed checks:\n"
            for i, name in enumerate(final["failed"], 1):
                report += f"{i}. {name}\n"
        return report
