import logging
import os
from typing import List, Optional

from mcp.protocol import MCPMessage, reply
from utils.artifacts import write_json
from utils.lab import ChainKind, ChainSpec, LabReport, applicable_checks, run_check

logger = logging.getLogger(__name__)


class LabAgent:
    """
    Runs named checks of the ergodicity lab on one exact chain.
    """

    name = "LabAgent"

    def run_checks(self, message: MCPMessage) -> MCPMessage:
        """
        Args:
            message (MCPMessage): Message of type "LAB_REQUEST" with payload
                spec (ChainSpec), checks (list of names or ["all"]), t_max,
                blocks and an optional out_dir for per-check JSON reports.

        Returns:
            MCPMessage: "LAB_REPORT" with the report dicts and an overall passed flag.
        """
        assert message["type"] == "LAB_REQUEST"
        task = message["payload"]
        spec: ChainSpec = task["spec"]
        checks = _expand(task["checks"], spec.kind)
        out_dir: Optional[str] = task.get("out_dir")

        reports: List[LabReport] = []
        for check in checks:
            logger.info("lab %s on %s (N=%d)", check, spec.kind.value, spec.instance.n_spins)
            report = run_check(spec, check, t_max=task.get("t_max", 10 ** 4), blocks=task.get("blocks", 200))
            reports.append(report)
            if out_dir:
                path = os.path.join(out_dir, "lab", f"{spec.kind.value}_{check}.json")
                write_json(report.to_dict(), path, schema_name="lab_report")

        payload = {
            "reports": [report.to_dict() for report in reports],
            "passed": all(report.passed for report in reports),
        }
        return reply(message, self.name, "LAB_REPORT", payload)


def _expand(checks: List[str], kind: ChainKind) -> List[str]:
    if list(checks) == ["all"]:
        return applicable_checks(kind)
    return list(checks)
