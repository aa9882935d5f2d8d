import json
import logging
from datetime import datetime

logger = logging.getLogger(__name__)


class DataLogger:
    """Writes each command's machine-readable result into the run directory."""

    def __init__(self, session_manager):
        self.session_manager = session_manager

    def _write(self, log_type, operation_type, data, metadata=None, record_count=None, status="success"):
        session_dir = self.session_manager.get_session_dir()
        if not session_dir:
            return None

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S_%f")
        log_file = session_dir / "results" / f"{log_type}_{timestamp}.json"

        log_data = {
            "log_type": log_type,
            "timestamp": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            "status": status,
            "record_count": record_count,
            "data": data,
            "metadata": metadata or {},
        }

        with open(log_file, "w", encoding="utf-8") as f:
            json.dump(log_data, f, indent=2, ensure_ascii=False)

        self.session_manager.log_operation(
            operation_type=operation_type,
            status=status,
            log_file=f"results/{log_file.name}",
            record_count=record_count,
        )
        logger.debug("wrote %s", log_file)
        return str(log_file)

    def log_delegation(self, report):
        return self._write("delegation", "delegate", report, record_count=1)

    def log_design(self, report):
        metadata = {"regime": report.get("design", {}).get("regime")}
        return self._write("design", "design", report, metadata, record_count=1)

    def log_sweep(self, rows, sweep_info):
        metadata = {
            "regimes": sorted({r["regime"] for r in rows}),
            "points": len({r["value"] for r in rows}),
        }
        metadata.update(sweep_info)
        return self._write("sweep", "sweep", rows, metadata, record_count=len(rows))

    def log_witness(self, outcome, prop):
        status = "success" if outcome.get("found") or outcome.get("reason") != "NotFound" else "failed"
        return self._write(f"witness_prop{prop}", "witness", outcome, {"prop": prop},
                           record_count=1 if outcome.get("found") else 0, status=status)

    def log_oracle(self, checks, settings):
        failed = [c["name"] for c in checks if not c["passed"]]
        metadata = dict(settings, failed=failed)
        return self._write("oracle_check", "oracle-check", checks, metadata,
                           record_count=len(checks), status="failed" if failed else "success")

    def log_report(self, report):
        return self._write("regime_report", "report", report, record_count=len(report.get("rows", [])))

    def log_figures(self, files):
        return self._write("figures", "figures", files, record_count=len(files))
