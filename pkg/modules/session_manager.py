import json
import logging
import os
import re
from datetime import datetime
from pathlib import Path

logger = logging.getLogger(__name__)

OUTPUT_ENV = "DELEGATIX_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "delegatix_runs"
RUN_SUBDIRS = ("results", "figures", "reports")


def resolve_output_dir(explicit=None):
    """--out flag, then $DELEGATIX_OUTPUT_DIR, then ./delegatix_runs"""
    if explicit:
        return Path(explicit)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return Path(DEFAULT_OUTPUT_DIR)


def _now():
    return datetime.now().strftime("%Y-%m-%d %H:%M:%S")


class SessionManager:
    """One run directory per scenario per day; every command appends to its operations log."""

    def __init__(self, base_dir=None):
        self.base_dir = resolve_output_dir(base_dir)
        self.current_session = None
        self.operation_counter = 0

    def start_session(self, scenario_name, scenario_info=None):
        """Start or resume the run for this scenario"""
        stem = re.sub(r'[^A-Za-z0-9_.-]+', "_", Path(str(scenario_name)).stem) or "scenario"
        date_str = datetime.now().strftime("%Y-%m-%d")
        session_id = f"run_{stem}_{date_str}"

        session_dir = self.base_dir / session_id
        session_dir.mkdir(parents=True, exist_ok=True)
        for subdir in RUN_SUBDIRS:
            (session_dir / subdir).mkdir(exist_ok=True)

        metadata_path = session_dir / "session_metadata.json"

        if metadata_path.exists():
            with open(metadata_path, "r", encoding="utf-8") as f:
                metadata = json.load(f)
            metadata["session_last_updated"] = _now()
            self.operation_counter = len(metadata.get("operations_log", []))
            logger.info("[+] resuming run %s", session_id)
        else:
            metadata = {
                "session_id": session_id,
                "scenario": scenario_info or {},
                "session_created": _now(),
                "session_last_updated": _now(),
                "operations_log": [],
            }
            self.operation_counter = 0
            logger.info("[+] new run %s", session_id)

        self.current_session = {
            "metadata": metadata,
            "session_dir": session_dir,
            "metadata_path": metadata_path,
        }

        self._save_metadata()
        return session_dir

    def get_next_operation_id(self):
        self.operation_counter += 1
        return f"op_{self.operation_counter:04d}"

    def log_operation(self, operation_type, status, log_file=None, record_count=None):
        """Add operation to the run log"""
        if not self.current_session:
            return None

        operation_entry = {
            "operation_id": self.get_next_operation_id(),
            "operation_type": operation_type,
            "timestamp": _now(),
            "status": status,
        }

        if log_file:
            operation_entry["log_file"] = str(log_file)
        if record_count is not None:
            operation_entry["record_count"] = record_count

        self.current_session["metadata"]["operations_log"].append(operation_entry)
        self.current_session["metadata"]["session_last_updated"] = _now()
        self._save_metadata()

        return operation_entry["operation_id"]

    def _save_metadata(self):
        if not self.current_session:
            return

        with open(self.current_session["metadata_path"], "w", encoding="utf-8") as f:
            json.dump(self.current_session["metadata"], f, indent=2, ensure_ascii=False)

    def get_session_dir(self):
        if self.current_session:
            return self.current_session["session_dir"]
        return None
