import csv
import json
import logging
from datetime import datetime
from pathlib import Path

import numpy as np

from modules.delegation import exante_delegation_payoff
from modules.design import h_piecewise
from modules.model_core import delegation_envelope, non_delegation_envelope

logger = logging.getLogger(__name__)

GRID_POINTS = 1000
COLUMNS = ("belief", "V_N", "V_D", "exante_delegation", "H")


def format_float(value):
    """17 significant digits, stable across runs"""
    return f"{float(value):.17g}"


class FigureBuilder:
    """Envelope and H data on a belief grid, plus the exact geometry as a sidecar JSON."""

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)

    def build_rows(self, prefs, agent_signal, points=GRID_POINTS):
        beliefs = np.linspace(0.0, 1.0, points)
        h = h_piecewise(agent_signal, prefs)
        h_values = h.values(beliefs)

        rows = []
        for x, hx in zip(beliefs, h_values):
            x = float(x)
            rows.append((
                x,
                non_delegation_envelope(prefs, x),
                delegation_envelope(prefs, x),
                exante_delegation_payoff(x, agent_signal, prefs),
                float(hx),
            ))
        return rows, h

    def build(self, prefs, agent_signal, name="delegation_geometry", source=None):
        """Write <name>.csv and <name>.json; returns both paths"""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        rows, h = self.build_rows(prefs, agent_signal)

        csv_path = self.output_dir / f"{name}.csv"
        with open(csv_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(COLUMNS)
            for row in rows:
                writer.writerow([format_float(v) for v in row])

        sidecar = {
            "figure_id": name,
            "generated_at": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            "source": source,
            "columns": list(COLUMNS),
            "grid_points": len(rows),
            "preferences": prefs.to_dict(),
            "agent_signal": agent_signal.to_dict(),
            "aligned": prefs.aligned,
            "annotations": h.annotations(),
        }
        json_path = self.output_dir / f"{name}.json"
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(sidecar, f, indent=2, ensure_ascii=False)

        logger.info("✓ figure data written to %s", csv_path)
        return str(csv_path), str(json_path)
