import csv
import json
from pathlib import Path

import plotly.graph_objects as go
from plotly.subplots import make_subplots

COLORS = {
    "V_N": "#FF6B6B",
    "V_D": "#888888",
    "exante_delegation": "#00D9FF",
    "H": "#FFD166",
}


class FigureVisualizer:
    """Interactive HTML view of a figure CSV and its sidecar annotations."""

    def __init__(self, csv_path):
        self.csv_path = Path(csv_path)
        with open(self.csv_path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            self.columns = {name: [] for name in reader.fieldnames}
            for row in reader:
                for name, value in row.items():
                    self.columns[name].append(float(value))

        sidecar = self.csv_path.with_suffix(".json")
        self.meta = {}
        if sidecar.exists():
            with open(sidecar, "r", encoding="utf-8") as f:
                self.meta = json.load(f)

    def generate_html(self, output_path=None):
        if not output_path:
            output_path = self.csv_path.with_suffix(".html")

        fig = make_subplots(
            rows=2, cols=1,
            subplot_titles=("Envelopes", "Optimal delegation-stage payoff H"),
            vertical_spacing=0.12,
        )

        self._add_envelopes(fig)
        self._add_h(fig)
        self._add_markers(fig)

        fig.update_layout(
            title={
                "text": f"Delegation geometry<br><sub>{self.meta.get('figure_id', self.csv_path.stem)}</sub>",
                "x": 0.5,
                "xanchor": "center",
                "font": {"size": 22, "color": "#fff"},
            },
            height=900,
            showlegend=True,
            hovermode="x unified",
            template="plotly_dark",
            paper_bgcolor="#0F0F0F",
            plot_bgcolor="#1E1E1E",
            font=dict(color="#ddd"),
        )
        fig.update_xaxes(title_text="belief (Pr state 1)", range=[0, 1])

        fig.write_html(str(output_path))
        return str(output_path)

    def _line(self, fig, column, row, dash=None):
        fig.add_trace(
            go.Scatter(
                x=self.columns["belief"],
                y=self.columns[column],
                mode="lines",
                name=column,
                line=dict(color=COLORS[column], dash=dash),
            ),
            row=row, col=1,
        )

    def _add_envelopes(self, fig):
        self._line(fig, "V_N", 1)
        self._line(fig, "V_D", 1, dash="dot")

    def _add_h(self, fig):
        self._line(fig, "exante_delegation", 2, dash="dash")
        self._line(fig, "H", 2)

    def _add_markers(self, fig):
        notes = self.meta.get("annotations", {})
        for key, label in (("principal_cutoff", "μ_P"), ("agent_cutoff", "μ_A"), ("rho", "ρ")):
            x = notes.get(key)
            if x is not None:
                fig.add_vline(x=x, line=dict(color="#555", dash="dot"),
                              annotation_text=label, row="all", col=1)

        jump = notes.get("discontinuity")
        if jump:
            fig.add_trace(
                go.Scatter(
                    x=[jump["location"], jump["location"]],
                    y=[jump["limit"], jump["value"]],
                    mode="markers",
                    name="jump at ρ",
                    marker=dict(size=9, color=["#1E1E1E", COLORS["H"]],
                                line=dict(color=COLORS["H"], width=2)),
                ),
                row=2, col=1,
            )
