import logging
from datetime import datetime

from reportlab.lib import colors
from reportlab.lib.pagesizes import LETTER
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

logger = logging.getLogger(__name__)

HEADER_BLUE = colors.HexColor("#003366")


def _fmt(value, digits=6):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def write_regime_report_pdf(report, output_path, scenario=None, design=None, source=None):
    """
    Regime comparison table as a PDF.

    `report` is RegimeReport.to_dict(); `scenario` and `design` are the
    to_dict() forms, printed as extra sections when given.
    """
    doc = SimpleDocTemplate(
        str(output_path),
        pagesize=LETTER,
        leftMargin=0.8 * inch,
        rightMargin=0.8 * inch,
        topMargin=1 * inch,
        bottomMargin=0.8 * inch,
    )

    styles = getSampleStyleSheet()
    body = ParagraphStyle("Body", parent=styles["Normal"], fontName="Helvetica",
                          fontSize=10, leading=14, textColor=colors.black)
    section_title = ParagraphStyle("SectionTitle", parent=styles["Heading2"], fontName="Helvetica-Bold",
                                   fontSize=13, leading=17, spaceAfter=10, textColor=HEADER_BLUE)
    header = ParagraphStyle("Header", fontName="Helvetica-Bold", fontSize=16, textColor=colors.white,
                            backColor=HEADER_BLUE, spaceAfter=12, leading=20,
                            borderPadding=(6, 6, 6, 6))

    story = [Paragraph("<b>delegatix regime report</b>", header)]

    metadata = [
        ["Generated On:", datetime.now().strftime("%Y-%m-%d %H:%M:%S")],
        ["Scenario:", source or "-"],
        ["OptimalJoint dominates:", "yes" if report.get("dominance_ok") else "NO"],
    ]
    meta_table = Table(metadata, colWidths=[1.8 * inch, 4.6 * inch])
    meta_table.setStyle(TableStyle([
        ("FONT", (0, 0), (-1, -1), "Helvetica", 9),
        ("TEXTCOLOR", (0, 0), (-1, -1), colors.HexColor("#333333")),
        ("ALIGN", (0, 0), (0, -1), "RIGHT"),
        ("BOTTOMPADDING", (0, 0), (-1, -1), 4),
    ]))
    story += [meta_table, Spacer(1, 0.25 * inch)]

    story.append(Paragraph("Policy regimes", section_title))
    rows = [["Rank", "Regime", "Expected payoff"]]
    for row in sorted(report.get("rows", []), key=lambda r: (r["rank"], r["regime"])):
        rows.append([str(row["rank"]), row["regime"], _fmt(row["payoff"], 10)])
    table = Table(rows, colWidths=[0.8 * inch, 2.8 * inch, 2.0 * inch])
    table.setStyle(TableStyle([
        ("FONT", (0, 0), (-1, 0), "Helvetica-Bold", 10),
        ("FONT", (0, 1), (-1, -1), "Helvetica", 10),
        ("BACKGROUND", (0, 0), (-1, 0), colors.HexColor("#DDE6F0")),
        ("GRID", (0, 0), (-1, -1), 0.5, colors.gray),
        ("ALIGN", (2, 1), (2, -1), "RIGHT"),
    ]))
    story += [table, Spacer(1, 0.25 * inch)]

    if design:
        story.append(Paragraph("Optimal public signal", section_title))
        for key in ("regime", "low_posterior", "high_posterior", "expected_payoff", "rho", "convexifiable"):
            story.append(Paragraph(f"{key}: {_fmt(design.get(key))}", body))
        signal = design.get("signal", {})
        story.append(Paragraph(f"signal: p0 = {_fmt(signal.get('p0'))}, p1 = {_fmt(signal.get('p1'))}", body))
        story.append(Spacer(1, 0.2 * inch))

    if scenario:
        story.append(Paragraph("Scenario", section_title))
        story.append(Paragraph(f"prior: {_fmt(scenario.get('prior'))}", body))
        for who in ("principal", "agent"):
            m = scenario["prefs"][who]
            story.append(Paragraph(
                f"{who}: u00={_fmt(m['u00'], 4)}, u01={_fmt(m['u01'], 4)}, "
                f"u10={_fmt(m['u10'], 4)}, u11={_fmt(m['u11'], 4)}", body))
        s, c = scenario["agent_signal"], scenario["constraint"]
        story.append(Paragraph(f"agent signal: q0={_fmt(s['t0'], 4)}, q1={_fmt(s['t1'], 4)}", body))
        story.append(Paragraph(f"constraint: [{_fmt(c['max_low'])}, {_fmt(c['max_high'])}]", body))

    def footer(canvas, doc):
        canvas.saveState()
        canvas.setFont("Helvetica", 9)
        canvas.setFillColor(colors.gray)
        canvas.drawRightString(7.5 * inch, 0.55 * inch, f"delegatix regime report - Page {doc.page}")
        canvas.restoreState()

    doc.build(story, onFirstPage=footer, onLaterPages=footer)
    logger.info("✓ PDF saved to %s", output_path)
    return str(output_path)
