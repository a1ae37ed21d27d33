"""Human-readable reports for solver runs and regularity diagnostics."""
from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from .artifacts import format_float
from .diagnostics import FacetReport, JumpReport
from .solver import SolveReport


def _vec(v) -> str:
    return "(" + ", ".join(f"{float(x):.6g}" for x in np.ravel(v)) + ")"


#one block per continuation stage, one line per Newton iterate
def format_solve_report(report: SolveReport) -> str:
    lines: List[str] = []
    for stage in report.stages:
        if stage.max_gauge_excess is None:
            excess = "none (no triangles evaluated)"
        else:
            excess = f"{format_float(stage.max_gauge_excess)} triangles={stage.gauge_triangles}"
        lines.append(f"== stage {stage.m} iterations={stage.iterations} max_gauge_excess={excess} ==")
        for k, (energy, norm) in enumerate(zip(stage.energies, stage.gradient_norms)):
            lines.append(f"{k:04} energy {format_float(energy):>24} |grad| {format_float(norm)}")
    lines.append(f"== final el_residual_norm={format_float(report.el_residual_norm)} ==")
    return "\n".join(lines) + "\n"


def format_facets(reports: Sequence[FacetReport]) -> str:
    lines: List[str] = [f"facets {len(reports)}"]
    for facet in reports:
        verdict = "pass" if facet.passes else "FAIL"
        lines.append(f"== facet vertex {facet.vertex_index} {_vec(facet.vertex)} {verdict} ==")
        lines.append(f"  triangles      {len(facet.triangles)}")
        lines.append(f"  area           {format_float(facet.area)}")
        lines.append(f"  bisector       {_vec(facet.bisector)}")
        lines.append(f"  upper convex   {facet.upper_convex} violation {format_float(facet.upper_violation)} points {len(facet.upper_chain)}")
        lines.append(f"  lower concave  {facet.lower_concave} violation {format_float(facet.lower_violation)} points {len(facet.lower_chain)}")
    return "\n".join(lines) + "\n"


def format_jumps(report: JumpReport) -> str:
    lines: List[str] = [
        f"jump edges {len(report.jump_edges)} (threshold {format_float(report.jump_tol)})",
        f"segments {len(report.segments)} compliant {len(report.compliant_segments)}",
    ]
    for index, segment in enumerate(report.segments):
        verdict = "compliant" if segment.compliant else "non-compliant"
        lines.append(f"== segment {index} side {segment.side_index} {verdict} ==")
        lines.append(f"  point          {_vec(segment.point)}")
        lines.append(f"  direction      {_vec(segment.direction)}")
        lines.append(f"  extent         {format_float(segment.extent[0])} .. {format_float(segment.extent[1])}")
        lines.append(f"  edges          {segment.edge_count}")
        lines.append(f"  deviation_deg  {format_float(segment.angle_deviation)}")
        lines.append(f"  reach          start={segment.reach_start} end={segment.reach_end}")
        lines.append(f"  residual       {format_float(segment.residual)}")
    return "\n".join(lines) + "\n"


def format_curve(title: str, curve: Sequence[Tuple[float, float]]) -> str:
    lines = [f"== {title} =="]
    lines.extend(f"r {format_float(r):>24}  sup {format_float(value)}" for r, value in curve)
    return "\n".join(lines) + "\n"


__all__ = ["format_curve", "format_facets", "format_jumps", "format_solve_report"]
