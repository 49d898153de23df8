"""Experiment runner, irrepresentable-condition check, output and CLI."""

from .experiments import (
    ExperimentPlan,
    ExperimentRecord,
    build_spec,
    cell_dimension,
    draw_vector,
    load_plan,
    plan_from_dict,
    run_benchmark,
    run_single,
    schedule_to,
)
from .ic import ICReport, irrepresentable_dual
from .report import box_stats, emit_boxplot_svg, emit_csv

__all__ = [
    "ExperimentPlan",
    "ExperimentRecord",
    "ICReport",
    "box_stats",
    "build_spec",
    "cell_dimension",
    "draw_vector",
    "emit_boxplot_svg",
    "emit_csv",
    "irrepresentable_dual",
    "load_plan",
    "plan_from_dict",
    "run_benchmark",
    "run_single",
    "schedule_to",
]
