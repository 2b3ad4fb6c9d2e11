"""Run pipeline: scenario -> adjoint -> solve -> artifacts."""

from src.pipeline.graph import create_pipeline_graph, get_pipeline_graph
from src.pipeline.nodes import (
    adjoint_node,
    export_node,
    follower_node,
    prepare_node,
    report_node,
    simulate_node,
    stackelberg_node,
)
from src.pipeline.state import COMMANDS, PipelineState, create_initial_state, needs_adjoint

__all__ = [
    # state
    "COMMANDS",
    "PipelineState",
    "create_initial_state",
    "needs_adjoint",
    # nodes
    "prepare_node",
    "adjoint_node",
    "simulate_node",
    "follower_node",
    "stackelberg_node",
    "report_node",
    "export_node",
    # graph
    "create_pipeline_graph",
    "get_pipeline_graph",
]
