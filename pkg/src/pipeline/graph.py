"""LangGraph orchestration of a CLI run."""

from typing import Literal

from langgraph.graph import END, StateGraph

from src.pipeline.nodes import (
    adjoint_node,
    export_node,
    follower_node,
    prepare_node,
    report_node,
    simulate_node,
    stackelberg_node,
)
from src.pipeline.state import PipelineState, needs_adjoint
from src.utils.logger import get_logger

logger = get_logger(__name__)


def route_from_prepare(state: PipelineState) -> Literal["adjoint", "report"]:
    """
    Route after preparation.

    Routes to:
    - adjoint: every scenario command
    - report: comparison of earlier runs
    """
    if needs_adjoint(state):
        logger.info("Routing: prepare -> adjoint")
        return "adjoint"
    logger.info("Routing: prepare -> report")
    return "report"


def route_from_adjoint(
    state: PipelineState,
) -> Literal["simulate", "follower", "stackelberg", "export"]:
    """
    Route after the adjoint is available.

    Routes to:
    - simulate / follower / stackelberg: the requested solve
    - export: the adjoint command stops here
    """
    command = state["command"]
    if command in ("simulate", "follower", "stackelberg"):
        logger.info(f"Routing: adjoint -> {command}")
        return command
    logger.info("Routing: adjoint -> export")
    return "export"


def create_pipeline_graph() -> StateGraph:
    """
    Create the run pipeline graph.

    Graph structure:
        START -> prepare -> [adjoint | report]
                 adjoint -> [simulate | follower | stackelberg | export]
                 simulate / follower / stackelberg -> export -> END
                 report -> END

    Returns:
        Uncompiled StateGraph
    """
    logger.debug("Building pipeline graph")

    graph = StateGraph(PipelineState)

    graph.add_node("prepare", prepare_node)
    graph.add_node("adjoint", adjoint_node)
    graph.add_node("simulate", simulate_node)
    graph.add_node("follower", follower_node)
    graph.add_node("stackelberg", stackelberg_node)
    graph.add_node("report", report_node)
    graph.add_node("export", export_node)

    graph.set_entry_point("prepare")

    graph.add_conditional_edges(
        "prepare",
        route_from_prepare,
        {"adjoint": "adjoint", "report": "report"},
    )
    graph.add_conditional_edges(
        "adjoint",
        route_from_adjoint,
        {
            "simulate": "simulate",
            "follower": "follower",
            "stackelberg": "stackelberg",
            "export": "export",
        },
    )

    graph.add_edge("simulate", "export")
    graph.add_edge("follower", "export")
    graph.add_edge("stackelberg", "export")
    graph.add_edge("export", END)
    graph.add_edge("report", END)

    logger.debug("Pipeline graph built successfully")
    return graph


def get_pipeline_graph():
    """
    Get the compiled pipeline graph.

    Returns:
        Compiled graph ready for invocation

    Example:
        >>> graph = get_pipeline_graph()
        >>> final = graph.invoke(create_initial_state("simulate", out_dir, scenario_path))
    """
    compiled = create_pipeline_graph().compile()
    logger.debug("Pipeline graph compiled")
    return compiled
