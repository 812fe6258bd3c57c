"""Core graph definition for one (trial, m) cell of a sweep."""

from typing import Any

from langgraph.graph import END, START, StateGraph

from shared.logging import get_logger
from .state import InputState, TrialState
from .utils.nodes import (
    ALGORITHM_NODES,
    acquire,
    generate,
    quantize,
    route_after_acquire,
    route_algorithms,
    score,
)

logger = get_logger(__name__)


def build_graph() -> Any:
    """Build the trial pipeline: generate -> acquire -> [quantize] -> algorithms -> score."""
    logger.debug("Building trial graph")

    builder = StateGraph(TrialState, input_schema=InputState)

    builder.add_node("generate", generate)
    builder.add_node("acquire", acquire)
    builder.add_node("quantize", quantize)
    for name, node in ALGORITHM_NODES.items():
        builder.add_node(name, node)
    builder.add_node("score", score)

    builder.add_edge(START, "generate")
    builder.add_edge("generate", "acquire")

    # Selected algorithms run side by side and all read the same measurements
    algorithms = list(ALGORITHM_NODES)
    builder.add_conditional_edges("acquire", route_after_acquire, ["quantize", *algorithms])
    builder.add_conditional_edges("quantize", route_algorithms, algorithms)

    for name in algorithms:
        builder.add_edge(name, "score")
    builder.add_edge("score", END)

    return builder.compile()
