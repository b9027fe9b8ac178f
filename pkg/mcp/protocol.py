import uuid
from typing import Literal, TypedDict

# Message types exchanged between the CLI, the coordinator and the engine agents
MessageType = Literal[
    "ANNEAL_REQUEST",       # Run the replica (pimc) or classical (sa) chain for one seed
    "ANNEAL_RESULT",        # Trace and best energy of one annealing run
    "GFMC_REQUEST",         # Run the weighted walkers for one seed
    "LAB_REQUEST",          # Run named checks on an exact chain
    "LAB_REPORT",           # Reports produced by the lab
    "INSTANCE_REQUEST",     # Generate a random instance
    "INSTANCE",             # A generated or loaded instance
    "EXPERIMENT_REQUEST",   # Run a full experiment config over all seeds
    "EXPERIMENT_SUMMARY",   # Summary document of an experiment
    "COMPARE_REQUEST",      # Compare schedules across several configs
    "COMPARISON",           # Comparison table
]


class MCPMessage(TypedDict):
    """
    Envelope for every request and result passed between agents.

    Fields:
        sender (str): Name of the agent sending the message (e.g., "CLI", "CoordinatorAgent").
        receiver (str): Target agent (e.g., "PimcAgent", "LabAgent").
        type (MessageType): Type of message being sent (defined above).
        trace_id (str): Identifier shared by a request and all messages it causes.
        payload (dict): Content specific to the message type.
    """
    sender: str
    receiver: str
    type: MessageType
    trace_id: str
    payload: dict


def new_trace_id() -> str:
    return uuid.uuid4().hex


def reply(message: MCPMessage, sender: str, type: MessageType, payload: dict) -> MCPMessage:
    """Builds the answer to message, keeping its trace_id."""
    return MCPMessage(
        sender=sender,
        receiver=message["sender"],
        type=type,
        trace_id=message["trace_id"],
        payload=payload,
    )
