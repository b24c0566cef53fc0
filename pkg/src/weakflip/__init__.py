"""Analysis toolkit for the two-message family of weak quantum coin flipping protocols."""

from .cheating import (
    CheatReport,
    DiagonalProfile,
    align,
    analyze,
    diagonal_profile,
    frontier,
    frontier_profile,
    holder_floor,
    paper_pa,
    paper_pb,
    preparer_max,
    receiver_max,
)
from .protocol import (
    Protocol,
    from_profile,
    outcome_prob,
    parse_protocol,
    post_measurement_state,
    reduced_state,
    serialize_profile,
    serialize_protocol,
    validate,
)

__version__ = "0.1.0"
