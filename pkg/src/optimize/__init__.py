"""Follower, leader and Stackelberg solvers."""

from src.optimize.encoding import (
    ControlEncoder,
    ControlGroup,
    SimplexGroups,
    decode_alpha,
    decode_beta,
    encode_alpha,
    encode_beta,
    project_capped_simplex,
)
from src.optimize.follower import FollowerConfig, FollowerResult, solve_follower
from src.optimize.genetic import GAConfig, GAResult, ga_minimize, pick_start
from src.optimize.local_search import (
    LocalResult,
    LocalSearchConfig,
    central_difference_gradient,
    local_minimize,
)
from src.optimize.stackelberg import (
    LeaderObjective,
    StackelbergConfig,
    StackelbergResult,
    solve_stackelberg,
)

__all__ = [
    # encoding
    "ControlGroup",
    "SimplexGroups",
    "ControlEncoder",
    "project_capped_simplex",
    "decode_alpha",
    "decode_beta",
    "encode_alpha",
    "encode_beta",
    # genetic
    "GAConfig",
    "GAResult",
    "ga_minimize",
    "pick_start",
    # local search
    "LocalSearchConfig",
    "LocalResult",
    "central_difference_gradient",
    "local_minimize",
    # follower
    "FollowerConfig",
    "FollowerResult",
    "solve_follower",
    # leader
    "LeaderObjective",
    "StackelbergConfig",
    "StackelbergResult",
    "solve_stackelberg",
]
