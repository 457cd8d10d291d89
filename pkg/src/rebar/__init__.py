"""Collision-safety verification for agents driven by ReLU network controllers.

Safety of every agent pair is decided from a polytope over-approximation of
the relative positions that can step into the pair's collision set.
"""

from .backproject import (
    OnlineVerdict,
    RbpoaSequence,
    Workspace,
    check_verified_safe,
    compute_rbpoa,
    compute_rbpoa_sequence,
    online_check,
    uncertainty_box,
)
from .dynamics import AgentModel, PairSystem, relative_position, rollout, step_pair
from .errors import (
    DimensionError,
    EmptyTarget,
    InvalidFacetCount,
    ModelError,
    NumericalError,
    ParseError,
    RebarError,
    ResourceExhausted,
    SchemaError,
    UnboundedError,
)
from .lingeo import HalfSpace, HSense, Polytope, contains_point, facet_directions, polytope_subset
from .multiagent import MultiAgentSystem, SafetyReport, SystemVerdict, verify_multiagent
from .network import ReluNetwork, forward, interval_bounds, load_network, save_network

__version__ = "0.1.0"
