"""Radial Loewner evolution laboratory.

Simulates circular Brownian driving paths, evolves point- and
measure-driven radial Loewner chains, and evaluates the occupation-measure
rate functions that govern the large-variance behaviour of the chains.
"""

from .paths import (
    CirclePath,
    OccupationMeasure,
    sample_circle_bm,
    occupation_measure,
    average_occupation,
    local_time_field,
)
from .measures import (
    MeasureS1,
    DrivingMeasure,
    LevelTuple,
    w1_circle,
    dn_distance,
    project_Pn,
    embed_Fn,
    coarsen,
    dirac_path_measure,
    uniform_driving,
)
from .loewner import (
    SubordinationChain,
    FlowResult,
    forward_flow,
    inverse_map,
    chain_maps,
    hull_grid,
    trace_point,
    caratheodory_distance,
)
from .rate import (
    RateReport,
    VariationalWitness,
    dirichlet_rate,
    variational_rate,
    tuple_rate,
    energy,
)

__all__ = [
    "CirclePath",
    "OccupationMeasure",
    "sample_circle_bm",
    "occupation_measure",
    "average_occupation",
    "local_time_field",
    "MeasureS1",
    "DrivingMeasure",
    "LevelTuple",
    "w1_circle",
    "dn_distance",
    "project_Pn",
    "embed_Fn",
    "coarsen",
    "dirac_path_measure",
    "uniform_driving",
    "SubordinationChain",
    "FlowResult",
    "forward_flow",
    "inverse_map",
    "chain_maps",
    "hull_grid",
    "trace_point",
    "caratheodory_distance",
    "RateReport",
    "VariationalWitness",
    "dirichlet_rate",
    "variational_rate",
    "tuple_rate",
    "energy",
]

__version__ = "0.1.0"
