"""One-pass unequal-probability sampling with immediate decisions.

Each unit of a stream is accepted or rejected as soon as it is observed,
using only the cumulative inclusion mass seen so far and the number of
units already taken. The package also ships Deville's systematic procedure
as a batch reference, closed-form joint inclusion probabilities,
Horvitz-Thompson estimation, and exact/Monte Carlo design checks.
"""

from .core import (
    Decision,
    Frame,
    NumericDriftError,
    SamplingError,
    StreamState,
    UnitRecord,
    Window,
    WindowLayout,
    build_window_layout,
    fractional_part,
)
from .deville import WindowDensity, build_window_density, deville_sample
from .estimators import EstimateReport, ht_estimate
from .ids import EmitMode, IdsSampler, four_case_threshold, run_stream, sample_ids
from .joint import CrossBorderChain, JointMatrix, joint_matrix, joint_probability
from .oracle import (
    DesignTable,
    check_first_order,
    check_joint,
    enumerate_deville_design,
    enumerate_ids_design,
    monte_carlo_design,
)

__version__ = "0.1.0"
