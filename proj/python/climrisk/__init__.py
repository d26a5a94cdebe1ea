"""Climate physical-risk stress testing for equity portfolios.

Thin wrapper over the C++ core; see the README for the pipeline and the
artifact formats.
"""

from ._climrisk import (
    ClimriskError,
    bs_call,
    cluster_alpha,
    expected_shortfall,
    gordon_shock,
    lewis_call,
    run,
    solve_fvm,
    var,
    write_fixture,
)

__all__ = [
    "ClimriskError",
    "bs_call",
    "cluster_alpha",
    "expected_shortfall",
    "gordon_shock",
    "lewis_call",
    "run",
    "solve_fvm",
    "var",
    "write_fixture",
]
