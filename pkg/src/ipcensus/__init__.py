"""IPv4 /24-block utilization census toolkit.

Classifies every /24 block into a five-leaf taxonomy (reserved, available,
unrouted assigned, routed unused, used) by combining registry delegations,
BGP peer visibility, curated passive traffic from four vantage-point
kinds, and active-probe logs; reports coverage, per-group breakdowns,
contribution accounting, and Hilbert-curve rasters.
"""

__version__ = "0.1.0"

from .blockmap import (
    BlockLabelMap,
    BlockSet,
    RegistryCode,
    TaxonomyLabel,
    UNIVERSE_SIZE,
    block_of,
    finalize_taxonomy,
    parse_window,
)
from .errors import (
    CensusError,
    ConfigError,
    NoFeasibleThreshold,
    ParseError,
    PartitionViolation,
    ZeroVariance,
)

__all__ = [
    "BlockLabelMap",
    "BlockSet",
    "CensusError",
    "ConfigError",
    "NoFeasibleThreshold",
    "ParseError",
    "PartitionViolation",
    "RegistryCode",
    "TaxonomyLabel",
    "UNIVERSE_SIZE",
    "ZeroVariance",
    "block_of",
    "finalize_taxonomy",
    "parse_window",
    "__version__",
]
