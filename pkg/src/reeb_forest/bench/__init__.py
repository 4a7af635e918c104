"""Random instances, brute-force oracles, the Z_n family and property suites."""

from .generators import KINDS, random_graph, random_instances, random_metric, random_poset
from .suites import SUITES, run_verification
from .zn import ZnInstance, growth_comparison, make_zn, verify_lower_bound_argument

__all__ = [
    "KINDS",
    "random_graph",
    "random_instances",
    "random_metric",
    "random_poset",
    "SUITES",
    "run_verification",
    "ZnInstance",
    "growth_comparison",
    "make_zn",
    "verify_lower_bound_argument",
]
