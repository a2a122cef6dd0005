"""Semi-streaming multilinear threshold algorithms for non-negative submodular maximization
under a cardinality constraint."""
from .errors import CapacityError, InfeasibleError, InputError, InvariantError
from .extensions import (FractionalVector, estimate_partial_derivative, lovasz, multilinear_exact,
                         partial_derivative_exact, sample_count, sample_set, scale_for_budget)
from .objectives import (CoverageInstance, CoverageOracle, CutInstance, CutOracle, GroundSet,
                         HardInstance, HardOracle, ModularOracle, ValueOracle, make_coverage,
                         make_cut, make_hard_instance)
from .offline import brute_force, random_greedy
from .rounding import RoundingTrace, swap_round
from .sieve import (SieveParams, SieveRun, ThresholdState, choose_c, finalize, process_element,
                    run_auto_tau, run_known_tau, run_sampled)

__version__ = "0.1.0"
