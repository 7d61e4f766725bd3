"""Search over items whose evaluation times differ, simulated in the query model."""
from .calculus import ProbInterval, aa_lower_bound, amplify_exact, best_rounds, choose_m
from .estimation import EstimateParams, estimate, est_amp
from .experiments import InstanceSpec, fit_constant, generate_instance
from .known_search import KnownConfig, known_search
from .lowerbound import reduction_harness, t_prime
from .model import CostMeter, Instance, load_instance, run_item
from .readonce import eval_readonce, parse_formula, random_formula
from .unknown_search import UnknownParams, unknown_search

__version__ = "0.1.0"
