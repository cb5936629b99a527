"""Multi-objective annealing for software engineering selection problems.

NRP and FSP instances are compiled to penalty QUBOs and solved either whole
(MOQA) or by decomposition (CQHA), with NSGA-II and an exact
epsilon-constraint method as baselines and HV/IGD/SP/NoP indicators.
"""
from .baselines import (EpsilonConfig, Nsga2Config, ResourceLimitError, crowding_distance,
                        epsilon_constraint, exact_minimize, fast_non_dominated_sort, nsga2)
from .cqha import CqhaConfig, SubQubo, compose, cqha, decompose, energy_impact
from .indicators import (IndicatorReport, ParetoArchive, Solution, hv, igd, indicator_report, nop,
                         pareto_filter, spacing, union_front)
from .instances import (Constraint, Evaluation, InvalidInstance, Objective, ParseError,
                        ProblemInstance, Variable, evaluate, generate_fm, generate_nrp,
                        parse_classic_nrp, parse_dimacs_fm)
from .moqa import MoqaConfig, moqa
from .qubo import Qubo, QuboBuildConfig, compile_instance, model_to_qubo, scale_objectives
from .samplers import Sample, SamplerCapabilityError, SamplerSpec, sample, steepest_descent

__version__ = "0.1.0"
