"""Multi-digit Ising mapping for low-precision Ising solvers."""
from ._backend import BACKEND
from .anneal import AnnealParams, SolveResult, solve, solve_exact
from .errors import (
    BoundError,
    BudgetError,
    DimensionError,
    InvariantError,
    MdIsingError,
    NormalizationError,
    ParseError,
)
from .hardware import COBI, DeviceProgram, HardwareProfile, native_quantize, program_energy, validate
from .ising import IsingProblem, absorb_linear_terms, brute_force_ground_state, energy, normalize
from .mimo import PipelineConfig, ber, detect, generate_instance, mld_oracle, mld_to_ising
from .multidigit import (
    MappingPlan,
    MultiDigitConfig,
    decode,
    factorize_min_copies,
    map_problem,
    map_three_digit,
    map_two_digit,
)

__version__ = "0.1.0"
