from .control import (
    ControlPoint,
    GameCoefficients,
    game_coefficients,
    hamiltonian_infimum,
    loss_individual,
    optimal_alpha,
    optimal_alpha_feedback,
    terminal_cost,
    value_function,
)
from .density import MeanFieldTriangle, expected_population_workload, triangle_density
from .equilibrium import (
    Allocation,
    EquilibriumResult,
    NegotiationTrace,
    Negotiator,
    aggregated_map,
    allocate_resources,
    closed_form_equilibrium,
    contraction_coefficient,
    negotiate_equilibrium,
    project_workload,
)
