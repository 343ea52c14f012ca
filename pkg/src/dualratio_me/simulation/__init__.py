from .population import GeneratedPopulation, SyntheticPopulationSpec, generate_population
from .sampling import draw_srswor, observe_with_error
from .monte_carlo import MonteCarloConfig, MonteCarloResult, run_monte_carlo
