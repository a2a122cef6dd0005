"""Instance files, baselines, experiment runner and CLI."""
from .baselines import baseline_greedy, baseline_sieve_streaming
from .experiment import COLUMNS, SWEEP_COLUMNS, memory_sweep, report, run_experiment
from .instances import Instance, generate_instance, load_instance, save_instance
