"""Diagonal-entropy dynamics and excited-state transition signatures in the LMG model."""
from .betafit import BetaParams, FitResult, beta_cdf, beta_pdf, fit_beta, regularized_incomplete_beta, rmse
from .dynamics import (
    EntropyTimeSeries,
    EquilibrationReport,
    QuenchEnsemble,
    StrengthFunction,
    diagonal_entropy,
    entropy_series,
    equilibration_report,
    occupations,
    quench_ensemble,
    strength_function,
    survival_probability,
)
from .eigen import EigenConvergenceError, SpectralDecomposition, eigh_tridiagonal, eigvalsh_tridiagonal, rescale_energies
from .model import ModelParams, TridiagonalHamiltonian, build_hamiltonian, classical_hamiltonian, critical_field
from .scan import CriticalEstimate, LambdaScan, Window, extract_critical, lambda_scan
from .semiclassic import DensityOfStates, density_of_states, quantum_dos_histogram
from .stats import EmpiricalCDF, EmpiricalDistribution, MomentSet, cdf, central_moment, empirical_distribution, moments, standardize

__version__ = "0.1.0"
