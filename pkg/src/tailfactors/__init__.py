"""Latent linear factor models for multivariate tail dependence.

A library plus CLI for simulating from the model, estimating the number of
factors, the loading matrix and the latent spectral measure from data, and
extrapolating joint tail-risk probabilities with GPD margins, hyperparameter
selection, and bootstrap uncertainty quantification.
"""

from .errors import (ConfigurationError, EstimationError, InputError,
                     ParameterError, StructuralError, TailFactorsError)
from .families import SubsetFamily, enumerate_family, family_max_min, family_min_max
from .loading import (FistaResult, LoadingEstimate, LspConfig, estimate_c,
                      fista_lasso, lambda_grid_default, lsp, ols_post_lasso,
                      simplex_project)
from .marginal import GpdFit, fit_margin, gpd_cdf, gpd_mle, tail_prob
from .model import (AtomList, DiscreteUnitAtoms, FactorModel, LoadingMatrix,
                    Mixture, SpectralSpec, SymmetricDirichlet, SyntheticSample,
                    ValidationReport, align_loading, delta_gap,
                    is_diagonally_dominant, sample_spectral_dependence,
                    simulate, stdf_oracle, tail_correlation_oracle,
                    tail_functional_oracle, tpdm_oracle, validate_model)
from .norms import Norm
from .purevar import PureVarResult, kappa_grid_default, pure_var
from .risk import (BootstrapCi, ConfigScore, FittedTailModel, HyperConfig,
                   TailProbability, bootstrap_ci, empirical_p, estimate_p,
                   lower_tail_transform, model_chi, r_squared, reciprocal,
                   select_hyperparameters)
from .spectral import (AggregatedObservations, SpectralSample, aggregate,
                       empirical_psi)
from .tpdm import (DataMatrix, PseudoObservations, Tpdm, empirical_chi,
                   empirical_tpdm, pseudo_pareto)
from .wind import (ExponentTable, WindPreprocessConfig, apply_extrapolation,
                   estimate_exponent_table, hellmann_exponent,
                   hellmann_extrapolate)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
