"""Symbolic dynamics on planar lattice extensions: exact spectral and
displacement computations next to reproducible return-time experiments."""

__version__ = "0.1.0"

from . import errors
from .gibbs import (CylinderMass, MarkovMeasure, PairPotential, block_sft,
                    asymptotic_covariance_pair, asymptotic_variance_scalar,
                    clt_fluctuation_samples, cylinder_measure,
                    fundamental_matrix, gibbs_from_potential,
                    max_entropy_measure, min_log_cylinder,
                    potential_from_table, sample_point, sample_windows_batch)
from .llt import DisplacementTable, displacement_distribution, llt_conditional_check
from .planar import (PlanarWalkLaw, gaussian_law, lattice_law,
                     planar_return_prob, planar_tau_trend, uniform_disc_law)
from .returns import (QMatrixReport, ReturnRecord, cylinder_return_samples,
                      cylinder_return_time, extension_return_samples,
                      extension_return_time, hirata_budget,
                      nested_extension_returns, q_matrix, recurrence_beta,
                      rescaled_return_values, tau_lower_tail)
from .sft import (SftSpec, Window, check_primitive, cylinder_of,
                  enumerate_windows, metric_distance)
from .spectral import (LatticeObservable, SpectralReport, covariance_matrix,
                       hessian_check, mean_drift, nonarithmeticity_scan,
                       spectral_report, subleading_radius, twisted_eigenvalue)
from .stats import (Ecdf, KsResult, ReferenceCdf, SlopeFit, ks_distance,
                    ks_two_sample, slope_regression)
from .systems import (SystemBundle, build_full_shift, build_golden_mean,
                      build_lazy5, build_markov5, build_srw4, get_system,
                      system_names)
from .toy import (HeavyTailReturnSampler, build_return_sampler,
                  sum_growth_medians, toy_direct_vs_decomposed, toy_tau_cdf,
                  toy_tau_trend)
from .harness import (RunManifest, load_config, run_experiment,
                      validate_config)

__all__ = [name for name in dir() if not name.startswith("_")]
