"""Gaussian random fields, nodal censuses, and component-intensity estimation."""

from .spectral import (SpectralMeasure, SphereSurface, CubeLebesgue,
                       GaussianDensity, AtomSet, TabulatedDensity,
                       LinearImage, CovarianceKernel, MomentMatrix,
                       Rho4Certificate, DegenerateMeasureError,
                       covariance_from_spectrum, kernel_derivative,
                       check_rho1, check_rho2, check_rho3,
                       check_rho4_interior_point, check_rho4_quadratic,
                       barrier_search, check_rho4, measure_from_config)
from .fields import (GridWindow, FieldSample, field_from_function,
                     read_field, write_field, write_labels)
from .ensembles import (Stationary, Trigonometric, Kostlan,
                        sample_stationary, sample_trigonometric,
                        sample_kostlan_sphere, sample_kostlan_chart,
                        torus_subwindow, scaled_kernel, exact_kernel,
                        limit_measure, kernel_convergence_report,
                        controllability_probe, controllability_entry,
                        gradient_covariance, ScaledKernelReport,
                        spec_from_config)
from .sphere import SphereMesh, SphereFieldSample
from .topology import (BallWindow, BoxWindow, PolytopeWindow, SignGrid,
                       NodalCensus, ZeroComponent, StabilityCertificate,
                       sign_grid, zero_components, count_in_ball,
                       count_in_window, nodal_domains,
                       domains_compactly_in_ball, origin_domain_volume,
                       sphere_components, sphere_zero_component_count,
                       ring_component_count, stability_certificate,
                       bulinskaya_statistic, sandwich_check,
                       ball_count_fields)
from .estimator import (estimate_nu, ergodic_average, double_scaling,
                        total_count_kostlan, det_scaling_test,
                        NuEstimate, CensusStatistics, DoubleScalingEstimate,
                        KostlanTotalResult, DetScalingResult, ErgodicAverages)
from .util import vol_ball, rng_stream, config_hash, tune_allocator

__version__ = "0.1.0"
