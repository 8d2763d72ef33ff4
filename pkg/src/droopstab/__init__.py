"""Stability certification for droop-controlled inverter networks.

Pipeline: parse a network description, Kron-reduce it to the inverter-only
coupling matrix, bound its droop-weighted spectrum against the worst-case
two-bus threshold, and emit closed-form certified regions of droop gains --
cross-validated against the full electromagnetic model's eigenvalues.
"""
from .laplacian import (MuSpectrum, add_line, generalized_laplacian,
                        gershgorin, mu_spectrum, scale_droop)
from .netmodel import (DEFAULT_OMEGA0, DEFAULT_TAU, Bus, IncidenceMatrix,
                       IsolatedNodesError, Line, LoadImpedance, NetworkError,
                       NetworkSpec, NonUniformRhoError, ReducedNetwork,
                       SchemaError, check_homogeneous_rho, eliminate_loads,
                       eliminate_virtual, incidence, kron_reduce, load_network,
                       parse_network, save_network, susceptance,
                       with_line_rhos, with_scaled_loads, with_uniform_rho)
from .networks import feeder123, synthetic_network, two_area
from .regions import (CertifiedRegion, CertifyResult, certify, default_mu_min,
                      equal_droops_at_mu, in_region, region_conservative,
                      region_equal, region_relative)
from .statespace import (DroopConfig, ModelAssemblyError, Spectrum,
                         StateMatrix, Verdict, assemble_full,
                         assemble_homogeneous, spectrum, verdict)
from .twobus import (MuCrSurface, QuinticCoeffs, WorstCase, mu_cr,
                     mu_cr_surface, quintic, roots, two_bus_stable, worst_case)
from .validate import (BenchRow, BoundaryPoint, ComplexityEstimate,
                       SampleReport, SamplerSpec, StationarityReport,
                       benchmark, complexity, find_stationary_rho, monte_carlo,
                       stationarity_check, true_boundary)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
