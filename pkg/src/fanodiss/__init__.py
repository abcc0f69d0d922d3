"""Dissipative Fano model: Lindblad steady states, emission spectra, closed-form
profiles and profile fitting."""

__version__ = "0.1.0"

from .model import (SpecError, SystemSpec, ReducedParams, DiscretizedModel, ValidationReport,
                    validate_spec, reduced_parameters, discretize, band_for, spec_for_profile)
from .liouvillian import (Superoperator, build_rwa_hamiltonian, build_dissipator_continuum,
                          build_dissipator_vib, build_dephasing, assemble_liouvillian)
from .steadystate import (SteadyStateError, DegenerateSteadyState, solve_direct,
                          solve_perturbative, steady_state, excited_population)
from .spectra import (SpectrumSeries, PeakReport, resolvent_solve, emission_spectrum,
                      component_analysis, absorption_scan, angular_prefactor)
from .analytic import (ProfileSpec, LineshapeSpec, ExtractedParams, fano_h, profile_f,
                       excited_population_analytic, extinction_coefficient, table1_row,
                       emission_cross_section_analytic, prefactor_constants, extract_parameters)
from .fitting import FitReport, FitError, synth_profile, fit_profile, model_error_study

__all__ = [name for name in dir() if not name.startswith("_")]
