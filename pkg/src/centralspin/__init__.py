"""Central-spin quantum sensor analysis: spectroscopy, ESEEM, noise, sensing."""

__version__ = "0.1.0"

from . import constants
from .spin_core import (Branch, EigenSystem, FieldConfig, HyperfineSet,
                        HyperfineTensor, OdmrLine, SensorParams, SpinMatrices,
                        build_electronic_hamiltonian, build_full_hamiltonian,
                        electronic_eigensystem, hermitian_eigensystem,
                        hyperfine_set_from_site1, odmr_spectrum,
                        spin1_operators, zero_field_peaks)
from .eseem import (EchoEnvelopeParams, NuclearPrecession, angle_sweep,
                    echo_coherence, electron_expectations, modulation_product,
                    nuclear_precession, site_modulation,
                    two_spin_echo_simulation)
from .fit_engine import (DEConfig, FitResult, FitSpace, HyperfineFitFixed,
                         RabiFit, StretchedExpFit, differential_evolution,
                         fit_hyperfine, local_refine,
                         pooled_mse_fixed_hyperfine, rabi_fit,
                         stretched_exp_fit)
from .noise_spec import (CoherenceTrace, CompositePsd, PowerLawPsd,
                         PulseSequence, QuadratureSpec, TabulatedPsd,
                         chi_from_psd, coherence_from_psd, filter_function,
                         fit_composite_psd, fit_piecewise_psd, frequency_grid,
                         pulse_centers, reliable_window)
from .pulse_sim import (AcScanResult, AcSignal, ControlSchedule,
                        DecoherenceResult, GaussianDisorder, NoiseTrace,
                        Segment, ac_sensing_scan, control_error_fidelity,
                        control_schedule, disorder_averaged_fidelity,
                        evolve_two_level, monte_carlo_decoherence,
                        noise_trace_from_psd)
from .sensitivity import (ApdEstimate, ReadoutBudget, SensitivityReport,
                          apd_photon_estimate, detection_threshold,
                          ensemble_readout_efficiency, eta_ac,
                          optimal_sensing_time, sensitivity_report)

__all__ = [name for name in dir() if not name.startswith("_")]
