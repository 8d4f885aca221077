//! Numerical laboratory for a single-spin Josephson junction embedded in a
//! transmon circuit.
//!
//! The crate covers the full analysis chain for such a device:
//!
//! * [`circuit`]: circuit parameters and the joint spin + transmon
//!   Hamiltonian on the phase circle, assembled in the charge basis.
//! * [`spectrum`]: dense Hermitian diagonalization, product-state labelling
//!   and transition classification.
//! * [`coupling`]: closed-form zero-point-fluctuation and spin-transmon
//!   coupling estimates.
//! * [`sweep`]: flux and field sweeps, avoided-crossing detection and
//!   g-factor extraction.
//! * [`fit`]: a deterministic damped least-squares engine with the model
//!   catalogue used in time-domain qubit analysis.
//! * [`telegraph`]: two-state telegraph simulation, dwell-time statistics,
//!   double-Gaussian histograms and single-shot assignment fidelity.
//!
//! Energies are expressed as frequencies in GHz throughout; times are in the
//! unit of whichever axis a fit consumes (ns or us in practice).

pub mod circuit;
pub mod constants;
pub mod coupling;
pub mod fit;
pub mod spectrum;
pub mod sweep;
pub mod telegraph;

pub use circuit::{
    build_joint_hamiltonian, zeeman_from_field, BasisSpec, CircuitParams, Gauge, ModelError,
    ZeemanField,
};
pub use coupling::{coupling_strengths, ej_eff, phi_zpf, spin_rotation, CouplingEstimate};
pub use fit::{fit, FitError, FitModel, FitOutcome, Model};
pub use spectrum::{
    diagonalize, label_states, solve_circuit, transitions, EigenSolution, SpectrumError, Spin,
    StateLabel, Transition, TransitionKind,
};
pub use sweep::{
    find_avoided_crossing, fit_gfactor, linspace, sweep_field, sweep_flux, CrossingReport,
    FieldSpec, GFactorFit, SweepAxis, SweepError, SweepPoint, SweepResult,
};
pub use telegraph::{
    assignment_fidelity, double_gaussian_fit, dwell_times, histogram, simulate_telegraph,
    DoubleGaussianFit, DwellReport, DwellStats, FidelityReport, ShotSet, TelegraphError,
    TelegraphSpec, TelegraphTrace,
};
