//! Kähler–Ricci flow on the axisymmetric sphere.

pub mod flow;
pub(crate) mod sphere;

pub use flow::{
    convergence_report, convergence_report_with, cr_stability_report, dc_length_of_flow, fit_decay_rate, krf_integrate,
    ricci_potential, scalar_curvature, ConvergenceSummary, FlowControls, FlowSample, FlowStatus,
    FlowTrajectory, Gauge, StabilityRun, StabilitySummary, SymmetricSphereMetric, Thresholds,
};
