use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("v = {v} outside declared domain [{lo}, {hi}]")]
    Domain { v: f64, lo: f64, hi: f64 },
    #[error("slaving function singular: tau({v}) = 0")]
    SingularSlaving { v: f64 },
    #[error("operation requires N = {required}, system has N = {actual}")]
    Usage { required: u8, actual: u8 },
    #[error("no saddle point of the potential in the domain")]
    NoSaddle,
    #[error("no center point of the potential in the domain")]
    NoCenter,
    #[error("potential never re-attains the saddle level right of the center")]
    NoConjugate,
    #[error("potential variation does not match the saddle-center-conjugate pattern: {0}")]
    PatternViolation(String),
    #[error("mu = {mu} outside the orbit window ({mu_0}, {mu_s})")]
    MuOutOfRange { mu: f64, mu_0: f64, mu_s: f64 },
    #[error("failed to bracket root in [{lo}, {hi}]")]
    RootBracketFailure { lo: f64, hi: f64 },
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("finite-difference step left the (mu_0, mu_s) window and could not be shrunk")]
    PerturbationLeavesWindow,
    #[error("predicted harmonic Hessian is degenerate: alpha_0 = {0}")]
    DegenerateAlpha0(f64),
    #[error("slaving is degenerate at the center: g_v = {0}")]
    DegenerateSlaving(f64),
    #[error("congruence basis is singular (det = {0})")]
    SingularBasis(f64),
    #[error("nonpositive curvature at expansion point: W''(0) = {0}")]
    NonpositiveAlpha(f64),
}
