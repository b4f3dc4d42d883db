use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A state vector had the wrong length.
    DimensionMismatch { expected: usize, found: usize },
    /// The integrated state left the finite range; `t` is the last valid time.
    NonFinite { t: f64 },
    /// A precondition on the arguments failed.
    InvalidArgument(String),
    /// Fewer than the required number of samples on one side of every candidate center.
    WindowTooShort { needed: usize, available: usize },
    /// `a = 0` was passed where a regular FRW state is required.
    SingularState,
    /// No positive scale factor satisfies the Hamiltonian constraint.
    NoPhysicalRoot,
    /// The constraint residual exceeded its bound during evolution.
    ConstraintDrift { t: f64, residual: f64 },
    /// A Monte Carlo bin produced too few hits for a stable estimate.
    InsufficientHits {
        epsilon: f64,
        hits: u64,
        needed: u64,
    },
    /// A surface mesh is too coarse for the requested grain.
    MeshTooCoarse { spacing: f64, limit: f64 },
    /// Two spectral objects live on different quadrature grids.
    GridMismatch,
    /// A pole model has no pole in the lower half-plane.
    NoLowerPole,
    /// No sample of a decay curve falls in the fit window.
    WindowEmpty,
    /// The requested energy is not attained on the phase-space grid.
    EmptyShell { omega: f64, min: f64, max: f64 },
    /// Shell smoothing is narrower than the grid can resolve.
    ShellUnderResolved { sigma: f64, required: f64 },
    /// Mixture weights do not match the shells or are not normalized.
    WeightMismatch(String),
    /// Transported samples left the phase-space grid.
    FlowEscapedGrid { q: f64, p: f64 },
    /// A node id is not present in the graph.
    UnknownNode(String),
    /// The graph has zero or several initial instabilities.
    NoUniqueSource { count: usize },
    /// The graph's driving edges do not all point away from (or toward) the source.
    NotOriented,
    /// Consecutive path entries are not ordered by the graph's edges.
    PathViolatesOrder { from: String, to: String },
    /// The graph contains a directed cycle.
    Cyclic,
    /// Exact mirror-symmetry check skipped; `heuristic` is the refinement-based verdict.
    TooLargeForExact {
        nodes: usize,
        limit: usize,
        heuristic: bool,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite { t } => write!(f, "state became non-finite after t = {t}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::WindowTooShort { needed, available } => write!(
                f,
                "window too short: need {needed} samples on each side, have at most {available}"
            ),
            Error::SingularState => write!(f, "singular state (a = 0)"),
            Error::NoPhysicalRoot => write!(f, "no positive scale factor satisfies the constraint"),
            Error::ConstraintDrift { t, residual } => {
                write!(
                    f,
                    "constraint residual {residual:e} at t = {t} exceeds bound"
                )
            }
            Error::InsufficientHits {
                epsilon,
                hits,
                needed,
            } => write!(
                f,
                "only {hits} hits at epsilon = {epsilon} (need {needed}); increase the sample count"
            ),
            Error::MeshTooCoarse { spacing, limit } => {
                write!(f, "mesh spacing {spacing} exceeds {limit}")
            }
            Error::GridMismatch => write!(f, "state and observable use different grids"),
            Error::NoLowerPole => write!(f, "pole model has no lower half-plane pole"),
            Error::WindowEmpty => write!(f, "no samples inside the fit window"),
            Error::EmptyShell { omega, min, max } => {
                write!(f, "energy {omega} outside attainable range [{min}, {max}]")
            }
            Error::ShellUnderResolved { sigma, required } => {
                write!(
                    f,
                    "shell width {sigma} below grid resolution limit {required}"
                )
            }
            Error::WeightMismatch(msg) => write!(f, "weight mismatch: {msg}"),
            Error::FlowEscapedGrid { q, p } => {
                write!(f, "transported sample left the grid at (q, p) = ({q}, {p})")
            }
            Error::UnknownNode(id) => write!(f, "unknown node `{id}`"),
            Error::NoUniqueSource { count } => {
                write!(f, "expected exactly one initial instability, found {count}")
            }
            Error::NotOriented => write!(f, "driving edges do not share a single orientation"),
            Error::PathViolatesOrder { from, to } => {
                write!(f, "`{to}` is not reachable from `{from}`")
            }
            Error::Cyclic => write!(f, "graph contains a directed cycle"),
            Error::TooLargeForExact {
                nodes,
                limit,
                heuristic,
            } => write!(
                f,
                "{nodes} nodes exceed the exact limit of {limit}; heuristic verdict: {heuristic}"
            ),
        }
    }
}

impl core::error::Error for Error {}
