use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A mechanism violating its construction invariants was rejected.
    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    /// `beta == 0` together with a finite-variation jump part.
    #[error("infinite-variation violated: beta = 0 requires a stable jump part")]
    InfiniteVariationViolated,

    /// A Lévy-measure integral that does not converge for the given variant.
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    /// `psi_prime_of_inverse` at lambda = 0 with alpha = 0.
    #[error("degenerate at zero: psi'(0) = 0, reciprocal blows up")]
    DegenerateAtZero,

    /// A path simulation ran out of steps before reaching its goal.
    #[error("horizon exhausted after {steps} steps")]
    HorizonExhausted { steps: u64 },

    /// Stack erasure was asked to remove more mass than present.
    #[error("underflow: erasure of {requested} exceeds stack mass {available}")]
    StackUnderflow { requested: f64, available: f64 },

    /// Ancestral query above the height of the query point.
    #[error("above the point: a = {a} exceeds H_s = {h}")]
    AboveThePoint { a: f64, h: f64 },

    /// Query at a pruning time beyond the sampled mark horizon.
    #[error("beyond sampled horizon: theta = {theta} > theta_max = {theta_max}")]
    BeyondSampledHorizon { theta: f64, theta_max: f64 },

    /// Cut intervals that are neither nested nor disjoint.
    #[error("laminarity violated: intervals [{0}, {1}) and [{2}, {3}) overlap")]
    LaminarityViolated(usize, usize, usize, usize),

    /// Skeleton dislocation quantities require beta > 0.
    #[error("no skeleton part: beta = 0")]
    NoSkeletonPart,

    /// Node dislocation quantities require a nontrivial Lévy measure.
    #[error("no node part: pi = 0")]
    NoNodePart,

    /// Monte Carlo node estimation needs a finite-activity jump part.
    #[error("unsupported for MC: {0}")]
    UnsupportedForMc(String),

    /// Index out of range in a fragment operation.
    #[error("index out of range: {0}")]
    IndexOutOfRange(usize),

    /// Invalid argument to an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
