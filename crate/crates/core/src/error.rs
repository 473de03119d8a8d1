use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} is outside 1..={k}")]
    VertexOutOfRange { vertex: usize, k: usize },
    #[error("duplicate edge ({0},{1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at {0} in an undirected graph")]
    SelfLoop(usize),
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexCountMismatch(usize, usize),
    #[error("invalid contraction assignment: {0}")]
    BadAssignment(String),
    #[error("k = {k} exceeds the exhaustive limit {max}")]
    TooLarge { k: usize, max: usize },
    #[error("malformed graph file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("position {t} is outside 1..={len}")]
    PositionOutOfRange { t: usize, len: usize },
    #[error("k + m = {size} exceeds the enumeration cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("cannot parse schedule item `{0}`")]
    Parse(String),
    #[error("invalid schedule: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("assignment is missing {0}")]
    Missing(String),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("stage {t} loads {found}, expected {expected}")]
    WrongItemKind { t: usize, expected: &'static str, found: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("malformed assignment: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cannot extend an unbounded program")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("no certificate graphs given")]
    EmptyFamily,
    #[error("no feasible branch")]
    Infeasible,
    #[error("invalid branch: {0}")]
    Branch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearningGraphError {
    #[error("invalid parameters: {0}")]
    Parameters(String),
    #[error("learning graph would have {count} vertices, above the limit {limit}")]
    TooLarge { count: u128, limit: u128 },
    #[error("invalid triangle: {0}")]
    Triangle(String),
    #[error("no bipartite graph of type {{({l},{d})}},{{({g},l*d/g)}} exists")]
    NoSuchType { l: usize, g: usize, d: usize },
    #[error("empty stage {0:?}")]
    EmptyStage(std::ops::Range<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("table entry ({row},{col}) = {value} is outside [0,{q})")]
    EntryOutOfRange { row: usize, col: usize, value: u32, q: u32 },
    #[error("table must be square with {n} rows of {n} entries")]
    Shape { n: usize },
    #[error("empty partial assignment")]
    EmptyAssignment,
    #[error("malformed table: {0}")]
    Format(String),
    #[error("instance too large for exhaustive certificate enumeration: {0}")]
    TooLarge(String),
}
