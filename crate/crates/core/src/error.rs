use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("enclosures still overlap at {max_bits} bits and no symbolic equality found")]
    Undecidable { max_bits: u32 },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("zero vector not admitted")]
    ZeroVector,
    #[error("tuple not precedes-ordered at position {0}")]
    Unordered(usize),
    #[error("coefficient {0} is not in monomial form; sigma domain requires derivation-built functionals")]
    NonMonomialCoefficient(String),
    #[error("rank enumeration budget exhausted (enumerated {enumerated} tuples, weight reached {weight})")]
    RankBudget { enumerated: u64, weight: u64 },
    #[error("coefficient outside [-1,1]: {0}")]
    CoefficientRange(String),
    #[error("no derivation found within budget")]
    NotFound,
    #[error("scalar error: {0}")]
    Scalar(#[from] ScalarError),
}

/// Admissibility violations, reported with the 1-based tuple position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("elements not precedes-ordered at position {0}")]
    Order(usize),
    #[error("first element layer {layer} is below the gate M_{gate_n} = {gate}")]
    FirstGate { layer: String, gate_n: u64, gate: String },
    #[error("sigma chain violated at position {position}: required layer {required}, found {found}")]
    SigmaChain { position: usize, required: String, found: String },
    #[error("tree invariant violated: {0}")]
    Tree(String),
    #[error("certificate replay mismatch: {0}")]
    Replay(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("query support exceeds the window")]
    OutsideWindow,
    #[error("sandwich violated: {0}")]
    Sandwich(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("scalar error: {0}")]
    Scalar(#[from] ScalarError),
    #[error("coding error: {0}")]
    Coding(#[from] CodingError),
    #[error("violation: {0}")]
    Violation(#[from] Violation),
}
