use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported group kind `{0}`")]
    UnsupportedKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("budget exceeded: {what} (limit {limit})")]
    BudgetExceeded { what: &'static str, limit: usize },
    #[error("incompatible generating set: {0}")]
    IncompatibleGenset(String),
    #[error("kernel element `{element}` is not in peripheral {peripheral}")]
    KernelNotInPeripheral { peripheral: usize, element: String },
    #[error("unknown peripheral {0}")]
    UnknownPeripheral(usize),
    #[error("malformed word `{word}`: {reason}")]
    MalformedWord { word: String, reason: String },
    #[error("vertices are disconnected inside the window")]
    DisconnectedInWindow,
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("regular path needs an apex deeper than the horoball window")]
    WindowTooShallow,
    #[error("no preimage edge inside the source window at step {step}")]
    NoPreimageEdge { step: usize },
    #[error("singular value gap {gap} at index {index} is too small for a flag")]
    GapTooSmall { index: usize, gap: f64 },
    #[error("flag types differ")]
    TypeMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("path is empty")]
    EmptyPath,
    #[error("malformed label: {0}")]
    MalformedLabel(String),
    #[error("peripheral image of {peripheral} is not finite at index {index}")]
    PeripheralImageNotFinite { peripheral: usize, index: String },
    #[error("vertex is not in the window")]
    NotInWindow,
}

pub type Result<T> = core::result::Result<T, Error>;
