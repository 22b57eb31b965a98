use core::fmt;

/// Errors raised by the data model and the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Column count is not a multiple of the block length, or a length mismatch.
    Shape(&'static str),
    /// A column deviates from unit norm by more than the tolerance.
    NotNormalized { column: usize, norm: f64 },
    /// A block with more columns than rows cannot be orthonormalized.
    BlockTooTall { block_len: usize, rows: usize },
    /// More active blocks requested than the signal has.
    TooManyBlocks { k: usize, n_blocks: usize },
    /// Noise calibration needs a nonzero clean measurement.
    ZeroSignal,
    /// An argument outside its admissible range.
    InvalidArgument(&'static str),
    /// Selected columns are numerically dependent.
    RankDeficient,
    /// Every remaining candidate block is numerically dependent on the selection.
    AllCandidatesDegenerate,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(what) => write!(f, "shape mismatch: {what}"),
            Error::NotNormalized { column, norm } => {
                write!(f, "column {column} has norm {norm}, expected 1")
            }
            Error::BlockTooTall { block_len, rows } => write!(
                f,
                "block length {block_len} exceeds row count {rows}; blocks cannot be orthonormalized"
            ),
            Error::TooManyBlocks { k, n_blocks } => {
                write!(f, "requested {k} active blocks but only {n_blocks} exist")
            }
            Error::ZeroSignal => f.write_str("noise calibration requires a nonzero signal"),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::RankDeficient => f.write_str("selected submatrix is rank deficient"),
            Error::AllCandidatesDegenerate => {
                f.write_str("every candidate block is dependent on the current selection")
            }
        }
    }
}

#[cfg(feature = "std")]
extern crate std;

#[cfg(feature = "std")]
impl std::error::Error for Error {}
