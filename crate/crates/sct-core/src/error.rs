use core::fmt;

/// Errors raised by the core operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Sinogram has identical minimum and maximum; min-max normalization is undefined.
    ConstantSinogram,
    /// `(n_angles - 1)` is not divisible by the subsampling ratio.
    IndivisibleAngles { n_angles: usize, ratio: usize },
    /// Up-sampling ratio below 2.
    BadRatio(usize),
    /// Phantom specification field out of range.
    BadSpec(&'static str),
    /// 2D array dimensions do not agree with the configured geometry.
    SizeMismatch { expected: (usize, usize), got: (usize, usize) },
    /// Tensor shapes incompatible with the requested operation.
    ShapeMismatch,
    /// Empty input where at least one element is required.
    EmptyInput,
    /// Network width sequence is inconsistent.
    BadWidths,
    /// Input length is not divisible by `2^depth`.
    LengthNotDivisible { len: usize, depth: usize },
    /// Offset class outside `[1, R/2]`.
    BadOffset { offset: usize, ratio: usize },
    /// No training sinograms were supplied.
    EmptyDataset,
    /// Bundle trained for a different up-sampling ratio.
    RatioMismatch { bundle: usize, requested: usize },
    /// Sinogram smaller than one enhancement patch.
    TooSmall { rows: usize, cols: usize },
    /// Value is not finite.
    NotFinite,
    /// Geometry field out of range.
    BadGeometry(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ConstantSinogram => write!(f, "constant sinogram: min == max"),
            Error::IndivisibleAngles { n_angles, ratio } => write!(
                f,
                "cannot subsample {n_angles} angles by {ratio}: (n_angles - 1) not divisible"
            ),
            Error::BadRatio(r) => write!(f, "up-sampling ratio must be >= 2, got {r}"),
            Error::BadSpec(what) => write!(f, "bad phantom spec: {what}"),
            Error::SizeMismatch { expected, got } => write!(
                f,
                "size mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::ShapeMismatch => write!(f, "tensor shape mismatch"),
            Error::EmptyInput => write!(f, "empty input"),
            Error::BadWidths => write!(f, "inconsistent network widths"),
            Error::LengthNotDivisible { len, depth } => write!(
                f,
                "input length {len} not divisible by 2^{depth}"
            ),
            Error::BadOffset { offset, ratio } => {
                write!(f, "offset class {offset} invalid for ratio {ratio}")
            }
            Error::EmptyDataset => write!(f, "no training sinograms"),
            Error::RatioMismatch { bundle, requested } => write!(
                f,
                "bundle trained for ratio {bundle}, requested {requested}"
            ),
            Error::TooSmall { rows, cols } => {
                write!(f, "sinogram {rows}x{cols} smaller than a 64x64 patch")
            }
            Error::NotFinite => write!(f, "non-finite value"),
            Error::BadGeometry(what) => write!(f, "bad geometry: {what}"),
        }
    }
}

impl core::error::Error for Error {}
