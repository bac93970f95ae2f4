use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// The renormalization loop of the encoder did not terminate, which means
    /// the precursor set of `symbol` is not of the form `{k, .., b*k - 1}`.
    #[error("non-b-unique coder: encoding symbol {symbol} from state {state} did not terminate")]
    NonBUnique { symbol: usize, state: u64 },

    #[error("truncated stream")]
    Truncated,

    #[error("symbol {0} is unencodable (zero frequency or empty precursor set)")]
    UnencodableSymbol(usize),

    #[error("symbol {symbol} outside alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: usize, alphabet_size: usize },

    #[error("state {state} outside normalized interval [{lower}, {upper})")]
    StateOutOfRange { state: u64, lower: u64, upper: u64 },

    #[error("alphabet too large for scale: {symbols} used symbols but only {slots} slots")]
    AlphabetTooLarge { symbols: usize, slots: u32 },

    #[error("scale_bits {0} outside supported range 1..=16")]
    InvalidScaleBits(u32),

    #[error("frequency model has no symbols")]
    EmptyModel,

    #[error("invalid frequency table: {0}")]
    InvalidTable(String),

    #[error("invalid renormalization parameters: {0}")]
    InvalidRenorm(String),

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("unknown variant tag {0}")]
    UnknownVariant(u8),

    #[error("variant unsupported by lane decoder")]
    LaneVariantUnsupported,

    #[error("lane count {0} outside supported range")]
    InvalidLaneCount(usize),

    #[error("malformed container: {0}")]
    Malformed(String),

    #[error("raw bit width {0} exceeds 32")]
    InvalidRawWidth(u32),

    #[error("schedule/stream mismatch: {0}")]
    ScheduleMismatch(String),
}
