use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polygon: fewer than 3 distinct vertices")]
    DegeneratePolygon,

    #[error("non-finite coordinate in polygon")]
    NonFiniteCoordinate,

    #[error("non-simple polygon")]
    NonSimplePolygon,

    #[error("degenerate pair: zero-area union")]
    DegeneratePair,

    #[error("polygon triangulation failed")]
    TriangulationFailed,

    #[error("cross-image matching: expected image `{expected}`, found `{found}`")]
    CrossImageMatching { expected: String, found: String },

    #[error("JSON parse error at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: missing field `{field}`{}", context_suffix(.context))]
    MissingField {
        field: String,
        context: Option<String>,
    },

    #[error("schema error: {message}")]
    Schema { message: String },

    #[error("geometry error: {message}{}", context_suffix(.context))]
    Geometry {
        message: String,
        context: Option<String>,
    },

    #[error("line {line}: {message}")]
    LineParse { line: usize, message: String },

    #[error("strong lexicon is missing a vocabulary for image `{image_id}`")]
    MissingImageLexicon { image_id: String },

    #[error("lexicon mode is `none`; no word list to match against")]
    LexiconModeNone,

    #[error("char_probs has {rows} rows but transcription has {chars} characters")]
    CharProbRowCount { rows: usize, chars: usize },

    #[error("invalid char_probs: {message}")]
    CharProbInvalid { message: String },

    #[error("prediction references unknown image `{image_id}`")]
    UnknownImage { image_id: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
