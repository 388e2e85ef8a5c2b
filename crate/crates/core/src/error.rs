//! Error types shared across the crate.

use thiserror::Error;

/// Structural problems in instances, grids and schedules.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("grid must span at least 7 days so the recurring week fits, got {num_days}")]
    GridTooShort { num_days: usize },
    #[error("grid must have at least one day and one slot per day")]
    EmptyGrid,
    #[error("office window [{start}, {end}) is empty or exceeds the day")]
    BadOfficeWindow { start: usize, end: usize },
    #[error("no Monday inside the grid")]
    NoMonday,
    #[error("slot {slot} out of range (grid has {total} slots)")]
    SlotOutOfRange { slot: usize, total: usize },
    #[error("series `{name}` has length {len}, grid expects {expected}")]
    SeriesLengthMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: usize },
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: usize },
    #[error("activity {id}: {reason}")]
    BadActivity { id: usize, reason: String },
    #[error("battery {id}: {reason}")]
    BadBattery { id: usize, reason: String },
    #[error("prerequisite graph contains a cycle involving activity {id}")]
    PrerequisiteCycle { id: usize },
    #[error("recurring activity {id} has no schedule entry")]
    MissingRecurringEntry { id: usize },
    #[error("schedule entry for activity {id} does not match its kind")]
    KindMismatch { id: usize },
    #[error("battery {id}: action string has length {len}, grid expects {expected}")]
    ActionLengthMismatch {
        id: usize,
        len: usize,
        expected: usize,
    },
    #[error("once-off interval [{start}, {end}) exceeds the grid ({total} slots)")]
    IntervalOutOfRange {
        start: usize,
        end: usize,
        total: usize,
    },
}

/// Evaluation errors (most evaluator outputs are data, not errors).
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown battery id {0}")]
    UnknownBattery(usize),
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("scenario {index} has length {len}, grid expects {expected}")]
    ScenarioLengthMismatch {
        index: usize,
        len: usize,
        expected: usize,
    },
}

/// Errors from the forecast module (parsing and metrics).
#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("series `{0}` not found")]
    UnknownSeries(String),
    #[error("history is entirely missing")]
    AllMissing,
    #[error("fewer than {required} non-missing values at weekly position {position}")]
    InsufficientHistory { position: usize, required: usize },
    #[error("history has {len} values, at least {required} (one period) required")]
    HistoryTooShort { len: usize, required: usize },
    #[error("forecast and actual lengths differ ({forecast} vs {actual})")]
    LengthMismatch { forecast: usize, actual: usize },
    #[error("training series too short: need more than the seasonal period {season}")]
    TrainingTooShort { season: usize },
    #[error("seasonal-naive denominator is zero (training constant at lag {season})")]
    ZeroDenominator { season: usize },
    #[error("empty input")]
    Empty,
}

/// Errors from instance generation.
#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("generator needs role `{0}` series covering the grid")]
    MissingSeries(&'static str),
    #[error("series `{name}` does not cover the grid ({len} < {expected})")]
    SeriesTooShort {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("series `{name}` has missing values inside the grid window")]
    SeriesHasMissing { name: String },
    #[error("office window too small for sampled durations")]
    GridTooSmall,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors from the MIP layer.
#[derive(Debug, Error)]
pub enum MipError {
    #[error("instance has no office slots, nothing can be scheduled")]
    NoOfficeSlots,
    #[error("schedule places activity {id} on start {start}, which the model pruned")]
    PrunedStart { id: usize, start: usize },
    #[error("scenario {index} has length {len}, grid expects {expected}")]
    ScenarioLengthMismatch {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable name collision after sanitization: `{0}`")]
    NameCollision(String),
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
    #[error("solution file line {line}: {message}")]
    BadSolutionLine { line: usize, message: String },
    #[error("no feasible room assignment: blocked at slot {slot} for activity {activity}")]
    NoRoomAssignment { slot: usize, activity: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors from the solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("search space estimate {estimate:.3e} exceeds the cap {cap:.3e}")]
    SearchSpaceTooLarge { estimate: f64, cap: f64 },
    #[error("no feasible placement for activity {id}")]
    NoFeasiblePlacement { id: usize },
    #[error("input schedule is infeasible: {0} violation(s)")]
    InfeasibleInput(usize),
    #[error("peak cap {cap} is below the fixed load {load} at slot {slot}")]
    InfeasiblePeakCap { cap: f64, load: f64, slot: usize },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
