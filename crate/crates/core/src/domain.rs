//! Core vocabulary types shared by every other module. No I/O, no algorithms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// FAA wake-turbulence weight class used by the separation reference table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightClass {
    Heavy,
    B757,
    Large,
    Small,
}

impl WeightClass {
    pub const ALL: [WeightClass; 4] = [
        WeightClass::Heavy,
        WeightClass::B757,
        WeightClass::Large,
        WeightClass::Small,
    ];

    /// Row/column index into the 4x4 reference matrix.
    pub fn index(self) -> usize {
        match self {
            WeightClass::Heavy => 0,
            WeightClass::B757 => 1,
            WeightClass::Large => 2,
            WeightClass::Small => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightClass::Heavy => "Heavy",
            WeightClass::B757 => "B757",
            WeightClass::Large => "Large",
            WeightClass::Small => "Small",
        }
    }
}

/// Maps an ICAO type designator to its weight class.
///
/// The table covers the types that show up in ARTCC-scale arrival traffic;
/// anything unknown falls back to `Large`, which is the medium class the
/// scheduling case studies assume.
pub fn weight_class_of(ac_type: &str) -> WeightClass {
    match ac_type.trim().to_ascii_uppercase().as_str() {
        // Boeing 757 family has its own wake category.
        "B752" | "B753" | "B75F" => WeightClass::B757,
        // Wide-body / heavy types.
        "B742" | "B744" | "B748" | "B762" | "B763" | "B764" | "B772" | "B773" | "B77L"
        | "B77W" | "B788" | "B789" | "B78X" | "A306" | "A310" | "A332" | "A333" | "A339"
        | "A342" | "A343" | "A345" | "A346" | "A359" | "A35K" | "A388" | "MD11" | "DC10"
        | "C17" | "K35R" => WeightClass::Heavy,
        // Light general aviation.
        "C150" | "C152" | "C172" | "C177" | "C182" | "C206" | "C210" | "P28A" | "P28R"
        | "PA24" | "PA28" | "PA32" | "PA34" | "PA44" | "BE33" | "BE35" | "BE36" | "BE58"
        | "SR20" | "SR22" | "DA40" | "DA42" | "M20P" => WeightClass::Small,
        // Everything else (narrow-body jets, regional jets, large turboprops)
        // is treated as the medium class.
        _ => WeightClass::Large,
    }
}

/// Kind of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Names of the feature columns, in the order rows are laid out.
///
/// The single categorical column is `acType`; its values are category indices
/// into [`FeatureSchema::categories`].
pub const FEATURE_COLUMNS: [(&str, ColumnKind); 28] = [
    ("acType", ColumnKind::Categorical),
    ("Latitude", ColumnKind::Numeric),
    ("Longitude", ColumnKind::Numeric),
    ("Altitude", ColumnKind::Numeric),
    ("Distance", ColumnKind::Numeric),
    ("Time", ColumnKind::Numeric),
    ("Hour", ColumnKind::Numeric),
    ("GroundSpeed", ColumnKind::Numeric),
    ("AC_600_ahead", ColumnKind::Numeric),
    ("AC_1800_ahead", ColumnKind::Numeric),
    ("AC_3600_ahead", ColumnKind::Numeric),
    ("AC_600_behind", ColumnKind::Numeric),
    ("AC_1800_behind", ColumnKind::Numeric),
    ("AC_3600_behind", ColumnKind::Numeric),
    ("EV_RRT_600", ColumnKind::Numeric),
    ("EV_RRT_1800", ColumnKind::Numeric),
    ("EV_RRT_3600", ColumnKind::Numeric),
    ("EV_LOOP_600", ColumnKind::Numeric),
    ("EV_LOOP_1800", ColumnKind::Numeric),
    ("EV_LOOP_3600", ColumnKind::Numeric),
    ("EV_GOA_600", ColumnKind::Numeric),
    ("EV_GOA_1800", ColumnKind::Numeric),
    ("EV_GOA_3600", ColumnKind::Numeric),
    ("windspeed", ColumnKind::Numeric),
    ("winddir", ColumnKind::Numeric),
    ("cloudcover", ColumnKind::Numeric),
    ("visibility", ColumnKind::Numeric),
    ("humidity", ColumnKind::Numeric),
];

/// Index of the `EV_LOOP_600` column, the conditional-predictor stage key.
pub const EV_LOOP_600_INDEX: usize = 17;
/// Index of the categorical `acType` column.
pub const AC_TYPE_INDEX: usize = 0;

/// Closed feature schema: the fixed column list plus the category dictionary
/// for the `acType` column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<String>,
    /// Sorted list of aircraft type designators; `acType` values are indices
    /// into this list.
    pub ac_types: Vec<String>,
}

impl FeatureSchema {
    /// The standard schema with the given aircraft-type dictionary.
    /// The dictionary is sorted so schemas built from the same set of types
    /// compare equal regardless of encounter order.
    pub fn standard(mut ac_types: Vec<String>) -> Self {
        ac_types.sort();
        ac_types.dedup();
        FeatureSchema {
            columns: FEATURE_COLUMNS.iter().map(|(n, _)| n.to_string()).collect(),
            ac_types,
        }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn kind(&self, index: usize) -> ColumnKind {
        FEATURE_COLUMNS[index].1
    }

    /// Category index for an aircraft type, if present in the dictionary.
    pub fn ac_type_index(&self, ac_type: &str) -> Option<usize> {
        self.ac_types.iter().position(|t| t == ac_type)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("feature vector has {got} values, schema has {want} columns")]
    SchemaMismatch { got: usize, want: usize },
    #[error("missing feature column {0}")]
    MissingColumn(String),
    #[error("unknown feature column {0}")]
    UnknownColumn(String),
    #[error("duplicate feature column {0}")]
    DuplicateColumn(String),
}

/// One schema-ordered feature row. Categorical values hold the category index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Build from schema-ordered values. Rejects length mismatches.
    pub fn from_values(schema: &FeatureSchema, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != schema.n_columns() {
            return Err(DomainError::SchemaMismatch {
                got: values.len(),
                want: schema.n_columns(),
            });
        }
        Ok(FeatureVector { values })
    }

    /// Build from named values. Every schema column must appear exactly once;
    /// unknown or duplicate names are rejected.
    pub fn from_named(
        schema: &FeatureSchema,
        named: &[(&str, f64)],
    ) -> Result<Self, DomainError> {
        let mut values = vec![f64::NAN; schema.n_columns()];
        let mut seen = vec![false; schema.n_columns()];
        for (name, value) in named {
            let idx = schema
                .column_index(name)
                .ok_or_else(|| DomainError::UnknownColumn(name.to_string()))?;
            if seen[idx] {
                return Err(DomainError::DuplicateColumn(name.to_string()));
            }
            seen[idx] = true;
            values[idx] = *value;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(DomainError::MissingColumn(schema.columns[missing].clone()));
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flight {
    pub id: String,
    pub callsign: String,
    pub ac_type: String,
    pub weight_class: WeightClass,
    /// Seconds (epoch or scenario-relative) at which the flight crossed the
    /// TMA boundary.
    pub entry_time: f64,
    pub features: FeatureVector,
    /// Boundary-to-threshold duration in seconds, when known. This is the
    /// regression label; absolute landing time is `entry_time + duration`.
    pub observed_duration: Option<f64>,
}

/// Per-flight predicted landing-duration distribution, summarized as
/// `(mu, sigma)` plus the raw quantile predictions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaDistribution {
    /// Predicted mean duration, seconds.
    pub mu: f64,
    /// Duration uncertainty, seconds, >= 0.
    pub sigma: f64,
    /// (quantile level, predicted duration), sorted by level, values
    /// non-decreasing after the crossing fix.
    pub quantiles: Vec<(f64, f64)>,
}

impl EtaDistribution {
    pub fn new(mu: f64, sigma: f64, quantiles: Vec<(f64, f64)>) -> Self {
        debug_assert!(sigma >= 0.0);
        EtaDistribution { mu, sigma, quantiles }
    }
}

/// Search statistics for one solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub nodes: u64,
    /// Wall-clock seconds. Reported, never part of golden output comparisons.
    pub wall_time_s: f64,
    /// False when the solver hit its time limit and returned an incumbent.
    pub proven: bool,
}

/// A landing order plus landing times for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    /// Permutation of flight indices, first landing first.
    pub order: Vec<usize>,
    /// Landing time per flight index (same indexing as the instance).
    pub landing_times: Vec<f64>,
    /// Completion time: last landing plus the configured return leg.
    pub makespan: f64,
    pub objective: f64,
    pub feasible: bool,
    pub stats: SolverStats,
}

impl ScheduleSolution {
    pub fn infeasible(n: usize, stats: SolverStats) -> Self {
        ScheduleSolution {
            order: Vec::new(),
            landing_times: vec![f64::NAN; n],
            makespan: f64::NAN,
            objective: f64::NAN,
            feasible: false,
            stats,
        }
    }

    /// Landing position (1-based) per flight index; None when infeasible.
    pub fn positions(&self) -> Option<BTreeMap<usize, usize>> {
        if !self.feasible {
            return None;
        }
        Some(
            self.order
                .iter()
                .enumerate()
                .map(|(pos, &f)| (f, pos + 1))
                .collect(),
        )
    }
}
