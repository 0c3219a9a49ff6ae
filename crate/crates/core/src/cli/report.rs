use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::jscc::{DispersionReport, LosslessRho, ThresholdRow, Units};
use crate::separation::CurvePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u64,
    pub rate: f64,
    pub rate_v_min: f64,
    pub rate_v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub units: Units,
    pub capacity: f64,
    pub capacity_lower_bound: f64,
    pub capacity_upper_bound: f64,
    pub input_distribution: Vec<f64>,
    pub capacity_set_is_singleton: bool,
    pub v_min: f64,
    pub v_max: f64,
    pub v_min_positive: bool,
    pub eps: f64,
    pub rates: Vec<RateRow>,
    pub correction_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRateRow {
    pub n: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub units: Units,
    pub d: f64,
    pub d_max: f64,
    pub rate_distortion: f64,
    pub dispersion: f64,
    pub entropy: f64,
    pub lossless_dispersion: f64,
    pub eps: f64,
    pub rates: Vec<SourceRateRow>,
    pub correction_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsccReport {
    pub dispersion: DispersionReport,
    pub thresholds: Vec<ThresholdRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosslessReport {
    pub units: Units,
    pub rows: Vec<LosslessRho>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub rows: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEntry {
    pub n: u64,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub trials: u64,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub what: String,
    pub seed: u64,
    pub entries: Vec<SimEntry>,
}

/// Flat CSV row of a [`SimEntry`]; `values` is `key=value` pairs joined by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCsvRow {
    pub what: String,
    pub n: u64,
    pub label: String,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub trials: u64,
    pub values: String,
}

pub(crate) fn threshold_in_units(row: &ThresholdRow, units: Units) -> ThresholdRow {
    ThresholdRow {
        target_low: units.rate(row.target_low),
        target_high: units.rate(row.target_high),
        ..row.clone()
    }
}

pub(crate) fn lossless_in_units(row: &LosslessRho, units: Units) -> LosslessRho {
    LosslessRho {
        entropy: units.rate(row.entropy),
        capacity: units.rate(row.capacity),
        source_dispersion: units.variance(row.source_dispersion),
        ..row.clone()
    }
}
