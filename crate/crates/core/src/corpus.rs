//! Corpus I/O and generation: the CSV dataset format, a synthetic corpus
//! generator, the built-in benchmark presets, and the TOML run
//! configuration consumed by the CLI.
//!
//! A corpus directory holds four CSV files, each starting with a
//! `#schema:v1` comment line:
//!
//! - `mediators.csv`: `id,capacity,true_va,stations,case_types` with
//!   semicolon-separated lists; accreditation is the cross product of the
//!   listed stations and case types.
//! - `cases.csv`:
//!   `id,case_type,station,referral_mode,period,arrival_day,mediator_id,outcome,conclusion_day`
//!   with empty optionals; outcome is `1` (resolved) or `0`.
//! - `rates.csv`: `case_type,station,poisson_rate,base_p` per cell.
//! - `durations.csv`: `case_type,outcome,lognorm_location,lognorm_scale`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::domain::{CaseRecord, Cell, MediatorProfile};
use crate::error::{Error, Result};
use crate::policy::{PolicySpec, VaMode};
use crate::qp::PenaltyKind;
use crate::sim::{
    ArrivalModel, BeliefInit, CellParams, DurationModel, LogNormalParams, SimConfig, SimInputs,
};
use crate::va::ShrinkageConfig;

pub const SCHEMA_LINE: &str = "#schema:v1";

/// Errors from corpus and configuration loading, split by exit-code class:
/// schema/value problems (malformed input) versus integrity problems
/// (well-formed input that contradicts itself).
#[derive(Debug)]
pub enum CorpusError {
    /// Missing file, wrong header, or unsupported schema version.
    Schema { file: String, message: String },
    /// A field that fails to parse or is out of range.
    Value {
        file: String,
        row: usize,
        message: String,
    },
    /// Duplicate or dangling references across records.
    Integrity { file: String, message: String },
    Io { file: String, message: String },
}

impl std::fmt::Display for CorpusError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorpusError::Schema { file, message } => write!(f, "{file}: schema error: {message}"),
            CorpusError::Value { file, row, message } => {
                write!(f, "{file}: data row {row}: {message}")
            }
            CorpusError::Integrity { file, message } => {
                write!(f, "{file}: integrity error: {message}")
            }
            CorpusError::Io { file, message } => write!(f, "{file}: {message}"),
        }
    }
}

impl std::error::Error for CorpusError {}

impl CorpusError {
    /// True for the referential-consistency class of failures.
    pub fn is_integrity(&self) -> bool {
        matches!(self, CorpusError::Integrity { .. })
    }
}

/// A loaded dataset: roster, historical cases (with `p` joined from the
/// cell rates), and the arrival/duration models.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub roster: Vec<MediatorProfile>,
    pub cases: Vec<CaseRecord>,
    pub arrivals: ArrivalModel,
    pub durations: DurationModel,
}

impl Corpus {
    /// Repackages the corpus as simulation inputs (cases become history).
    pub fn into_inputs(self) -> SimInputs {
        SimInputs {
            roster: self.roster,
            arrivals: self.arrivals,
            durations: self.durations,
            history: self.cases,
        }
    }
}

fn schema_err(file: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        file: file.into(),
        message: message.into(),
    }
}

fn value_err(file: &str, row: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Value {
        file: file.into(),
        row,
        message: message.into(),
    }
}

fn integrity_err(file: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Integrity {
        file: file.into(),
        message: message.into(),
    }
}

/// Reads a corpus CSV: checks the schema comment (when present) and the
/// header, and returns the data records.
fn read_csv(
    dir: &Path,
    file: &str,
    expected_header: &[&str],
) -> std::result::Result<Vec<csv::StringRecord>, CorpusError> {
    let path = dir.join(file);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            schema_err(file, format!("missing file {}", path.display()))
        } else {
            CorpusError::Io {
                file: file.into(),
                message: e.to_string(),
            }
        }
    })?;
    match text.lines().next() {
        Some(first) if first.trim() == SCHEMA_LINE => {}
        Some(first) if first.starts_with("#schema:") => {
            return Err(schema_err(
                file,
                format!("unsupported schema `{}` (expected `{SCHEMA_LINE}`)", first.trim()),
            ));
        }
        _ => {
            return Err(schema_err(
                file,
                format!("missing `{SCHEMA_LINE}` header line"),
            ));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| schema_err(file, e.to_string()))?
        .clone();
    let got: Vec<&str> = header.iter().collect();
    if got != expected_header {
        return Err(schema_err(
            file,
            format!("header {got:?} does not match {expected_header:?}"),
        ));
    }
    reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| schema_err(file, e.to_string()))
}

fn parse_field<T: FromStr>(
    file: &str,
    row: usize,
    name: &str,
    raw: &str,
) -> std::result::Result<T, CorpusError> {
    raw.parse()
        .map_err(|_| value_err(file, row, format!("invalid {name} `{raw}`")))
}

fn parse_opt_field<T: FromStr>(
    file: &str,
    row: usize,
    name: &str,
    raw: &str,
) -> std::result::Result<Option<T>, CorpusError> {
    if raw.is_empty() {
        return Ok(None);
    }
    parse_field(file, row, name, raw).map(Some)
}

fn parse_outcome(
    file: &str,
    row: usize,
    raw: &str,
) -> std::result::Result<Option<bool>, CorpusError> {
    match raw {
        "" => Ok(None),
        "1" | "true" => Ok(Some(true)),
        "0" | "false" => Ok(Some(false)),
        other => Err(value_err(file, row, format!("invalid outcome `{other}`"))),
    }
}

fn parse_id_list(
    file: &str,
    row: usize,
    name: &str,
    raw: &str,
) -> std::result::Result<BTreeSet<u32>, CorpusError> {
    let mut out = BTreeSet::new();
    for tok in raw.split(';') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.insert(parse_field(file, row, name, tok)?);
    }
    if out.is_empty() {
        return Err(value_err(file, row, format!("{name} list is empty")));
    }
    Ok(out)
}

/// Loads and cross-validates a corpus directory.
pub fn load_corpus(dir: &Path) -> std::result::Result<Corpus, CorpusError> {
    // rates.csv
    let mut cells: BTreeMap<Cell, CellParams> = BTreeMap::new();
    for (i, rec) in read_csv(dir, "rates.csv", &["case_type", "station", "poisson_rate", "base_p"])?
        .iter()
        .enumerate()
    {
        let row = i + 1;
        let f = "rates.csv";
        let cell = Cell::new(
            parse_field(f, row, "case_type", rec.get(0).unwrap_or(""))?,
            parse_field(f, row, "station", rec.get(1).unwrap_or(""))?,
        );
        let rate: f64 = parse_field(f, row, "poisson_rate", rec.get(2).unwrap_or(""))?;
        let base_p: f64 = parse_field(f, row, "base_p", rec.get(3).unwrap_or(""))?;
        if !rate.is_finite() || rate < 0.0 {
            return Err(value_err(f, row, format!("rate {rate} out of range")));
        }
        if !(0.0..=1.0).contains(&base_p) {
            return Err(value_err(f, row, format!("base_p {base_p} outside [0, 1]")));
        }
        if cells.insert(cell, CellParams { rate, base_p }).is_some() {
            return Err(integrity_err(f, format!("duplicate cell {cell}")));
        }
    }

    // durations.csv
    let mut durations: BTreeMap<(u32, bool), LogNormalParams> = BTreeMap::new();
    for (i, rec) in read_csv(
        dir,
        "durations.csv",
        &["case_type", "outcome", "lognorm_location", "lognorm_scale"],
    )?
    .iter()
    .enumerate()
    {
        let row = i + 1;
        let f = "durations.csv";
        let case_type: u32 = parse_field(f, row, "case_type", rec.get(0).unwrap_or(""))?;
        let outcome = parse_outcome(f, row, rec.get(1).unwrap_or(""))?
            .ok_or_else(|| value_err(f, row, "outcome must be 0 or 1"))?;
        let location: f64 = parse_field(f, row, "lognorm_location", rec.get(2).unwrap_or(""))?;
        let scale: f64 = parse_field(f, row, "lognorm_scale", rec.get(3).unwrap_or(""))?;
        if !location.is_finite() || !scale.is_finite() || scale < 0.0 {
            return Err(value_err(f, row, "invalid log-normal parameters"));
        }
        if durations
            .insert((case_type, outcome), LogNormalParams { location, scale })
            .is_some()
        {
            return Err(integrity_err(
                f,
                format!("duplicate duration for type {case_type} outcome {outcome}"),
            ));
        }
    }
    for cell in cells.keys() {
        for outcome in [true, false] {
            if !durations.contains_key(&(cell.case_type, outcome)) {
                return Err(integrity_err(
                    "durations.csv",
                    format!(
                        "no duration for case type {} outcome {}",
                        cell.case_type, u8::from(outcome)
                    ),
                ));
            }
        }
    }

    // mediators.csv
    let mut roster: Vec<MediatorProfile> = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (i, rec) in read_csv(
        dir,
        "mediators.csv",
        &["id", "capacity", "true_va", "stations", "case_types"],
    )?
    .iter()
    .enumerate()
    {
        let row = i + 1;
        let f = "mediators.csv";
        let id = rec.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(value_err(f, row, "empty mediator id"));
        }
        if !seen_ids.insert(id.clone()) {
            return Err(integrity_err(f, format!("duplicate mediator id `{id}`")));
        }
        let capacity: u32 = parse_field(f, row, "capacity", rec.get(1).unwrap_or(""))?;
        let true_va: Option<f64> = parse_opt_field(f, row, "true_va", rec.get(2).unwrap_or(""))?;
        let stations = parse_id_list(f, row, "stations", rec.get(3).unwrap_or(""))?;
        let case_types = parse_id_list(f, row, "case_types", rec.get(4).unwrap_or(""))?;
        let accredited_cells: BTreeSet<Cell> = case_types
            .iter()
            .flat_map(|&t| stations.iter().map(move |&s| Cell::new(t, s)))
            .collect();
        roster.push(MediatorProfile {
            id,
            accredited_cells,
            capacity,
            load: 0,
            true_va,
        });
    }
    let roster_index: BTreeMap<&str, &MediatorProfile> =
        roster.iter().map(|m| (m.id.as_str(), m)).collect();

    // cases.csv
    let mut cases: Vec<CaseRecord> = Vec::new();
    let mut seen_cases: BTreeSet<String> = BTreeSet::new();
    for (i, rec) in read_csv(
        dir,
        "cases.csv",
        &[
            "id",
            "case_type",
            "station",
            "referral_mode",
            "period",
            "arrival_day",
            "mediator_id",
            "outcome",
            "conclusion_day",
        ],
    )?
    .iter()
    .enumerate()
    {
        let row = i + 1;
        let f = "cases.csv";
        let id = rec.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(value_err(f, row, "empty case id"));
        }
        if !seen_cases.insert(id.clone()) {
            return Err(integrity_err(f, format!("duplicate case id `{id}`")));
        }
        let cell = Cell::new(
            parse_field(f, row, "case_type", rec.get(1).unwrap_or(""))?,
            parse_field(f, row, "station", rec.get(2).unwrap_or(""))?,
        );
        let referral_mode: u32 = parse_field(f, row, "referral_mode", rec.get(3).unwrap_or(""))?;
        let period: u32 = parse_field(f, row, "period", rec.get(4).unwrap_or(""))?;
        let arrival_day: f64 = parse_field(f, row, "arrival_day", rec.get(5).unwrap_or(""))?;
        let mediator_id = rec.get(6).unwrap_or("").trim();
        let outcome = parse_outcome(f, row, rec.get(7).unwrap_or(""))?;
        let conclusion_day: Option<f64> =
            parse_opt_field(f, row, "conclusion_day", rec.get(8).unwrap_or(""))?;

        let params = cells.get(&cell).ok_or_else(|| {
            integrity_err(f, format!("case `{id}` arrives in cell {cell} absent from rates.csv"))
        })?;
        let assigned_mediator = if mediator_id.is_empty() {
            None
        } else {
            let m = roster_index.get(mediator_id).ok_or_else(|| {
                integrity_err(f, format!("case `{id}` names unknown mediator `{mediator_id}`"))
            })?;
            if !m.is_accredited(cell) {
                return Err(integrity_err(
                    f,
                    format!("case `{id}` assigned to `{mediator_id}` who is not accredited for {cell}"),
                ));
            }
            Some(mediator_id.to_string())
        };
        if outcome.is_some() && conclusion_day.is_none() {
            return Err(value_err(f, row, format!("case `{id}` has an outcome but no conclusion_day")));
        }
        if outcome.is_some() && assigned_mediator.is_none() {
            return Err(value_err(f, row, format!("case `{id}` has an outcome but no mediator")));
        }
        if let Some(c) = conclusion_day {
            if c < arrival_day {
                return Err(value_err(
                    f,
                    row,
                    format!("case `{id}` concludes on day {c} before arriving on day {arrival_day}"),
                ));
            }
        }
        cases.push(CaseRecord {
            id,
            cell,
            p: params.base_p,
            arrival_time: arrival_day,
            referral_mode,
            period,
            assigned_mediator,
            outcome,
            conclusion_time: conclusion_day,
            is_shadow: false,
        });
    }

    Ok(Corpus {
        roster,
        cases,
        arrivals: ArrivalModel { cells },
        durations: DurationModel {
            by_type_outcome: durations,
        },
    })
}

fn write_csv_file(
    dir: &Path,
    file: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::result::Result<(), CorpusError> {
    let io = |e: std::fmt::Arguments| CorpusError::Io {
        file: file.into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| io(format_args!("{e}")))?;
    for row in rows {
        w.write_record(row).map_err(|e| io(format_args!("{e}")))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| io(format_args!("{e}")))
        .and_then(|v| String::from_utf8(v).map_err(|e| io(format_args!("{e}"))))?;
    fs::write(dir.join(file), format!("{SCHEMA_LINE}\n{body}"))
        .map_err(|e| io(format_args!("{e}")))
}

fn opt_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

/// Writes a corpus directory in the documented CSV layout.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> std::result::Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::Io {
        file: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mediator_rows: Vec<Vec<String>> = corpus
        .roster
        .iter()
        .map(|m| {
            let stations: BTreeSet<u32> = m.accredited_cells.iter().map(|c| c.station).collect();
            let types: BTreeSet<u32> = m.accredited_cells.iter().map(|c| c.case_type).collect();
            let join = |s: &BTreeSet<u32>| {
                s.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
            };
            vec![
                m.id.clone(),
                m.capacity.to_string(),
                opt_string(&m.true_va),
                join(&stations),
                join(&types),
            ]
        })
        .collect();
    write_csv_file(
        dir,
        "mediators.csv",
        &["id", "capacity", "true_va", "stations", "case_types"],
        &mediator_rows,
    )?;

    let case_rows: Vec<Vec<String>> = corpus
        .cases
        .iter()
        .map(|c| {
            vec![
                c.id.clone(),
                c.cell.case_type.to_string(),
                c.cell.station.to_string(),
                c.referral_mode.to_string(),
                c.period.to_string(),
                c.arrival_time.to_string(),
                c.assigned_mediator.clone().unwrap_or_default(),
                c.outcome.map(|o| u8::from(o).to_string()).unwrap_or_default(),
                opt_string(&c.conclusion_time),
            ]
        })
        .collect();
    write_csv_file(
        dir,
        "cases.csv",
        &[
            "id",
            "case_type",
            "station",
            "referral_mode",
            "period",
            "arrival_day",
            "mediator_id",
            "outcome",
            "conclusion_day",
        ],
        &case_rows,
    )?;

    let rate_rows: Vec<Vec<String>> = corpus
        .arrivals
        .cells
        .iter()
        .map(|(cell, p)| {
            vec![
                cell.case_type.to_string(),
                cell.station.to_string(),
                p.rate.to_string(),
                p.base_p.to_string(),
            ]
        })
        .collect();
    write_csv_file(
        dir,
        "rates.csv",
        &["case_type", "station", "poisson_rate", "base_p"],
        &rate_rows,
    )?;

    let duration_rows: Vec<Vec<String>> = corpus
        .durations
        .by_type_outcome
        .iter()
        .map(|(&(t, o), p)| {
            vec![
                t.to_string(),
                u8::from(o).to_string(),
                p.location.to_string(),
                p.scale.to_string(),
            ]
        })
        .collect();
    write_csv_file(
        dir,
        "durations.csv",
        &["case_type", "outcome", "lognorm_location", "lognorm_scale"],
        &duration_rows,
    )
}

/// Size and shape of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSpec {
    pub n_mediators: usize,
    pub n_stations: u32,
    pub n_case_types: u32,
    /// Expected total case count over the history window.
    pub target_cases: usize,
    pub history_days: u32,
    /// Cross-sectional sd of true VAs.
    pub sigma_mu: f64,
    /// Mean extra stations beyond the first (Poisson).
    pub mean_extra_stations: f64,
    pub mean_extra_types: f64,
    pub capacity: u32,
    pub duration_median_days: f64,
    pub duration_scale: f64,
}

impl ScaleSpec {
    /// Full benchmark scale: a multi-year history across a large roster.
    pub fn paper_scale() -> ScaleSpec {
        ScaleSpec {
            n_mediators: 2100,
            n_stations: 87,
            n_case_types: 13,
            target_cases: 30_633,
            history_days: 3285,
            sigma_mu: 0.11,
            mean_extra_stations: 1.5,
            mean_extra_types: 2.5,
            capacity: 3,
            duration_median_days: 60.0,
            duration_scale: 0.5,
        }
    }

    /// A small corpus for fast tests.
    pub fn small() -> ScaleSpec {
        ScaleSpec {
            n_mediators: 24,
            n_stations: 4,
            n_case_types: 3,
            target_cases: 1200,
            history_days: 365,
            sigma_mu: 0.11,
            mean_extra_stations: 1.0,
            mean_extra_types: 1.0,
            capacity: 3,
            duration_median_days: 20.0,
            duration_scale: 0.5,
        }
    }
}

fn sample_distinct<R: Rng>(rng: &mut R, upper: u32, count: usize) -> BTreeSet<u32> {
    let count = count.clamp(1, upper as usize);
    let mut out = BTreeSet::new();
    while out.len() < count {
        out.insert(rng.gen_range(1..=upper));
    }
    out
}

/// Generates a synthetic corpus: mediators with Gaussian true VAs and
/// station/type accreditations, cell-level arrival rates and baselines,
/// fixed type/station/period/mode effects, and a case history assigned
/// uniformly at random among accredited mediators. Cases whose sampled
/// duration runs past the history window stay unconcluded. Identical seeds
/// reproduce identical corpora.
pub fn generate_corpus(spec: &ScaleSpec, seed: u64) -> Result<Corpus> {
    if spec.n_mediators == 0 || spec.n_stations == 0 || spec.n_case_types == 0 {
        return Err(Error::Value("corpus dimensions must be positive".into()));
    }
    if spec.history_days == 0 || spec.target_cases == 0 {
        return Err(Error::Value("corpus history must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let va_dist = Normal::new(0.0, spec.sigma_mu).map_err(|e| Error::Value(e.to_string()))?;

    // Roster with true VAs and accreditation sets.
    let mut stations_of: Vec<BTreeSet<u32>> = Vec::with_capacity(spec.n_mediators);
    let mut types_of: Vec<BTreeSet<u32>> = Vec::with_capacity(spec.n_mediators);
    let mut vas: Vec<f64> = Vec::with_capacity(spec.n_mediators);
    for _ in 0..spec.n_mediators {
        vas.push(va_dist.sample(&mut rng));
        let n_st = 1 + Poisson::new(spec.mean_extra_stations.max(1e-9))
            .unwrap()
            .sample(&mut rng) as usize;
        let n_ty = 1 + Poisson::new(spec.mean_extra_types.max(1e-9))
            .unwrap()
            .sample(&mut rng) as usize;
        stations_of.push(sample_distinct(&mut rng, spec.n_stations, n_st));
        types_of.push(sample_distinct(&mut rng, spec.n_case_types, n_ty));
    }
    // Every cell needs at least one accredited mediator, otherwise arrivals
    // there could never be assigned.
    for t in 1..=spec.n_case_types {
        for s in 1..=spec.n_stations {
            let covered = (0..spec.n_mediators)
                .any(|m| stations_of[m].contains(&s) && types_of[m].contains(&t));
            if !covered {
                let m = rng.gen_range(0..spec.n_mediators);
                stations_of[m].insert(s);
                types_of[m].insert(t);
            }
        }
    }

    // Fixed effects entering the true outcome model.
    let eff = |rng: &mut ChaCha8Rng, sd: f64| Normal::new(0.0, sd).unwrap().sample(rng);
    let type_effects: BTreeMap<u32, f64> = (1..=spec.n_case_types)
        .map(|t| (t, eff(&mut rng, 0.04)))
        .collect();
    let station_effects: BTreeMap<u32, f64> = (1..=spec.n_stations)
        .map(|s| (s, eff(&mut rng, 0.03)))
        .collect();
    let n_periods = spec.history_days.div_ceil(365);
    let period_effects: BTreeMap<u32, f64> = (1..=n_periods)
        .map(|p| (p, eff(&mut rng, 0.02)))
        .collect();
    let mode_effects: BTreeMap<u32, f64> = (1..=3).map(|m| (m, eff(&mut rng, 0.02))).collect();

    // Cell rates proportional to exponential weights.
    let mut weights: BTreeMap<Cell, f64> = BTreeMap::new();
    for t in 1..=spec.n_case_types {
        for s in 1..=spec.n_stations {
            weights.insert(Cell::new(t, s), rng.sample::<f64, _>(Exp1).max(1e-6));
        }
    }
    let total_w: f64 = weights.values().sum();
    let daily_total = spec.target_cases as f64 / f64::from(spec.history_days);
    let cells: BTreeMap<Cell, CellParams> = weights
        .iter()
        .map(|(&cell, &w)| {
            let base = 0.5 + type_effects[&cell.case_type] + station_effects[&cell.station];
            (
                cell,
                CellParams {
                    rate: daily_total * w / total_w,
                    base_p: base.clamp(0.05, 0.95),
                },
            )
        })
        .collect();

    // Durations: resolved cases run a touch shorter than unresolved ones.
    let mut by_type_outcome: BTreeMap<(u32, bool), LogNormalParams> = BTreeMap::new();
    for t in 1..=spec.n_case_types {
        let jitter = eff(&mut rng, 0.05);
        for outcome in [false, true] {
            let shift = if outcome { -0.08 } else { 0.08 };
            by_type_outcome.insert(
                (t, outcome),
                LogNormalParams {
                    location: spec.duration_median_days.ln() + jitter + shift,
                    scale: spec.duration_scale,
                },
            );
        }
    }
    let durations = DurationModel { by_type_outcome };

    // Arrival stream: per-cell Poisson totals spread uniformly over days.
    let mut stream: Vec<(u32, Cell)> = Vec::new();
    for (&cell, params) in &cells {
        let expected = params.rate * f64::from(spec.history_days);
        if expected <= 0.0 {
            continue;
        }
        let n = Poisson::new(expected).unwrap().sample(&mut rng) as u64;
        for _ in 0..n {
            stream.push((rng.gen_range(1..=spec.history_days), cell));
        }
    }
    stream.sort_unstable();

    let accredited_for: BTreeMap<Cell, Vec<usize>> = cells
        .keys()
        .map(|&cell| {
            let list: Vec<usize> = (0..spec.n_mediators)
                .filter(|&m| {
                    stations_of[m].contains(&cell.station) && types_of[m].contains(&cell.case_type)
                })
                .collect();
            (cell, list)
        })
        .collect();

    let mut cases: Vec<CaseRecord> = Vec::with_capacity(stream.len());
    for (i, (day, cell)) in stream.into_iter().enumerate() {
        let period = 1 + (day - 1) / 365;
        let mode = rng.gen_range(1..=3u32);
        let candidates = &accredited_for[&cell];
        let mediator = candidates[rng.gen_range(0..candidates.len())];
        let prob = (cells[&cell].base_p + period_effects[&period] + mode_effects[&mode]
            + vas[mediator])
            .clamp(0.01, 0.99);
        let outcome = rng.gen::<f64>() < prob;
        let duration = durations.sample(cell.case_type, outcome, &mut rng)?;
        let concluded = f64::from(day) + duration <= f64::from(spec.history_days);
        cases.push(CaseRecord {
            id: format!("h{i:06}"),
            cell,
            p: cells[&cell].base_p,
            arrival_time: f64::from(day),
            referral_mode: mode,
            period,
            assigned_mediator: Some(format!("med{mediator:04}")),
            outcome: concluded.then_some(outcome),
            conclusion_time: concluded.then_some(f64::from(day) + duration),
            is_shadow: false,
        });
    }

    let roster: Vec<MediatorProfile> = (0..spec.n_mediators)
        .map(|m| MediatorProfile {
            id: format!("med{m:04}"),
            accredited_cells: types_of[m]
                .iter()
                .flat_map(|&t| stations_of[m].iter().map(move |&s| Cell::new(t, s)))
                .collect(),
            capacity: spec.capacity,
            load: 0,
            true_va: Some(vas[m]),
        })
        .collect();

    Ok(Corpus {
        roster,
        cases,
        arrivals: ArrivalModel { cells },
        durations,
    })
}

/// The two fixed three-mediator benchmark scenarios.
///
/// Both share mediators `m1` (VA 0.1), `m2` (VA 0.05), `m3` (VA -0.1) at
/// capacity 3, cells A = type 1 / station 1 (rate 0.5/day) and B = type 1 /
/// station 2 (rate 0.35/day), baseline 0.5, and log-normal durations with a
/// 5-day median. In scenario 1 only `m1` covers cell B, so policies must
/// decide whether to hold back its capacity; in scenario 2 `m3` covers cell
/// B instead, making over-use of `m1` on cell A cheaper.
pub fn scenario_inputs(which: u8) -> Result<SimInputs> {
    let cell_a = Cell::new(1, 1);
    let cell_b = Cell::new(1, 2);
    let accreditations: [(&str, f64, Vec<Cell>); 3] = match which {
        1 => [
            ("m1", 0.10, vec![cell_a, cell_b]),
            ("m2", 0.05, vec![cell_a]),
            ("m3", -0.10, vec![cell_a]),
        ],
        2 => [
            ("m1", 0.10, vec![cell_a, cell_b]),
            ("m2", 0.05, vec![cell_a]),
            ("m3", -0.10, vec![cell_b]),
        ],
        other => {
            return Err(Error::Value(format!("unknown scenario {other} (expected 1 or 2)")));
        }
    };
    let roster = accreditations
        .into_iter()
        .map(|(id, va, cells)| MediatorProfile {
            id: id.to_string(),
            accredited_cells: cells.into_iter().collect(),
            capacity: 3,
            load: 0,
            true_va: Some(va),
        })
        .collect();
    // Cell A arrives ~1.4x faster than Cell B; case durations (median 12
    // days) outlast the 10-day planning horizon, so a mediator's current
    // load really does persist across the horizon the policy plans over.
    // Together with capacity 3 this keeps the system moderately utilised:
    // overload happens in bursts rather than continuously, which is the
    // regime where the overload penalty has something to trade against.
    let cells: BTreeMap<Cell, CellParams> = [
        (cell_a, CellParams { rate: 0.22, base_p: 0.5 }),
        (cell_b, CellParams { rate: 0.16, base_p: 0.5 }),
    ]
    .into_iter()
    .collect();
    let by_type_outcome: BTreeMap<(u32, bool), LogNormalParams> = [true, false]
        .into_iter()
        .map(|o| {
            (
                (1u32, o),
                LogNormalParams {
                    location: 12f64.ln(),
                    scale: 0.5,
                },
            )
        })
        .collect();
    Ok(SimInputs {
        roster,
        arrivals: ArrivalModel { cells },
        durations: DurationModel { by_type_outcome },
        history: Vec::new(),
    })
}

/// World for the warm-start comparison: a mixed roster where a third of the
/// mediators carry a sizable concluded history and the rest are new, so
/// replaying the history gives an informed policy a head start.
pub fn warm_start_inputs(seed: u64) -> Result<SimInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all_cells: Vec<Cell> = (1..=2u32)
        .flat_map(|t| (1..=3u32).map(move |s| Cell::new(t, s)))
        .collect();
    let n_mediators = 24usize;
    let n_experienced = 8usize;
    // The experienced cohort skews slightly below the newcomer pool. An
    // exploit-only policy then anchors on the best incumbent while the best
    // mediators sit unexamined among the newcomers — the regime the
    // exploration comparison is about. The incumbent upper tail stays
    // positive, so exploiting them is reasonable, just not optimal.
    let incumbent_dist = Normal::new(-0.04, 0.08).unwrap();
    let newcomer_dist = Normal::new(0.0, 0.11).unwrap();

    let mut roster: Vec<MediatorProfile> = Vec::new();
    for m in 0..n_mediators {
        let mut cells: BTreeSet<Cell> = BTreeSet::new();
        while cells.len() < 2 {
            cells.insert(all_cells[rng.gen_range(0..all_cells.len())]);
        }
        let va = if m < n_experienced {
            incumbent_dist.sample(&mut rng)
        } else {
            newcomer_dist.sample(&mut rng)
        };
        roster.push(MediatorProfile {
            id: format!("w{m:02}"),
            accredited_cells: cells,
            capacity: 3,
            load: 0,
            true_va: Some(va),
        });
    }
    for &cell in &all_cells {
        if !roster.iter().any(|m| m.is_accredited(cell)) {
            let m = rng.gen_range(0..n_mediators);
            roster[m].accredited_cells.insert(cell);
        }
    }

    let duration = LogNormal::new(12f64.ln(), 0.5).unwrap();
    let mut history: Vec<CaseRecord> = Vec::new();
    for m in 0..n_experienced {
        let va = roster[m].true_va.unwrap();
        let cells: Vec<Cell> = roster[m].accredited_cells.iter().copied().collect();
        for i in 0..120 {
            let day = f64::from(rng.gen_range(1..=400u32));
            let outcome = rng.gen::<f64>() < (0.5 + va).clamp(0.0, 1.0);
            history.push(CaseRecord {
                id: format!("hist-{m}-{i}"),
                cell: cells[rng.gen_range(0..cells.len())],
                p: 0.5,
                arrival_time: day,
                referral_mode: rng.gen_range(1..=3),
                period: 1 + (day as u32 - 1) / 365,
                assigned_mediator: Some(roster[m].id.clone()),
                outcome: Some(outcome),
                conclusion_time: Some(day + duration.sample(&mut rng)),
                is_shadow: false,
            });
        }
    }

    // Light arrival pressure for the same reason as the demo scenarios:
    // planning-horizon shadow mass has to stay well inside each mediator's
    // soft-capacity room or the projected-overload box saturates and the
    // policy can no longer express a preference among good mediators.
    let cells: BTreeMap<Cell, CellParams> = all_cells
        .iter()
        .map(|&c| (c, CellParams { rate: 0.15, base_p: 0.5 }))
        .collect();
    let by_type_outcome: BTreeMap<(u32, bool), LogNormalParams> = (1..=2u32)
        .flat_map(|t| {
            [true, false].into_iter().map(move |o| {
                (
                    (t, o),
                    LogNormalParams {
                        location: 12f64.ln(),
                        scale: 0.5,
                    },
                )
            })
        })
        .collect();
    Ok(SimInputs {
        roster,
        arrivals: ArrivalModel { cells },
        durations: DurationModel { by_type_outcome },
        history,
    })
}

/// Resolves a named preset into simulation inputs. `seed` fixes the world
/// for the generated presets (`warm-start`, `paper-scale`).
pub fn resolve_preset(name: &str, seed: u64) -> Result<SimInputs> {
    match name {
        "scenario1" => scenario_inputs(1),
        "scenario2" => scenario_inputs(2),
        "warm-start" => warm_start_inputs(seed),
        "paper-scale" => Ok(generate_corpus(&ScaleSpec::paper_scale(), seed)?.into_inputs()),
        other => Err(Error::Value(format!(
            "unknown preset `{other}` (expected scenario1, scenario2, warm-start, or paper-scale)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Run configuration (TOML)
// ---------------------------------------------------------------------------

/// Top-level TOML run configuration.
///
/// ```toml
/// version = 1
///
/// [data]
/// preset = "scenario1"        # or corpus_dir = "path/to/corpus"
///
/// [run]
/// run_length_days = 365
/// seed_count = 30
///
/// [[policies]]
/// name = "smart"
/// mode = "known"
/// lambdas = [0.01, 0.05]
///
/// [[policies]]
/// name = "least_load"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub data: DataConfig,
    #[serde(default)]
    pub run: RunSection,
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub corpus_dir: Option<PathBuf>,
    pub preset: Option<String>,
    /// World seed for generated presets.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub run_length_days: Option<u32>,
    pub seeds: Option<Vec<u64>>,
    pub seed_count: Option<u32>,
    pub seed_base: Option<u64>,
    pub horizon: Option<u32>,
    pub recalibration_period: Option<u32>,
    pub solver_tol: Option<f64>,
    pub belief_init: Option<BeliefInit>,
    pub sigma_mu: Option<f64>,
    pub record_case_log: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub name: String,
    pub mode: Option<VaMode>,
    pub lambdas: Option<Vec<f64>>,
    pub penalty: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

fn config_err(message: impl Into<String>) -> CorpusError {
    schema_err("run config", message)
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<RunConfig, CorpusError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if cfg.version != 1 {
            return Err(config_err(format!("unsupported version {} (expected 1)", cfg.version)));
        }
        match (&cfg.data.corpus_dir, &cfg.data.preset) {
            (Some(_), Some(_)) => {
                return Err(config_err("set either data.corpus_dir or data.preset, not both"));
            }
            (None, None) => {
                return Err(config_err("one of data.corpus_dir or data.preset is required"));
            }
            _ => {}
        }
        if cfg.run.seeds.is_some() && (cfg.run.seed_count.is_some() || cfg.run.seed_base.is_some())
        {
            return Err(config_err("set either run.seeds or run.seed_count/seed_base, not both"));
        }
        if cfg.policies.is_empty() {
            return Err(config_err("at least one [[policies]] entry is required"));
        }
        cfg.policy_specs()?;
        Ok(cfg)
    }

    /// Seed list: explicit `seeds`, or `seed_base..` for `seed_count` (the
    /// defaults are base 1, count 10).
    pub fn seeds(&self) -> Vec<u64> {
        if let Some(s) = &self.run.seeds {
            return s.clone();
        }
        let base = self.run.seed_base.unwrap_or(1);
        let count = self.run.seed_count.unwrap_or(10);
        (0..u64::from(count)).map(|i| base + i).collect()
    }

    /// Expands the policy entries; a `smart` entry yields one spec per
    /// lambda.
    pub fn policy_specs(&self) -> std::result::Result<Vec<PolicySpec>, CorpusError> {
        let mut out = Vec::new();
        for p in &self.policies {
            let simple = |spec: PolicySpec| -> std::result::Result<PolicySpec, CorpusError> {
                if p.mode.is_some() || p.lambdas.is_some() || p.penalty.is_some() {
                    return Err(config_err(format!(
                        "policy `{}` takes no mode/lambdas/penalty",
                        p.name
                    )));
                }
                Ok(spec)
            };
            match p.name.as_str() {
                "least_load" => out.push(simple(PolicySpec::LeastLoad)?),
                "greedy_star" => out.push(simple(PolicySpec::GreedyStar)?),
                "thompson_star" => out.push(simple(PolicySpec::ThompsonStar)?),
                "upper_bound" => out.push(simple(PolicySpec::UpperBound)?),
                "smart" => {
                    let mode = p
                        .mode
                        .ok_or_else(|| config_err("smart policy requires `mode`"))?;
                    let lambdas = p
                        .lambdas
                        .as_ref()
                        .filter(|l| !l.is_empty())
                        .ok_or_else(|| config_err("smart policy requires non-empty `lambdas`"))?;
                    let penalty = match p.penalty.as_deref() {
                        None | Some("quadratic") => PenaltyKind::Quadratic,
                        Some("linear") => PenaltyKind::Linear,
                        Some(other) => {
                            return Err(config_err(format!("unknown penalty `{other}`")));
                        }
                    };
                    for &lambda in lambdas {
                        if !(lambda >= 0.0) || !lambda.is_finite() {
                            return Err(config_err(format!("invalid lambda {lambda}")));
                        }
                        out.push(PolicySpec::Smart {
                            mode,
                            lambda,
                            penalty,
                        });
                    }
                }
                other => return Err(config_err(format!("unknown policy `{other}`"))),
            }
        }
        Ok(out)
    }

    /// Simulation config with this file's overrides applied (policy and
    /// seed are filled per run by the driver).
    pub fn sim_config(&self) -> SimConfig {
        let defaults = SimConfig::default();
        SimConfig {
            run_length_days: self.run.run_length_days.unwrap_or(defaults.run_length_days),
            policy: defaults.policy,
            seed: 0,
            horizon: self.run.horizon.unwrap_or(defaults.horizon),
            recalibration_period: self
                .run
                .recalibration_period
                .unwrap_or(defaults.recalibration_period),
            solver_tol: self.run.solver_tol.unwrap_or(defaults.solver_tol),
            belief_init: self.run.belief_init.unwrap_or(BeliefInit::BlankSlate),
            shrinkage: ShrinkageConfig {
                default_sigma_mu: self
                    .run
                    .sigma_mu
                    .unwrap_or(ShrinkageConfig::default().default_sigma_mu),
                ..ShrinkageConfig::default()
            },
            record_case_log: self.run.record_case_log.unwrap_or(defaults.record_case_log),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_corpus_roundtrips_through_csv() {
        let corpus = generate_corpus(&ScaleSpec::small(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &corpus).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(loaded, corpus);
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let a = generate_corpus(&ScaleSpec::small(), 9).unwrap();
        let b = generate_corpus(&ScaleSpec::small(), 9).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&ScaleSpec::small(), 10).unwrap();
        assert_ne!(a.cases, c.cases);
    }

    #[test]
    fn generated_corpus_is_internally_consistent() {
        let spec = ScaleSpec::small();
        let corpus = generate_corpus(&spec, 3).unwrap();
        assert_eq!(corpus.roster.len(), spec.n_mediators);
        // Expected total is target_cases; allow 5 sigma of Poisson noise.
        let slack = 5.0 * (spec.target_cases as f64).sqrt();
        assert!(
            (corpus.cases.len() as f64 - spec.target_cases as f64).abs() < slack,
            "got {} cases",
            corpus.cases.len()
        );
        let roster: BTreeMap<&str, &MediatorProfile> =
            corpus.roster.iter().map(|m| (m.id.as_str(), m)).collect();
        let mut concluded = 0usize;
        for case in &corpus.cases {
            case.validate().unwrap();
            let m = roster[case.assigned_mediator.as_deref().unwrap()];
            assert!(m.is_accredited(case.cell), "case {} misassigned", case.id);
            if case.outcome.is_some() {
                concluded += 1;
            }
        }
        assert!(concluded * 10 > corpus.cases.len() * 8, "too few concluded");
        // Every cell with arrivals has someone accredited.
        for cell in corpus.arrivals.cells.keys() {
            assert!(corpus.roster.iter().any(|m| m.is_accredited(*cell)));
        }
    }

    #[test]
    fn loader_classifies_errors() {
        let corpus = generate_corpus(&ScaleSpec::small(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &corpus).unwrap();

        // Unsupported schema version.
        let rates = dir.path().join("rates.csv");
        let original = fs::read_to_string(&rates).unwrap();
        fs::write(&rates, original.replace("#schema:v1", "#schema:v9")).unwrap();
        assert!(matches!(
            load_corpus(dir.path()),
            Err(CorpusError::Schema { .. })
        ));
        fs::write(&rates, &original).unwrap();

        // Missing file.
        fs::remove_file(dir.path().join("durations.csv")).unwrap();
        assert!(matches!(
            load_corpus(dir.path()),
            Err(CorpusError::Schema { .. })
        ));
    }

    #[test]
    fn loader_rejects_bad_values_and_references() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            fs::write(dir.path().join(name), format!("{SCHEMA_LINE}\n{body}")).unwrap();
        };
        write(
            "rates.csv",
            "case_type,station,poisson_rate,base_p\n1,1,0.5,0.5\n",
        );
        write(
            "durations.csv",
            "case_type,outcome,lognorm_location,lognorm_scale\n1,1,1.6,0.5\n1,0,1.6,0.5\n",
        );
        write(
            "mediators.csv",
            "id,capacity,true_va,stations,case_types\nm1,3,0.1,1,1\n",
        );
        write(
            "cases.csv",
            "id,case_type,station,referral_mode,period,arrival_day,mediator_id,outcome,conclusion_day\n\
             c1,1,1,1,1,10,m1,1,15\n",
        );
        assert!(load_corpus(dir.path()).is_ok());

        // Value error: junk capacity, with the row named.
        write(
            "mediators.csv",
            "id,capacity,true_va,stations,case_types\nm1,lots,0.1,1,1\n",
        );
        match load_corpus(dir.path()) {
            Err(CorpusError::Value { file, row, .. }) => {
                assert_eq!(file, "mediators.csv");
                assert_eq!(row, 1);
            }
            other => panic!("expected value error, got {other:?}"),
        }
        write(
            "mediators.csv",
            "id,capacity,true_va,stations,case_types\nm1,3,0.1,1,1\n",
        );

        // Integrity: case assigned outside accreditation.
        write(
            "cases.csv",
            "id,case_type,station,referral_mode,period,arrival_day,mediator_id,outcome,conclusion_day\n\
             c1,1,1,1,1,10,zz,1,15\n",
        );
        assert!(load_corpus(dir.path()).unwrap_err().is_integrity());

        // Integrity: arrival cell missing from rates.
        write(
            "cases.csv",
            "id,case_type,station,referral_mode,period,arrival_day,mediator_id,outcome,conclusion_day\n\
             c1,2,9,1,1,10,,,\n",
        );
        assert!(load_corpus(dir.path()).unwrap_err().is_integrity());

        // Value: outcome without a conclusion day.
        write(
            "cases.csv",
            "id,case_type,station,referral_mode,period,arrival_day,mediator_id,outcome,conclusion_day\n\
             c1,1,1,1,1,10,m1,1,\n",
        );
        assert!(matches!(
            load_corpus(dir.path()),
            Err(CorpusError::Value { .. })
        ));

        // Integrity: duplicate case ids.
        write(
            "cases.csv",
            "id,case_type,station,referral_mode,period,arrival_day,mediator_id,outcome,conclusion_day\n\
             c1,1,1,1,1,10,m1,1,15\nc1,1,1,1,1,11,m1,0,15\n",
        );
        assert!(load_corpus(dir.path()).unwrap_err().is_integrity());
    }

    #[test]
    fn scenarios_pin_the_documented_worlds() {
        let s1 = scenario_inputs(1).unwrap();
        assert_eq!(s1.roster.len(), 3);
        assert_eq!(s1.roster[0].true_va, Some(0.1));
        assert_eq!(s1.roster[2].true_va, Some(-0.1));
        let a = Cell::new(1, 1);
        let b = Cell::new(1, 2);
        assert!(s1.roster[0].is_accredited(b));
        assert!(!s1.roster[2].is_accredited(b));
        assert_eq!(s1.arrivals.cells[&a].rate, 0.5);
        assert_eq!(s1.arrivals.cells[&b].rate, 0.35);
        assert!(s1.history.is_empty());

        let s2 = scenario_inputs(2).unwrap();
        assert!(s2.roster[2].is_accredited(b));
        assert!(!s2.roster[2].is_accredited(a));
        assert!(scenario_inputs(3).is_err());
    }

    #[test]
    fn warm_start_preset_mixes_experienced_and_new_mediators() {
        let w = warm_start_inputs(7).unwrap();
        assert_eq!(w.roster.len(), 24);
        assert!(!w.history.is_empty());
        let with_history: BTreeSet<&str> = w
            .history
            .iter()
            .filter_map(|c| c.assigned_mediator.as_deref())
            .collect();
        assert_eq!(with_history.len(), 8);
        for case in &w.history {
            assert!(case.outcome.is_some());
            case.validate().unwrap();
        }
        // Deterministic in the world seed.
        assert_eq!(warm_start_inputs(7).unwrap(), w);
    }

    #[test]
    fn run_config_parses_with_defaults_and_expands_policies() {
        let text = r#"
version = 1

[data]
preset = "scenario1"

[run]
run_length_days = 365
seed_count = 30
seed_base = 100

[[policies]]
name = "smart"
mode = "known"
lambdas = [0.01, 0.05]

[[policies]]
name = "least_load"
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let seeds = cfg.seeds();
        assert_eq!(seeds.len(), 30);
        assert_eq!(seeds[0], 100);
        let specs = cfg.policy_specs().unwrap();
        assert_eq!(specs.len(), 3);
        assert_eq!(
            specs[0],
            PolicySpec::Smart {
                mode: VaMode::Known,
                lambda: 0.01,
                penalty: PenaltyKind::Quadratic
            }
        );
        assert_eq!(specs[2], PolicySpec::LeastLoad);
        let sim = cfg.sim_config();
        assert_eq!(sim.run_length_days, 365);
        assert_eq!(sim.horizon, 10);
        assert_eq!(sim.recalibration_period, 7);
        assert_eq!(sim.belief_init, BeliefInit::BlankSlate);
    }

    #[test]
    fn run_config_rejects_malformed_input() {
        assert!(RunConfig::parse("version = 2\n[data]\npreset = \"scenario1\"\n[[policies]]\nname = \"least_load\"\n").is_err());
        // Unknown field.
        assert!(RunConfig::parse(
            "version = 1\n[data]\npreset = \"scenario1\"\nbogus = 1\n[[policies]]\nname = \"least_load\"\n"
        )
        .is_err());
        // Both data sources.
        assert!(RunConfig::parse(
            "version = 1\n[data]\npreset = \"scenario1\"\ncorpus_dir = \"x\"\n[[policies]]\nname = \"least_load\"\n"
        )
        .is_err());
        // smart without lambdas.
        assert!(RunConfig::parse(
            "version = 1\n[data]\npreset = \"scenario1\"\n[[policies]]\nname = \"smart\"\nmode = \"known\"\n"
        )
        .is_err());
        //

        // Baseline with smart-only options.
        assert!(RunConfig::parse(
            "version = 1\n[data]\npreset = \"scenario1\"\n[[policies]]\nname = \"least_load\"\nlambdas = [0.1]\n"
        )
        .is_err());
        // No policies at all.
        assert!(RunConfig::parse("version = 1\n[data]\npreset = \"scenario1\"\npolicies = []\n").is_err());
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(resolve_preset("scenario1", 0).is_ok());
        assert!(resolve_preset("nope", 0).is_err());
    }
}
