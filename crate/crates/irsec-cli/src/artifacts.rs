//! On-disk artifact formats: scenario snapshots, iteration traces, payoff
//! matrices, and the run summary. Everything is plain JSON or CSV with
//! complex numbers spelled as `[re, im]` pairs, and every float is written
//! through Rust's shortest round-trip formatting so identical runs produce
//! identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use irsec::game::PayoffMatrix;
use irsec::model::{IterationRecord, Scenario, StepLabel};
use irsec::optkit::{CMat, CVec};

use crate::config::Config;
use crate::CliError;

pub const TRACE_HEADER: &str =
    "iteration,step_label,secrecy_rate_bps_hz,bob_rate_bps_hz,eve_rate_bps_hz,wall_ms";

/// Complex number as it appears in the JSON artifacts.
pub type Pair = [f64; 2];

// ---------------------------------------------------------------------------
// Complex conversions
// ---------------------------------------------------------------------------

pub fn pairs_from_vector(v: &CVec) -> Vec<Pair> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub fn vector_from_pairs(pairs: &[Pair]) -> CVec {
    CVec::from_iterator(pairs.len(), pairs.iter().map(|p| Complex64::new(p[0], p[1])))
}

fn pairs_from_matrix(m: &CMat) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_pairs(rows: &[Vec<Pair>]) -> Result<CMat, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Validation(
            "scenario matrix rows have unequal lengths".into(),
        ));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// Channel realization as written by `gen-scenario` and embedded in run
/// summaries. Vector channels are pair lists, matrix channels row-major
/// nested lists; dimensions are implied by the array shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub power: f64,
    pub noise_bob: f64,
    pub noise_eve: f64,
    pub alice_bob: Vec<Pair>,
    pub alice_irs_bob: Vec<Vec<Pair>>,
    pub irs_bob_bob: Vec<Pair>,
    pub irs_bob_eve: Vec<Pair>,
    pub alice_eve: Vec<Pair>,
    pub alice_irs_eve: Vec<Vec<Pair>>,
    pub irs_eve_eve: Vec<Pair>,
    pub irs_eve_bob: Vec<Pair>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        Self {
            power: s.power,
            noise_bob: s.noise_bob,
            noise_eve: s.noise_eve,
            alice_bob: pairs_from_vector(&s.alice_bob),
            alice_irs_bob: pairs_from_matrix(&s.alice_irs_bob),
            irs_bob_bob: pairs_from_vector(&s.irs_bob_bob),
            irs_bob_eve: pairs_from_vector(&s.irs_bob_eve),
            alice_eve: pairs_from_vector(&s.alice_eve),
            alice_irs_eve: pairs_from_matrix(&s.alice_irs_eve),
            irs_eve_eve: pairs_from_vector(&s.irs_eve_eve),
            irs_eve_bob: pairs_from_vector(&s.irs_eve_bob),
        }
    }
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let s = Scenario {
            alice_bob: vector_from_pairs(&self.alice_bob),
            alice_irs_bob: matrix_from_pairs(&self.alice_irs_bob)?,
            irs_bob_bob: vector_from_pairs(&self.irs_bob_bob),
            irs_bob_eve: vector_from_pairs(&self.irs_bob_eve),
            alice_eve: vector_from_pairs(&self.alice_eve),
            alice_irs_eve: matrix_from_pairs(&self.alice_irs_eve)?,
            irs_eve_eve: vector_from_pairs(&self.irs_eve_eve),
            irs_eve_bob: vector_from_pairs(&self.irs_eve_bob),
            noise_bob: self.noise_bob,
            noise_eve: self.noise_eve,
            power: self.power,
        };
        s.validate()
            .map_err(|e| CliError::Validation(format!("scenario file: {e}")))?;
        Ok(s)
    }
}

pub fn write_scenario(path: &Path, s: &Scenario) -> Result<(), CliError> {
    write_json(path, &ScenarioFile::from(s))
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    file.to_scenario()
}

// ---------------------------------------------------------------------------
// Iteration traces
// ---------------------------------------------------------------------------

pub fn render_trace(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration, r.step, r.secrecy_rate, r.bob_rate, r.eve_rate, r.wall_ms
        ));
    }
    out
}

pub fn write_trace(path: &Path, records: &[IterationRecord]) -> Result<(), CliError> {
    fs::write(path, render_trace(records)).map_err(CliError::io(path))
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_trace(&text).map_err(|msg| CliError::Validation(format!("{}: {msg}", path.display())))
}

fn parse_trace(text: &str) -> Result<Vec<IterationRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(TRACE_HEADER) => {}
        other => return Err(format!("bad trace header {other:?}")),
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format!("line {}: expected 6 fields", idx + 2));
        }
        let step = match fields[1] {
            "init" => StepLabel::Init,
            "theta_B" => StepLabel::ThetaBob,
            "w" => StepLabel::Beamformer,
            "theta_E" => StepLabel::ThetaEve,
            other => return Err(format!("line {}: unknown step label {other:?}", idx + 2)),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", idx + 2));
        records.push(IterationRecord {
            iteration: fields[0]
                .parse()
                .map_err(|e| format!("line {}: {e}", idx + 2))?,
            step,
            secrecy_rate: num(fields[2])?,
            bob_rate: num(fields[3])?,
            eve_rate: num(fields[4])?,
            wall_ms: num(fields[5])?,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Payoff matrices
// ---------------------------------------------------------------------------

/// CSV with strategy indices as row and column headers; the top-left
/// header cell is empty.
pub fn write_payoff(path: &Path, a: &PayoffMatrix) -> Result<(), CliError> {
    let mut out = String::new();
    for j in 0..a.entries.ncols() {
        out.push(',');
        out.push_str(&j.to_string());
    }
    out.push('\n');
    for i in 0..a.entries.nrows() {
        out.push_str(&i.to_string());
        for j in 0..a.entries.ncols() {
            out.push(',');
            out.push_str(&a.entries[(i, j)].to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(CliError::io(path))
}

pub fn read_payoff(path: &Path) -> Result<PayoffMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty payoff file".into()))?;
    let cols = header.split(',').count() - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default();
        if label != idx.to_string() {
            return Err(bad(format!("row {}: unexpected label {label:?}", idx + 2)));
        }
        let row: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", idx + 2)))?;
        if row.len() != cols {
            return Err(bad(format!("row {}: expected {cols} entries", idx + 2)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(bad("payoff file has no rows".into()));
    }
    Ok(PayoffMatrix {
        entries: DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]),
    })
}

// ---------------------------------------------------------------------------
// Run summaries
// ---------------------------------------------------------------------------

/// Result document written by every `run-*` subcommand. Embeds the
/// resolved configuration and the exact channel realization so `verify`
/// can recompute every reported rate without regenerating anything.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub artifact_version: String,
    pub seed: u64,
    pub config: Config,
    pub scenario: ScenarioFile,
    pub solvers: SolverOutcomes,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOutcomes {
    pub ao: Option<SolverReport>,
    pub gda: Option<SolverReport>,
    pub game: Option<GameReport>,
    /// Solver name to error message, for runs where a solver failed but
    /// the rest proceeded.
    pub errors: BTreeMap<String, String>,
}

/// Final state of one iterative solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverReport {
    pub secrecy_rate_bps_hz: f64,
    /// max(secrecy, 0): what the link can actually bank.
    pub deliverable_secrecy_bps_hz: f64,
    pub bob_rate_bps_hz: f64,
    pub eve_rate_bps_hz: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    pub beamformer: Vec<Pair>,
    pub theta_bob: Vec<Pair>,
    pub theta_eve: Vec<Pair>,
    pub trace_file: String,
}

/// Mixed equilibrium of the quantized game.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameReport {
    pub value_bps_hz: f64,
    pub deliverable_value_bps_hz: f64,
    pub minimax_gap: f64,
    pub rows: usize,
    pub cols: usize,
    pub bob_support: usize,
    pub eve_support: usize,
    pub bob_strategy: Vec<f64>,
    pub eve_strategy: Vec<f64>,
    /// Expected rates under the equilibrium mixture.
    pub expected_bob_rate_bps_hz: f64,
    pub expected_eve_rate_bps_hz: f64,
    pub wall_ms: f64,
    pub payoff_file: String,
    pub trace_file: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
