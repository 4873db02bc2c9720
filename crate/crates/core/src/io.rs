//! Session and fit files (JSON) and plot-data tables (CSV).
//!
//! Session files are validated field by field so every schema violation is
//! reported with the JSON pointer of the offending value. Unknown fields are
//! ignored with a warning. Writers are byte-deterministic: JSON uses
//! shortest round-trip floats, CSV uses twelve significant digits, and files
//! are written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fitter::FitResult;
use crate::hamiltonians::TrialOutcome;
use crate::session::{Block, InsilicoRun, Session, Trajectory, TrialRecord};
use crate::state::level_midpoints;

/// A parsed session plus any non-fatal warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedSession {
    pub session: Session,
    pub warnings: Vec<String>,
}

fn escape_pointer(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

struct Walker {
    warnings: Vec<String>,
}

impl Walker {
    fn object<'v>(&mut self, v: &'v Value, ptr: &str, known: &[&str]) -> Result<&'v Map<String, Value>> {
        let obj = v.as_object().ok_or_else(|| schema(ptr, "expected an object"))?;
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                self.warnings
                    .push(format!("unknown field {ptr}/{} ignored", escape_pointer(key)));
            }
        }
        Ok(obj)
    }

    fn field<'v>(&self, obj: &'v Map<String, Value>, ptr: &str, key: &str) -> Result<&'v Value> {
        obj.get(key)
            .ok_or_else(|| schema(format!("{ptr}/{key}"), "missing required field"))
    }

    fn number(&self, obj: &Map<String, Value>, ptr: &str, key: &str) -> Result<f64> {
        let p = format!("{ptr}/{key}");
        let v = self.field(obj, ptr, key)?;
        let x = v.as_f64().ok_or_else(|| schema(&p, "expected a number"))?;
        if !x.is_finite() {
            return Err(schema(p, "number must be finite"));
        }
        Ok(x)
    }

    fn rating(&self, obj: &Map<String, Value>, ptr: &str, key: &str) -> Result<f64> {
        let x = self.number(obj, ptr, key)?;
        if !(0.0..=100.0).contains(&x) {
            return Err(schema(format!("{ptr}/{key}"), format!("rating {x} outside [0, 100]")));
        }
        Ok(x)
    }

    fn array<'v>(&self, obj: &'v Map<String, Value>, ptr: &str, key: &str) -> Result<&'v Vec<Value>> {
        let p = format!("{ptr}/{key}");
        let arr = self
            .field(obj, ptr, key)?
            .as_array()
            .ok_or_else(|| schema(&p, "expected an array"))?;
        if arr.is_empty() {
            return Err(schema(p, "array must not be empty"));
        }
        Ok(arr)
    }

    fn trial(&mut self, v: &Value, ptr: &str) -> Result<TrialRecord> {
        let obj = self.object(v, ptr, &["outcome", "time_delta_s"])?;
        let p = format!("{ptr}/outcome");
        let name = self
            .field(obj, ptr, "outcome")?
            .as_str()
            .ok_or_else(|| schema(&p, "expected a string"))?;
        let outcome = TrialOutcome::from_wire(name).ok_or_else(|| {
            schema(
                &p,
                format!("unknown outcome {name:?}; expected \"match\", \"mismatch\" or \"no_response\""),
            )
        })?;
        let dt = self.number(obj, ptr, "time_delta_s")?;
        if dt < 0.0 {
            return Err(schema(format!("{ptr}/time_delta_s"), format!("time delta {dt} is negative")));
        }
        Ok(TrialRecord::new(outcome, dt))
    }

    fn block(&mut self, v: &Value, ptr: &str) -> Result<Block> {
        let obj = self.object(v, ptr, &["trials", "reported_rating"])?;
        let trials = self
            .array(obj, ptr, "trials")?
            .iter()
            .enumerate()
            .map(|(j, t)| self.trial(t, &format!("{ptr}/trials/{j}")))
            .collect::<Result<Vec<_>>>()?;
        let reported_rating = self.rating(obj, ptr, "reported_rating")?;
        Ok(Block {
            trials,
            reported_rating,
        })
    }

    fn session(&mut self, v: &Value) -> Result<Session> {
        let obj = self.object(v, "", &["participant_id", "initial_rating", "blocks"])?;
        let participant_id = self
            .field(obj, "", "participant_id")?
            .as_str()
            .ok_or_else(|| schema("/participant_id", "expected a string"))?
            .to_owned();
        let initial_rating = self.rating(obj, "", "initial_rating")?;
        let blocks = self
            .array(obj, "", "blocks")?
            .iter()
            .enumerate()
            .map(|(i, b)| self.block(b, &format!("/blocks/{i}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Session {
            participant_id,
            initial_rating,
            blocks,
        })
    }
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_session(text: &str) -> Result<LoadedSession> {
    let value = parse_json(text)?;
    let mut walker = Walker { warnings: Vec::new() };
    let session = walker.session(&value)?;
    Ok(LoadedSession {
        session,
        warnings: walker.warnings,
    })
}

pub fn load_session_with_warnings(path: impl AsRef<Path>) -> Result<LoadedSession> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_session(&text)
}

/// Loads and validates a session file, logging any warnings.
pub fn load_session(path: impl AsRef<Path>) -> Result<Session> {
    let loaded = load_session_with_warnings(&path)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.as_ref().display());
    }
    Ok(loaded.session)
}

fn to_json_text<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization");
    s.push('\n');
    s
}

pub fn session_to_json(session: &Session) -> String {
    to_json_text(session)
}

pub fn save_session(session: &Session, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, session_to_json(session).as_bytes())
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it over `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// `path` with its extension replaced by `suffix` (e.g. `blocks.csv`).
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Twelve significant digits, plain decimal for moderate magnitudes and
/// scientific otherwise. Trailing zeros are trimmed.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

/// Long-format propensities: `block,trial,level,propensity`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("block,trial,level,propensity\n");
    let levels = level_midpoints();
    for snap in &traj.snapshots {
        for (level, p) in levels.iter().zip(snap.propensities) {
            let _ = writeln!(out, "{},{},{},{}", snap.block, snap.trial, format_sig(*level), format_sig(p));
        }
    }
    out
}

/// Per-block table: `block,predicted_rating,reported_rating` in level units.
pub fn blocks_csv(traj: &Trajectory) -> String {
    let mut out = String::from("block,predicted_rating,reported_rating\n");
    for (b, pred) in traj.predictions.iter().enumerate() {
        let reported = traj.reported.get(b).copied().unwrap_or(f64::NAN);
        let _ = writeln!(out, "{b},{},{}", format_sig(*pred), format_sig(reported));
    }
    out
}

/// Writes the propensity table to `path` and the per-block table next to
/// it as `<stem>.blocks.csv`. Returns the second path.
pub fn export_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    write_atomic(path, trajectory_csv(traj).as_bytes())?;
    let blocks = sibling(path, "blocks.csv");
    write_atomic(&blocks, blocks_csv(traj).as_bytes())?;
    Ok(blocks)
}

pub fn fit_to_json(result: &FitResult) -> String {
    to_json_text(result)
}

pub fn export_fit(result: &FitResult, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, fit_to_json(result).as_bytes())
}

pub fn load_fit(path: impl AsRef<Path>) -> Result<FitResult> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Per-block comparison from a fit: `block,predicted_rating,reported_rating`.
pub fn fit_blocks_csv(result: &FitResult) -> String {
    let mut out = String::from("block,predicted_rating,reported_rating\n");
    for b in &result.per_block {
        let _ = writeln!(out, "{},{},{}", b.block, format_sig(b.predicted), format_sig(b.reported));
    }
    out
}

/// `collapse_std,mae`.
pub fn sweep_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("collapse_std,mae\n");
    for (std, mae) in rows {
        let _ = writeln!(out, "{},{}", format_sig(*std), format_sig(*mae));
    }
    out
}

/// In-silico propensities: `step,time_s,level,propensity`.
pub fn insilico_csv(run: &InsilicoRun) -> String {
    let mut out = String::from("step,time_s,level,propensity\n");
    let levels = level_midpoints();
    for (step, (t, p)) in run.times.iter().zip(&run.propensities).enumerate() {
        for (level, v) in levels.iter().zip(p) {
            let _ = writeln!(out, "{step},{},{},{}", format_sig(*t), format_sig(*level), format_sig(*v));
        }
    }
    out
}

/// In-silico readout series: `step,time_s,expected_rating`.
pub fn insilico_ratings_csv(run: &InsilicoRun) -> String {
    let mut out = String::from("step,time_s,expected_rating\n");
    for (step, (t, e)) in run.times.iter().zip(&run.expected).enumerate() {
        let _ = writeln!(out, "{step},{},{}", format_sig(*t), format_sig(*e));
    }
    out
}
