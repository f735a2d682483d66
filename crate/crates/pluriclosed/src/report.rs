//! Serialization of runs: trajectory CSV files and JSON reports.
//!
//! CSV values are written with enough digits (`{:.16e}`) that parsing a file
//! reproduces the in-memory trajectory bit for bit.  Every JSON report
//! carries `schema_version` so downstream consumers can detect layout
//! changes.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::analysis::{AsymptoticsReport, BlowdownResult, GhLimit};
use crate::catalog::{GeometryId, GeometryParams};
use crate::curvature::MetricCoefficients;
use crate::error::{Error, Result};
use crate::flow::{FlowState, IntegrationStats, Trajectory};
use crate::validate::CheckResult;

pub const SCHEMA_VERSION: u32 = 1;

const CSV_HEADER: &str = "t,x,y,re_z,im_z,D";

/// Writes a trajectory (initial state followed by samples) as CSV.
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &Trajectory) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    write_row(&mut out, &traj.initial)?;
    for sample in &traj.samples {
        write_row(&mut out, sample)?;
    }
    Ok(())
}

fn write_row<W: Write>(out: &mut W, state: &FlowState) -> Result<()> {
    let g = &state.g;
    writeln!(
        out,
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        state.t,
        g.x(),
        g.y(),
        g.z().re,
        g.z().im,
        g.det()
    )?;
    Ok(())
}

/// Parses a trajectory CSV back into `(t, x, y, z)` rows.  The determinant
/// column is recomputed and checked against the parsed value.
pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Vec<(f64, MetricCoefficients)>> {
    let mut rows = Vec::new();
    for (number, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = number + 1;
        if line_no == 1 {
            if line.trim() != CSV_HEADER {
                return Err(Error::MalformedCsv {
                    line: line_no,
                    message: format!("expected header `{CSV_HEADER}`, got `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::MalformedCsv {
                line: line_no,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 6];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.trim().parse::<f64>().map_err(|e| Error::MalformedCsv {
                line: line_no,
                message: format!("bad float `{field}`: {e}"),
            })?;
        }
        let [t, x, y, re_z, im_z, det] = values;
        let g = MetricCoefficients::from_parts(x, y, re_z, im_z).map_err(|_| {
            Error::MalformedCsv {
                line: line_no,
                message: format!("inadmissible row (x={x}, y={y}, z={re_z}+{im_z}i)"),
            }
        })?;
        if (g.det() - det).abs() > 1e-12 * g.det().abs().max(1.0) {
            return Err(Error::MalformedCsv {
                line: line_no,
                message: format!("determinant column {det} does not match x*y - |z|^2"),
            });
        }
        rows.push((t, g));
    }
    if rows.is_empty() {
        return Err(Error::MalformedCsv {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StateRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub det: f64,
}

impl From<&FlowState> for StateRecord {
    fn from(state: &FlowState) -> Self {
        StateRecord {
            t: state.t,
            x: state.g.x(),
            y: state.g.y(),
            re_z: state.g.z().re,
            im_z: state.g.z().im,
            det: state.g.det(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub geometry: GeometryId,
    pub params: GeometryParams,
    pub initial: StateRecord,
    pub final_state: StateRecord,
    pub stats: IntegrationStats,
    /// True when integration stopped before the requested horizon.
    pub truncated: bool,
}

impl SimulateReport {
    pub fn new(traj: &Trajectory, requested_end: f64, truncated: bool) -> Self {
        let _ = requested_end;
        SimulateReport {
            schema_version: SCHEMA_VERSION,
            geometry: traj.geometry.id,
            params: traj.geometry.params,
            initial: (&traj.initial).into(),
            final_state: (&traj.final_state()).into(),
            stats: traj.stats,
            truncated,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub schema_version: u32,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidateReport {
    pub fn new(checks: Vec<CheckResult>) -> Self {
        ValidateReport {
            schema_version: SCHEMA_VERSION,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsEnvelope {
    pub schema_version: u32,
    pub geometry: GeometryId,
    pub params: GeometryParams,
    pub report: AsymptoticsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gh_limit: Option<GhLimit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowdownEnvelope {
    pub schema_version: u32,
    pub params: GeometryParams,
    #[serde(flatten)]
    pub result: BlowdownResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soliton_residual: Option<f64>,
}

/// One row of a sweep manifest: where the run landed and how it ended.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRun {
    pub index: usize,
    pub geometry: GeometryId,
    pub params: GeometryParams,
    pub initial: StateRecord,
    pub csv: String,
    pub final_state: Option<StateRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub t_end: f64,
    pub runs: Vec<SweepRun>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_geometry, GeometryParams};
    use crate::flow::solve_default;

    fn sample_trajectory() -> Trajectory {
        let spec = build_geometry(GeometryId::Hyperelliptic, GeometryParams::None).unwrap();
        let g0 = MetricCoefficients::from_parts(1.0, 2.0, 0.5, -0.25).unwrap();
        solve_default(&spec, &g0).unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let traj = sample_trajectory();
        let mut buffer = Vec::new();
        write_trajectory_csv(&mut buffer, &traj).unwrap();
        let rows = read_trajectory_csv(buffer.as_slice()).unwrap();
        assert_eq!(rows.len(), traj.samples.len() + 1);
        let mut states = vec![traj.initial.clone()];
        states.extend(traj.samples.iter().cloned());
        for ((t, g), state) in rows.iter().zip(&states) {
            assert_eq!(t.to_bits(), state.t.to_bits());
            assert_eq!(g.x().to_bits(), state.g.x().to_bits());
            assert_eq!(g.y().to_bits(), state.g.y().to_bits());
            assert_eq!(g.z().re.to_bits(), state.g.z().re.to_bits());
            assert_eq!(g.z().im.to_bits(), state.g.z().im.to_bits());
        }
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let bad_header = "time,x,y,re,im,D\n1,1,1,0,0,1\n";
        assert!(matches!(
            read_trajectory_csv(bad_header.as_bytes()),
            Err(Error::MalformedCsv { line: 1, .. })
        ));

        let short_row = format!("{CSV_HEADER}\n1.0,2.0,3.0\n");
        assert!(matches!(
            read_trajectory_csv(short_row.as_bytes()),
            Err(Error::MalformedCsv { line: 2, .. })
        ));

        let bad_float = format!("{CSV_HEADER}\n0.0,1.0,1.0,zero,0.0,1.0\n");
        assert!(matches!(
            read_trajectory_csv(bad_float.as_bytes()),
            Err(Error::MalformedCsv { line: 2, .. })
        ));

        let wrong_det = format!("{CSV_HEADER}\n0.0,1.0,1.0,0.0,0.0,0.5\n");
        assert!(matches!(
            read_trajectory_csv(wrong_det.as_bytes()),
            Err(Error::MalformedCsv { line: 2, .. })
        ));

        let empty = format!("{CSV_HEADER}\n");
        assert!(matches!(
            read_trajectory_csv(empty.as_bytes()),
            Err(Error::MalformedCsv { .. })
        ));
    }

    #[test]
    fn simulate_report_serializes_with_schema_version() {
        let traj = sample_trajectory();
        let report = SimulateReport::new(&traj, 1e4, false);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["geometry"], "hyperelliptic");
        assert_eq!(json["truncated"], false);
        assert!(json["final_state"]["t"].as_f64().unwrap() > 9.9e3);
        assert!(json["stats"]["steps_accepted"].as_u64().unwrap() > 0);
    }
}
