//! Flat-file outputs: trajectory CSV with a JSON diagnostics sidecar.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! runs give byte-identical files.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{parse_matrix, RunConfig};
use crate::error::{Error, Result};
use crate::liealg::sorted_eigenvalues;
use crate::phaseportrait::{classify_state, fixed_points, label_by_length};
use crate::todaflow::{integrate_lax, random_isospectral, FlowDiagnostics, RunStatus, Trajectory};

/// Header `t,L_11,L_12,...,L_nn` (row-major, 1-based; indices are joined
/// by `_` from size 10 on).
pub fn csv_header(n: usize, symbol: &str) -> String {
    let sep = if n > 9 { "_" } else { "" };
    let mut cols = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            cols.push(format!("{symbol}_{i}{sep}{j}"));
        }
    }
    cols.join(",")
}

/// One CSV line per stored sample, preceded by the header.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory, symbol: &str) -> Result<()> {
    let n = traj.samples.first().map_or(0, |s| s.state.nrows());
    writeln!(out, "{}", csv_header(n, symbol))?;
    for s in &traj.samples {
        let mut line = s.t.to_string();
        // nalgebra stores column-major; the CSV is row-major
        for i in 0..n {
            for j in 0..n {
                line.push(',');
                line.push_str(&s.state[(i, j)].to_string());
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn trajectory_csv(traj: &Trajectory, symbol: &str) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, traj, symbol).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Parses a trajectory CSV back into `(t, state)` rows.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<(f64, DMatrix<f64>)>> {
    use crate::error::Error;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols = header.split(',').count();
    let n = ((cols - 1) as f64).sqrt().round() as usize;
    if n * n + 1 != cols || !header.starts_with("t,") {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("CSV line {}: {x:?}", k + 2)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != cols {
                return Err(Error::Parse(format!(
                    "CSV line {} has {} fields",
                    k + 2,
                    vals.len()
                )));
            }
            Ok((vals[0], DMatrix::from_row_slice(n, n, &vals[1..])))
        })
        .collect()
}

/// JSON sidecar of a `flow` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSidecar {
    pub algebra: String,
    #[serde(rename = "Lambda")]
    pub lambda: Vec<f64>,
    pub initial: InitialState,
    pub status: RunStatus,
    /// Label of the fixed point reached, if any.
    pub limit: Option<usize>,
    pub t_end: f64,
    pub samples: usize,
    pub initial_spectrum: Vec<f64>,
    pub diagnostics: FlowDiagnostics,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InitialState {
    /// `Ad_psi(Lambda)` with `psi = exp(k)` drawn from the seed.
    Random {
        seed: u64,
        matrix: Vec<Vec<f64>>,
    },
    File {
        path: String,
        matrix: Vec<Vec<f64>>,
    },
}

/// Integrates the Lax flow from the configured initial state: a seeded
/// `Ad_psi(Lambda)` for `"random"`, otherwise the matrix stored at that path.
/// The limit is reported as a label when the run settles on one of the
/// `Ad_w(Lambda)`.
pub fn run_flow(config: &RunConfig) -> Result<(Trajectory, FlowSidecar)> {
    use rand::SeedableRng;
    let setup = config.setup()?;
    let (alg, spec) = (&setup.alg, &setup.spec);
    let (l0, initial) = if config.flow.initial == "random" {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let l0 = random_isospectral(alg, spec, &mut rng);
        let matrix = matrix_rows(&l0);
        (
            l0,
            InitialState::Random {
                seed: config.seed,
                matrix,
            },
        )
    } else {
        let path = config.flow.initial.clone();
        let l0 = parse_matrix(&std::fs::read_to_string(&path)?)?;
        if l0.nrows() != alg.n() {
            return Err(Error::config(
                "flow.initial",
                format!(
                    "{path}: expected a {n}x{n} matrix, got {m}x{m}",
                    n = alg.n(),
                    m = l0.nrows()
                ),
            ));
        }
        alg.check_p(&l0)
            .map_err(|e| Error::config("flow.initial", format!("{path}: {e}")))?;
        let matrix = matrix_rows(&l0);
        (l0, InitialState::File { path, matrix })
    };
    let traj = integrate_lax(alg, spec, &l0)?;
    let fixed = fixed_points(alg, &setup.group, spec)?;
    let labeling = label_by_length(&setup.group, &fixed)?;
    let limit = match traj.status {
        RunStatus::Converged => {
            classify_state(&traj.end().state, &fixed, spec)?.map(|raw| labeling.label(raw))
        }
        _ => None,
    };
    let sidecar = FlowSidecar {
        algebra: setup.roots.label().to_string(),
        lambda: spec.lambda_diagonal(),
        initial,
        status: traj.status,
        limit,
        t_end: traj.last().t,
        samples: traj.samples.len(),
        initial_spectrum: sorted_eigenvalues(&l0),
        diagnostics: traj.diagnostics.clone(),
        config: config.echo()?,
    };
    Ok((traj, sidecar))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::todaflow::{Sample, Sweep};

    fn traj() -> Trajectory {
        Trajectory {
            samples: vec![
                Sample {
                    t: 0.0,
                    state: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
                },
                Sample {
                    t: 0.5,
                    state: DMatrix::from_row_slice(2, 2, &[-0.25, 0.5, 0.5, 0.25]),
                },
            ],
            status: RunStatus::ReachedTMax,
            diagnostics: FlowDiagnostics::default(),
            limit: None,
            sweep: Sweep::Forward,
        }
    }

    #[test]
    fn header_is_row_major() {
        assert_eq!(csv_header(2, "L"), "t,L_11,L_12,L_21,L_22");
    }

    #[test]
    fn csv_rows_are_row_major() {
        let csv = trajectory_csv(&traj(), "L");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "0,0,1,1,0");
        assert_eq!(lines[2], "0.5,-0.25,0.5,0.5,0.25");
        let back = read_trajectory_csv(&csv).unwrap();
        assert_eq!(back[1].1, traj().samples[1].state);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_trajectory_csv("").is_err());
        assert!(read_trajectory_csv("t,L_11,L_12\n0,1,2\n").is_err());
        assert!(read_trajectory_csv("t,L_11\n0,x\n").is_err());
    }

    #[test]
    fn seeded_flow_reaches_the_sink() {
        let (traj, side) = run_flow(&RunConfig::default()).unwrap();
        assert_eq!(side.status, RunStatus::Converged);
        // the sink carries the longest element, id 5 in A2
        assert_eq!(side.limit, Some(5));
        assert_eq!(side.samples, traj.samples.len());
        assert_eq!(run_flow(&RunConfig::default()).unwrap().1, side);
    }

    #[test]
    fn initial_file_must_be_in_p() {
        let dir = std::env::temp_dir().join(format!("toda-bruhat-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("skew.txt");
        std::fs::write(&path, "0 1 0\n-1 0 0\n0 0 0\n").unwrap();
        let mut c = RunConfig::default();
        c.flow.initial = path.to_string_lossy().into_owned();
        let err = run_flow(&c).unwrap_err();
        assert!(
            matches!(err, Error::Config { ref path, .. } if path == "flow.initial"),
            "{err}"
        );
    }
}
