//! Run configuration shared by every subcommand.
//!
//! Configs are read from TOML or JSON, validated with dotted field paths in
//! the errors, and echoed in resolved form (defaults filled in) into every
//! report. The defaults reproduce the acceptance runs.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::Realization;
use crate::ode::StepControl;
use crate::phaseportrait::{Budget, SearchParams};
use crate::rootsys::{CartanType, OrderKind, RootSystem, WeylGroup};
use crate::todaflow::{check_regular, default_lambda, default_n, TodaSpec};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: AlgebraConfig,
    pub poset: PosetConfig,
    pub flow: FlowConfig,
    pub sampling: SamplingConfig,
    pub seed: u64,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraConfig {
    #[serde(rename = "type")]
    pub cartan_type: CartanType,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PosetConfig {
    pub kind: OrderKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Diagonal of `Lambda`; the algebra default when absent.
    pub lambda: Option<Vec<f64>>,
    /// Diagonal of `N`; the algebra default when absent.
    pub n: Option<Vec<f64>>,
    pub t_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Step cap; the stability bound of `Lambda` when absent.
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// `"random"` or a path to a matrix file.
    pub initial: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub generic_samples: usize,
    pub search_samples: usize,
    pub max_iter: usize,
    pub max_arcs: usize,
    pub approach_tol: f64,
    /// Exhaustive up to rank 2 and 10 above when absent.
    pub pairs_per_length_difference: Option<usize>,
    pub negative_control_pairs: Option<usize>,
    pub negative_control_samples: usize,
    pub use_shift: bool,
    pub shift_check: bool,
    /// Random initial states drawn by `verify`.
    pub random_states: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for reports; standard output when absent.
    pub dir: Option<String>,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        AlgebraConfig {
            cartan_type: CartanType::A,
            rank: 2,
        }
    }
}

impl Default for PosetConfig {
    fn default() -> Self {
        PosetConfig {
            kind: OrderKind::Strong,
        }
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        let control = StepControl::default();
        FlowConfig {
            lambda: None,
            n: None,
            t_max: 200.0,
            abs_tol: control.abs_tol,
            rel_tol: control.rel_tol,
            h_max: None,
            max_steps: control.max_steps,
            initial: "random".into(),
        }
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let search = SearchParams::default();
        SamplingConfig {
            generic_samples: 32,
            search_samples: search.n_samples,
            max_iter: search.max_iter,
            max_arcs: search.max_arcs,
            approach_tol: search.approach_tol,
            pairs_per_length_difference: None,
            negative_control_pairs: None,
            negative_control_samples: 16,
            use_shift: true,
            shift_check: true,
            random_states: 20,
        }
    }
}

/// Everything built from the algebra section.
#[derive(Clone, Debug)]
pub struct Setup {
    pub roots: RootSystem,
    pub group: WeylGroup,
    pub alg: Realization,
    pub spec: TodaSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| Error::config(toml_path(text, &e), e.message().to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))
    }

    /// Reads JSON for `.json` files and TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    /// Checks field ranges, the algebra and the shape of `Lambda` and `N`.
    /// Regularity is checked by [`RunConfig::setup`].
    pub fn validate(&self) -> Result<()> {
        let a = &self.algebra;
        if !a.cartan_type.supports_rank(a.rank) {
            return Err(Error::config(
                "algebra.rank",
                format!(
                    "type {} has no root system at rank {}",
                    a.cartan_type, a.rank
                ),
            ));
        }
        let f = &self.flow;
        positive("flow.t_max", f.t_max)?;
        positive("flow.abs_tol", f.abs_tol)?;
        positive("flow.rel_tol", f.rel_tol)?;
        if let Some(h) = f.h_max {
            positive("flow.h_max", h)?;
        }
        at_least("flow.max_steps", f.max_steps, 1)?;
        if f.initial.trim().is_empty() {
            return Err(Error::config(
                "flow.initial",
                "expected \"random\" or a file path",
            ));
        }
        let s = &self.sampling;
        at_least("sampling.generic_samples", s.generic_samples, 1)?;
        at_least("sampling.search_samples", s.search_samples, 2)?;
        at_least("sampling.max_iter", s.max_iter, 1)?;
        at_least("sampling.max_arcs", s.max_arcs, 1)?;
        at_least(
            "sampling.negative_control_samples",
            s.negative_control_samples,
            1,
        )?;
        positive("sampling.approach_tol", s.approach_tol)?;
        for (path, list) in [("flow.lambda", &f.lambda), ("flow.n", &f.n)] {
            if let Some(v) = list {
                for (i, x) in v.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Error::config(format!("{path}[{i}]"), "not a finite number"));
                    }
                }
            }
        }
        let (_, _, alg) = self.algebra()?;
        self.diagonals(&alg).map(|_| ())
    }

    /// Root system, Weyl group and matrix realization.
    pub fn algebra(&self) -> Result<(RootSystem, WeylGroup, Realization)> {
        let a = &self.algebra;
        let roots = RootSystem::build(a.cartan_type, a.rank)
            .map_err(|e| Error::config("algebra", e.to_string()))?;
        let alg =
            Realization::realize(&roots).map_err(|e| Error::config("algebra", e.to_string()))?;
        let group = WeylGroup::enumerate(&roots);
        Ok((roots, group, alg))
    }

    /// Diagonals of `Lambda` and `N` with defaults filled in, checked for
    /// length and Cartan membership but not for regularity.
    pub fn diagonals(&self, alg: &Realization) -> Result<(Vec<f64>, Vec<f64>)> {
        let lambda = self
            .flow
            .lambda
            .clone()
            .unwrap_or_else(|| default_lambda(alg));
        let n_elem = self.flow.n.clone().unwrap_or_else(|| default_n(alg));
        for (path, v) in [("flow.lambda", &lambda), ("flow.n", &n_elem)] {
            if v.len() != alg.n() {
                return Err(Error::config(
                    path,
                    format!(
                        "expected {} diagonal entries for {}, got {}",
                        alg.n(),
                        alg.root_system().label(),
                        v.len()
                    ),
                ));
            }
            alg.cartan_element(v)
                .map_err(|e| Error::config(path, e.to_string()))?;
        }
        Ok((lambda, n_elem))
    }

    /// Root system, Weyl group, matrix realization and flow data.
    pub fn setup(&self) -> Result<Setup> {
        let (roots, group, alg) = self.algebra()?;
        let (lambda, n_elem) = self.diagonals(&alg)?;
        for (path, v) in [("flow.lambda", &lambda), ("flow.n", &n_elem)] {
            let h = alg.cartan_element(v)?;
            check_regular(&alg, &h).map_err(|e| Error::config(path, e.to_string()))?;
        }
        let mut spec = TodaSpec::new(&alg, &lambda, &n_elem)?;
        spec.t_max = self.flow.t_max;
        spec.control.abs_tol = self.flow.abs_tol;
        spec.control.rel_tol = self.flow.rel_tol;
        spec.control.max_steps = self.flow.max_steps;
        if let Some(h) = self.flow.h_max {
            spec.control.h_max = h;
        }
        Ok(Setup {
            roots,
            group,
            alg,
            spec,
        })
    }

    /// Search and sampling budget, with rank-dependent defaults filled in.
    pub fn budget(&self) -> Budget {
        let s = &self.sampling;
        let base = Budget::for_rank(self.algebra.rank, self.seed);
        Budget {
            generic_samples: s.generic_samples,
            search: SearchParams {
                n_samples: s.search_samples,
                max_iter: s.max_iter,
                approach_tol: s.approach_tol,
                max_arcs: s.max_arcs,
                sweep: None,
                seed: self.seed,
            },
            pairs_per_length_difference: s
                .pairs_per_length_difference
                .or(base.pairs_per_length_difference),
            negative_control_pairs: s.negative_control_pairs.or(base.negative_control_pairs),
            negative_control_samples: s.negative_control_samples,
            use_shift: s.use_shift,
            shift_check: s.shift_check,
            seed: self.seed,
        }
    }

    /// The config with every defaulted value written out.
    pub fn resolved(&self) -> Result<RunConfig> {
        let setup = self.setup()?;
        let budget = self.budget();
        let mut out = self.clone();
        out.flow.lambda = Some(setup.spec.lambda_diagonal());
        out.flow.n = Some(setup.spec.n_diagonal());
        out.flow.h_max = Some(setup.spec.control.h_max);
        out.sampling.pairs_per_length_difference = budget.pairs_per_length_difference;
        out.sampling.negative_control_pairs = budget.negative_control_pairs;
        Ok(out)
    }

    /// Resolved config as JSON for embedding in reports.
    pub fn echo(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self.resolved()?).map_err(|e| Error::Consistency(e.to_string()))
    }
}

/// Dotted key of the entry a TOML error points at, from the enclosing
/// table header and the key on the offending line.
fn toml_path(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else {
        return "<toml>".into();
    };
    let start = span.start.min(text.len());
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    let table = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let key = line
        .split('=')
        .next()
        .map(str::trim)
        .filter(|k| !k.is_empty() && !line.starts_with('['));
    match (table, key) {
        (Some(t), Some(k)) => format!("{t}.{k}"),
        (None, Some(k)) => k.to_string(),
        (Some(t), None) => t,
        (None, None) => "<toml>".into(),
    }
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            path,
            format!("expected a positive finite number, got {x}"),
        ))
    }
}

fn at_least(path: &str, x: usize, min: usize) -> Result<()> {
    if x >= min {
        Ok(())
    } else {
        Err(Error::config(
            path,
            format!("expected at least {min}, got {x}"),
        ))
    }
}

/// Parses a square real matrix written either as nested JSON arrays
/// (`[[0, 1], [1, 0]]`) or as one row per line with entries separated by
/// whitespace or commas. Lines starting with `#` are ignored.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let trimmed = text.trim();
    let rows: Vec<Vec<f64>> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| Error::Parse(format!("matrix: {e}")))?
    } else {
        trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .enumerate()
            .map(|(i, line)| {
                line.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::Parse(format!("matrix row {}: cannot read {t:?}", i + 1))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?
    };
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("matrix is empty".into()));
    }
    if n > 64 {
        return Err(Error::Parse(format!(
            "matrix has {n} rows; at most 64 supported"
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!(
                "matrix row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        if let Some(x) = row.iter().find(|x| !x.is_finite()) {
            return Err(Error::Parse(format!(
                "matrix row {} has non-finite entry {x}",
                i + 1
            )));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
