//! Invariant suite run by `verify`: regularity, bracket structure,
//! isospectrality, limit classification, potential monotonicity,
//! linearization and gamma-curve tangency.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::liealg::commutator;
use crate::phaseportrait::{classify_state, fixed_points, label_by_length};
use crate::todaflow::{
    check_regular, integrate_group, integrate_lax, invariant_curve_check, lax_field, linearize,
    potential_derivative, potential_derivative_fd, random_isospectral, random_k_element,
    toda_projector, Trend, POTENTIAL_TREND, REGULARITY_GAP,
};

pub const SPECTRAL_TOL: f64 = 1e-8;
pub const LINEARIZATION_TOL: f64 = 1e-7;
pub const CURVE_TOL: f64 = 1e-8;
pub const BRACKET_TOL: f64 = 1e-12;
pub const DERIVATIVE_REL_TOL: f64 = 1e-4;
pub const GRADIENT_POINTS: usize = 100;
pub const CURVE_GRID: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    /// Nothing contradicted, but some runs could not be evaluated.
    Partial,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, residual: f64, tolerance: f64, detail: String) -> Check {
        Check {
            name: name.into(),
            status: if residual < tolerance {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            residual,
            tolerance,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub algebra: String,
    pub status: CheckStatus,
    pub checks: Vec<Check>,
    pub config: serde_json::Value,
}

/// Runs every check that applies. A non-regular `Lambda` or `N` fails the
/// regularity check and skips the rest, which need isolated fixed points.
pub fn verify(config: &RunConfig) -> Result<VerifyReport> {
    let (roots, group, alg) = config.algebra()?;
    let (lambda, n_elem) = config.diagonals(&alg)?;
    let echo = serde_json::to_value(config).expect("config serializes");
    let algebra = roots.label().to_string();
    let mut checks = Vec::new();

    let mut gaps = Vec::new();
    let mut bad = Vec::new();
    for (name, diag) in [("Lambda", &lambda), ("N", &n_elem)] {
        match check_regular(&alg, &alg.cartan_element(diag)?) {
            Ok(gap) => gaps.push(gap),
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    if !bad.is_empty() {
        checks.push(Check {
            name: "regularity".into(),
            status: CheckStatus::Fail,
            residual: 0.0,
            tolerance: REGULARITY_GAP,
            detail: bad.join("; "),
        });
        return Ok(finish(algebra, checks, echo));
    }
    let gap = gaps.into_iter().fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "regularity".into(),
        status: CheckStatus::Pass,
        residual: gap,
        tolerance: REGULARITY_GAP,
        detail: format!("min |alpha| over Lambda and N is {gap:.3e}"),
    });

    let spec = config.setup()?.spec;
    let n_states = config.sampling.random_states.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let states: Vec<_> = (0..n_states)
        .map(|_| random_isospectral(&alg, &spec, &mut rng))
        .collect();
    let psis: Vec<_> = (0..n_states)
        .map(|_| random_k_element(&alg, &mut rng, 1.0))
        .collect();

    // [p, p] in k and [k, p] in p on random elements, plus M(L) in k
    let mut bracket = 0.0f64;
    let mut outside = 0;
    for (l, psi) in states.iter().zip(&psis) {
        let k = psi.matrix() - psi.matrix().transpose();
        let m = toda_projector(&alg, l)?;
        let pp = commutator(l, &spec.n_elem);
        let kp = commutator(&k, l);
        let rhs = commutator(l, &m);
        bracket = bracket
            .max((&m + m.transpose()).norm())
            .max((&pp + pp.transpose()).norm())
            .max((&kp - kp.transpose()).norm())
            .max((&rhs - rhs.transpose()).norm());
        outside += [pp, kp, rhs, m].iter().filter(|x| !alg.contains(x)).count();
    }
    let mut c = Check::bound(
        "bracket",
        bracket,
        BRACKET_TOL,
        format!("Cartan decomposition brackets on {n_states} random elements"),
    );
    if outside > 0 {
        c.status = CheckStatus::Fail;
        c.detail = format!("{outside} brackets left the algebra");
    }
    checks.push(c);

    let fixed = fixed_points(&alg, &group, &spec)?;
    let runs = states
        .par_iter()
        .map(|l0| integrate_lax(&alg, &spec, l0))
        .collect::<Result<Vec<_>>>()?;
    let drift = runs
        .iter()
        .map(|t| t.diagnostics.spectral_drift)
        .fold(0.0, f64::max);
    checks.push(Check::bound(
        "isospectrality",
        drift,
        SPECTRAL_TOL,
        format!("{n_states} random states over t in [0, {}]", spec.t_max),
    ));
    let mut unclassified = 0;
    let mut failed = 0;
    for t in &runs {
        if t.diagnostics.failure.is_some() {
            failed += 1;
        } else if classify_state(&t.end().state, &fixed, &spec)?.is_none() {
            unclassified += 1;
        }
    }
    checks.push(Check {
        name: "classification".into(),
        status: match (failed, unclassified) {
            (0, 0) => CheckStatus::Pass,
            (0, _) => CheckStatus::Partial,
            _ => CheckStatus::Fail,
        },
        residual: (unclassified + failed) as f64,
        tolerance: 1.0,
        detail: format!("{unclassified} of {n_states} runs not classified, {failed} failed"),
    });

    let group_runs = psis
        .par_iter()
        .map(|psi| integrate_group(&alg, &spec, psi))
        .collect::<Result<Vec<_>>>()?;
    let violations: usize = group_runs
        .iter()
        .map(|t| t.diagnostics.potential_violations)
        .sum();
    let increase = group_runs
        .iter()
        .map(|t| t.diagnostics.max_potential_increase)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "monotonicity".into(),
        status: if violations == 0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        residual: increase,
        tolerance: crate::todaflow::MONOTONICITY_SLACK,
        detail: format!(
            "{violations} steps against the {POTENTIAL_TREND:?} trend over {n_states} group runs"
        ),
    });

    let mut worst_rel = 0.0f64;
    let mut wrong_sign = 0;
    for _ in 0..GRADIENT_POINTS {
        let psi = random_k_element(&alg, &mut rng, 1.0);
        let fd = potential_derivative_fd(&alg, &spec, &psi, 1e-6);
        let exact = potential_derivative(&alg, &spec, &psi);
        let against = match POTENTIAL_TREND {
            Trend::Decreasing => fd > 0.0,
            Trend::Increasing => fd < 0.0,
        };
        let scale = exact.abs();
        if against && scale > 1e-12 {
            wrong_sign += 1;
        }
        if scale > 1e-12 {
            worst_rel = worst_rel.max((fd - exact).abs() / scale);
        }
    }
    let mut c = Check::bound(
        "gradient-sign",
        worst_rel,
        DERIVATIVE_REL_TOL,
        format!("finite-difference derivative at {GRADIENT_POINTS} random points"),
    );
    if wrong_sign > 0 {
        c.status = CheckStatus::Fail;
        c.detail = format!("{wrong_sign} points with the wrong sign");
    }
    checks.push(c);

    let lin = fixed
        .iter()
        .map(|fp| linearize(&alg, &fp.lambda_w, 1e-6).map(|l| l.max_deviation))
        .collect::<Result<Vec<_>>>()?;
    checks.push(Check::bound(
        "linearization",
        lin.iter().copied().fold(0.0, f64::max),
        LINEARIZATION_TOL,
        format!(
            "Jacobian against alpha(Lambda_w) at {} fixed points",
            lin.len()
        ),
    ));
    checks.push(match label_by_length(&group, &fixed) {
        Ok(lab) => Check {
            name: "labeling".into(),
            status: CheckStatus::Pass,
            residual: 0.0,
            tolerance: 0.0,
            detail: format!(
                "source is Weyl element {}; stable dimension equals length",
                lab.source
            ),
        },
        Err(e) => Check {
            name: "labeling".into(),
            status: CheckStatus::Fail,
            residual: 1.0,
            tolerance: 0.0,
            detail: e.to_string(),
        },
    });

    let grid: Vec<f64> = (0..CURVE_GRID)
        .map(|i| -FRAC_PI_2 + std::f64::consts::PI * i as f64 / (CURVE_GRID - 1) as f64)
        .collect();
    let pairs: Vec<(usize, usize)> = (0..group.len())
        .flat_map(|w| roots.positive_roots().map(move |a| (w, a)))
        .collect();
    let curves = pairs
        .par_iter()
        .map(|&(w, a)| invariant_curve_check(&alg, &group, &spec, w, a, &grid))
        .collect::<Result<Vec<_>>>()?;
    let curve_residual = curves
        .iter()
        .map(|c| c.max_off_residual.max(c.landing_point_residual))
        .fold(0.0, f64::max);
    checks.push(Check::bound(
        "curve-tangency",
        curve_residual,
        CURVE_TOL,
        format!("{} gamma curves on a {CURVE_GRID}-point grid", curves.len()),
    ));

    // the field vanishes exactly on the fixed points
    let at_fixed = fixed
        .iter()
        .map(|fp| lax_field(&fp.lambda_w).norm())
        .fold(0.0, f64::max);
    checks.push(Check::bound(
        "fixed-points",
        at_fixed,
        BRACKET_TOL,
        format!("field norm at {} fixed points", fixed.len()),
    ));

    Ok(finish(algebra, checks, echo))
}

fn finish(algebra: String, checks: Vec<Check>, config: serde_json::Value) -> VerifyReport {
    let status = checks
        .iter()
        .map(|c| c.status)
        .max()
        .unwrap_or(CheckStatus::Pass);
    VerifyReport {
        algebra,
        status,
        checks,
        config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(r: &'a VerifyReport, name: &str) -> &'a Check {
        r.checks.iter().find(|c| c.name == name).unwrap()
    }

    #[test]
    fn default_config_passes() {
        let mut c = RunConfig::default();
        c.sampling.random_states = 4;
        let r = verify(&c).unwrap();
        assert_eq!(r.status, CheckStatus::Pass, "{:#?}", r.checks);
        assert_eq!(r.checks.len(), 10);
    }

    #[test]
    fn repeated_eigenvalue_fails_regularity() {
        let mut c = RunConfig::default();
        c.flow.lambda = Some(vec![1.0, 1.0, -2.0]);
        let r = verify(&c).unwrap();
        assert_eq!(r.status, CheckStatus::Fail);
        let reg = find(&r, "regularity");
        assert!(reg.detail.contains("a1"), "{}", reg.detail);
    }

    #[test]
    fn short_runs_are_partial() {
        let mut c = RunConfig::default();
        c.flow.t_max = 1.0;
        c.sampling.random_states = 4;
        let r = verify(&c).unwrap();
        assert_eq!(find(&r, "classification").status, CheckStatus::Partial);
        assert_eq!(r.status, CheckStatus::Partial);
    }
}
