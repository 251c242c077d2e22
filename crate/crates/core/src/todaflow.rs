//! The full symmetric Toda flow: projector, Lax flow on `p`, group flow on
//! `K`, the Morse potential and the invariant-curve checks.
//!
//! With the realizations in [`crate::liealg`] every positive root vector is
//! strictly upper triangular and `e_{-alpha} = e_alpha^T`, so the projector
//! reduces to `M(L) = upper(L) - lower(L)`. The integrators use that form;
//! [`toda_projector`] computes it from the root expansion and the two are
//! cross-checked in tests.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{
    commutator, exp_matrix, off_diagonal_norm, orthogonality, polar_retract, sorted_eigenvalues,
    KElement, Realization,
};
use crate::ode::{self, Control, StepControl, StepView};
use crate::rootsys::{CartanType, WeylGroup};

/// Below this size of `||[L, M(L)]||` a state may count as converged.
pub const STALL_THRESHOLD: f64 = 1e-13;
/// Distance to the Cartan subalgebra within which a state may count as converged.
pub const FIXED_POINT_RADIUS: f64 = 1e-6;
/// Minimum `|alpha(Lambda)|` for a regular element.
pub const REGULARITY_GAP: f64 = 1e-6;
/// Increases of the potential below this size are not monotonicity violations.
pub const MONOTONICITY_SLACK: f64 = 1e-10;

/// Direction of the potential along the flow. With `M = upper - lower` and
/// `N` dominant, `dF/dt = -2c sum_alpha a_alpha^2 alpha(N) <= 0`; the
/// finite-difference probe in [`detect_trend`] confirms it numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Decreasing,
    Increasing,
}

pub const POTENTIAL_TREND: Trend = Trend::Decreasing;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    Forward,
    Backward,
}

impl Sweep {
    pub fn sign(self) -> f64 {
        match self {
            Sweep::Forward => 1.0,
            Sweep::Backward => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TodaSpec {
    /// Regular diagonal Cartan element whose orbit carries the flow.
    pub lambda: DMatrix<f64>,
    /// Regular Cartan element defining the Morse potential.
    pub n_elem: DMatrix<f64>,
    pub control: StepControl,
    pub t_max: f64,
    pub stall_threshold: f64,
    pub fixed_point_radius: f64,
    /// A converged state must stay converged for this long.
    pub settle_time: f64,
    /// Floor on accepted steps before convergence is declared.
    pub min_steps: usize,
}

/// Integer-spaced, trace-free, strictly decreasing diagonal (spacing 2 for
/// odd rank in type A so entries stay integral).
pub fn default_lambda(alg: &Realization) -> Vec<f64> {
    let rs = alg.root_system();
    match rs.cartan_type() {
        CartanType::B => vec![2.0, 1.0, 0.0, -1.0, -2.0],
        _ => {
            let r = rs.rank() as f64;
            let spacing = if rs.rank() % 2 == 1 { 2.0 } else { 1.0 };
            (0..=rs.rank())
                .map(|k| spacing * (r / 2.0 - k as f64))
                .collect()
        }
    }
}

/// Decreasing diagonal with ratio `n = rank + 1` between entries. Then
/// `sum_i Lambda_{sigma(i)} N_i` is a base-`n` numeral in the permutation
/// `sigma`, so the potential separates all Weyl points.
pub fn default_n(alg: &Realization) -> Vec<f64> {
    let rs = alg.root_system();
    match rs.cartan_type() {
        CartanType::B => vec![2.0, 0.5, 0.0, -0.5, -2.0],
        _ => {
            let base = (rs.rank() + 1) as f64;
            let raw: Vec<f64> = (0..=rs.rank())
                .map(|k| base.powi((rs.rank() - k) as i32))
                .collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            raw.into_iter().map(|x| x - mean).collect()
        }
    }
}

/// Step cap keeping `h |alpha(Lambda_w)| <= 2` for every linearized rate, well
/// inside the explicit stability region. Without it the off-diagonal decay
/// near a sink stalls at the absolute tolerance instead of converging.
fn stable_step_bound(lambda: &DMatrix<f64>) -> f64 {
    let d = lambda.diagonal();
    let spread = d.max() - d.min();
    if spread > 0.0 {
        (2.0 / spread).min(StepControl::default().h_max)
    } else {
        StepControl::default().h_max
    }
}

/// Smallest `|alpha(h)|`, or an error naming the roots below the gap.
pub fn check_regular(alg: &Realization, h: &DMatrix<f64>) -> Result<f64> {
    let rs = alg.root_system();
    let mut min_gap = f64::INFINITY;
    let mut bad = Vec::new();
    for root in rs.positive_roots() {
        let v = alg.root_value(root, h).abs();
        min_gap = min_gap.min(v);
        // written so that NaN fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(v > REGULARITY_GAP) {
            bad.push(rs.root_name(root));
        }
    }
    if bad.is_empty() {
        Ok(min_gap)
    } else {
        Err(Error::NotRegular {
            roots: bad,
            min_gap,
        })
    }
}

impl TodaSpec {
    pub fn new(alg: &Realization, lambda: &[f64], n_elem: &[f64]) -> Result<Self> {
        let lambda = alg.cartan_element(lambda)?;
        let n_elem = alg.cartan_element(n_elem)?;
        check_regular(alg, &lambda)?;
        check_regular(alg, &n_elem)?;
        let control = StepControl {
            h_max: stable_step_bound(&lambda),
            ..StepControl::default()
        };
        Ok(TodaSpec {
            lambda,
            n_elem,
            control,
            t_max: 200.0,
            stall_threshold: STALL_THRESHOLD,
            fixed_point_radius: FIXED_POINT_RADIUS,
            settle_time: 1.0,
            min_steps: 10,
        })
    }

    pub fn default_for(alg: &Realization) -> Result<Self> {
        Self::new(alg, &default_lambda(alg), &default_n(alg))
    }

    pub fn lambda_diagonal(&self) -> Vec<f64> {
        self.lambda.diagonal().iter().copied().collect()
    }

    pub fn n_diagonal(&self) -> Vec<f64> {
        self.n_elem.diagonal().iter().copied().collect()
    }

    /// Replaces `Lambda`, keeping the other settings.
    pub fn with_lambda(mut self, alg: &Realization, lambda: &[f64]) -> Result<Self> {
        let lambda = alg.cartan_element(lambda)?;
        check_regular(alg, &lambda)?;
        self.control.h_max = self.control.h_max.min(stable_step_bound(&lambda));
        self.lambda = lambda;
        Ok(self)
    }

    /// Same spec with `Lambda` replaced by `Ad_w(Lambda)`.
    pub fn shifted(&self, alg: &Realization, group: &WeylGroup, w: usize) -> Result<Self> {
        let mut out = self.clone();
        out.lambda = alg.weyl_act_on_cartan(group, w, &self.lambda)?;
        Ok(out)
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }
}

/// `M(L) = sum_{alpha > 0} a_alpha (e_alpha - e_{-alpha})` from the root expansion of `L`.
pub fn toda_projector(alg: &Realization, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let coeffs = alg.check_p(l)?;
    let mut m = DMatrix::zeros(alg.n(), alg.n());
    for root in alg.root_system().positive_roots() {
        let a = coeffs[alg.root_slot(root)];
        if a != 0.0 {
            m += alg.k_generator(root) * a;
        }
    }
    Ok(m)
}

/// Strictly upper minus strictly lower triangular part.
pub fn triangular_projector(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => l[(i, j)],
        std::cmp::Ordering::Greater => -l[(i, j)],
        std::cmp::Ordering::Equal => 0.0,
    })
}

/// `[L, M(L)]` without membership checks.
pub fn lax_field(l: &DMatrix<f64>) -> DMatrix<f64> {
    commutator(l, &triangular_projector(l))
}

/// `[L, M(L)]`, checked to lie in `p`.
pub fn lax_rhs(alg: &Realization, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = toda_projector(alg, l)?;
    let rhs = commutator(l, &m);
    alg.check_p(&rhs)
        .map_err(|e| Error::Consistency(format!("[L, M(L)] left p: {e}")))?;
    Ok(rhs)
}

/// `-M(Ad_psi(Lambda)) psi`.
pub fn group_rhs(spec: &TodaSpec, psi: &DMatrix<f64>) -> DMatrix<f64> {
    let l = psi * &spec.lambda * psi.transpose();
    -(triangular_projector(&l) * psi)
}

/// `Tr(ad(Ad_psi Lambda) ad N)`, via the Killing/trace ratio.
pub fn morse_potential(alg: &Realization, spec: &TodaSpec, psi: &KElement) -> f64 {
    potential_of_lax(alg, spec, &psi.adjoint(&spec.lambda))
}

/// The potential as a function of `L = Ad_psi(Lambda)`.
pub fn potential_of_lax(alg: &Realization, spec: &TodaSpec, l: &DMatrix<f64>) -> f64 {
    alg.killing_scale() * alg.trace_form(l, &spec.n_elem)
}

/// Same value through the adjoint-representation traces.
pub fn morse_potential_exact(alg: &Realization, spec: &TodaSpec, psi: &KElement) -> Result<f64> {
    alg.killing_form(&psi.adjoint(&spec.lambda), &spec.n_elem)
}

/// Central difference of the potential along the group field, moving on K
/// by `exp(+-h A) psi` with `A = -M(Ad_psi Lambda)`.
pub fn potential_derivative_fd(alg: &Realization, spec: &TodaSpec, psi: &KElement, h: f64) -> f64 {
    let a = -triangular_projector(&psi.adjoint(&spec.lambda));
    let plus = KElement::new_unchecked(exp_matrix(&a, h) * psi.matrix());
    let minus = KElement::new_unchecked(exp_matrix(&a, -h) * psi.matrix());
    (morse_potential(alg, spec, &plus) - morse_potential(alg, spec, &minus)) / (2.0 * h)
}

/// `c Tr([L, M(L)] N)`, the exact derivative along the flow.
pub fn potential_derivative(alg: &Realization, spec: &TodaSpec, psi: &KElement) -> f64 {
    let l = psi.adjoint(&spec.lambda);
    potential_of_lax(alg, spec, &lax_field(&l))
}

/// Sign of the potential derivative at a random point; used to confirm
/// [`POTENTIAL_TREND`].
pub fn detect_trend<R: Rng>(alg: &Realization, spec: &TodaSpec, rng: &mut R) -> Trend {
    let psi = random_k_element(alg, rng, 1.0);
    if potential_derivative_fd(alg, spec, &psi, 1e-6) <= 0.0 {
        Trend::Decreasing
    } else {
        Trend::Increasing
    }
}

pub fn random_k_element<R: Rng>(alg: &Realization, rng: &mut R, scale: f64) -> KElement {
    let coeffs: Vec<f64> = alg
        .root_system()
        .positive_roots()
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    alg.k_element_from_coefficients(&coeffs)
}

/// `Ad_psi(Lambda)` for a random `psi`.
pub fn random_isospectral<R: Rng>(alg: &Realization, spec: &TodaSpec, rng: &mut R) -> DMatrix<f64> {
    random_k_element(alg, rng, 1.0).adjoint(&spec.lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Settled at a fixed point.
    Converged,
    /// Reached `t_max` without settling.
    ReachedTMax,
    /// Stopped early by an observer.
    Stopped,
    /// Integrator failure; the samples hold the partial trajectory.
    Failed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Max eigenvalue deviation from the initial spectrum.
    pub spectral_drift: f64,
    /// Largest re-symmetrization or retraction correction.
    pub max_correction: f64,
    /// Largest `||psi^T psi - I||` before retraction (group flow only).
    pub max_orthogonality_drift: f64,
    pub potential_violations: usize,
    pub max_potential_increase: f64,
    pub final_rhs_norm: f64,
    pub final_offdiag_norm: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: DMatrix<f64>,
}

/// Time-ordered samples of the Lax state `L` (or of `psi` for group runs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub status: RunStatus,
    pub diagnostics: FlowDiagnostics,
    /// Fixed point reached, once classified.
    pub limit: Option<usize>,
    pub sweep: Sweep,
}

pub type LaxTrajectory = Trajectory;
pub type GroupTrajectory = Trajectory;

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    /// State where integration ended: the last sample for forward runs, the
    /// first for backward ones.
    pub fn end(&self) -> &Sample {
        match self.sweep {
            Sweep::Forward => self.last(),
            Sweep::Backward => self.first(),
        }
    }

    pub fn is_converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Completed without failure and with spectrum conserved to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        matches!(
            self.status,
            RunStatus::Converged | RunStatus::ReachedTMax | RunStatus::Stopped
        ) && self.diagnostics.spectral_drift < tol
    }
}

/// What an observer sees after each accepted Lax step.
pub struct LaxStep<'a> {
    /// Physical time (negative for backward sweeps).
    pub t: f64,
    pub l: &'a DMatrix<f64>,
    pub rhs_norm: f64,
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub sweep: Sweep,
    pub store_samples: bool,
    /// Entries allowed to be nonzero; everything else is zeroed after each
    /// step. Used to stay on invariant subalgebras.
    pub support: Option<DMatrix<bool>>,
    /// Compare the spectrum at every stored sample instead of only at the end.
    pub track_spectrum: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            sweep: Sweep::Forward,
            store_samples: true,
            support: None,
            track_spectrum: true,
        }
    }
}

struct SettleWatch {
    since: Option<f64>,
    steps: usize,
}

impl SettleWatch {
    fn new() -> Self {
        SettleWatch {
            since: None,
            steps: 0,
        }
    }

    /// True once the state has stayed near the Cartan subalgebra with a
    /// stalled field for `settle_time`.
    fn update(&mut self, spec: &TodaSpec, s: f64, rhs_norm: f64, offdiag: f64) -> bool {
        self.steps += 1;
        if rhs_norm < spec.stall_threshold && offdiag < spec.fixed_point_radius {
            let since = *self.since.get_or_insert(s);
            s - since >= spec.settle_time && self.steps >= spec.min_steps
        } else {
            self.since = None;
            false
        }
    }
}

pub fn integrate_lax(
    alg: &Realization,
    spec: &TodaSpec,
    l0: &DMatrix<f64>,
) -> Result<LaxTrajectory> {
    integrate_lax_with(alg, spec, l0, &FlowOptions::default(), |_| {
        Control::Continue
    })
}

/// Adaptive Dormand–Prince integration of `L' = [L, M(L)]`, re-symmetrizing
/// after every step. Stops at `t_max`, on convergence, or when the observer
/// asks to. Integrator failures are reported through `status` with the
/// partial trajectory kept.
pub fn integrate_lax_with<O>(
    alg: &Realization,
    spec: &TodaSpec,
    l0: &DMatrix<f64>,
    opts: &FlowOptions,
    mut observer: O,
) -> Result<LaxTrajectory>
where
    O: FnMut(&LaxStep<'_>) -> Control,
{
    alg.check_p(l0)?;
    let sign = opts.sweep.sign();
    let initial_spectrum = sorted_eigenvalues(l0);
    let mut samples = Vec::new();
    let mut diag = FlowDiagnostics::default();
    let mut watch = SettleWatch::new();
    let mut converged = false;
    let mut last_rhs = f64::NAN;
    let mut last_offdiag = f64::NAN;

    let support = opts.support.clone();
    let project = |y: &mut DMatrix<f64>| {
        let asym = (&*y - y.transpose()) * 0.5;
        let mut corr = asym.norm();
        *y -= asym;
        if let Some(mask) = &support {
            for (v, keep) in y.iter_mut().zip(mask.iter()) {
                if !keep && *v != 0.0 {
                    corr = corr.max(v.abs());
                    *v = 0.0;
                }
            }
        }
        corr
    };

    let mut y0 = l0.clone();
    if let Some(mask) = &opts.support {
        for (v, keep) in y0.iter_mut().zip(mask.iter()) {
            if !keep {
                *v = 0.0;
            }
        }
    }

    let result = ode::integrate(
        &spec.control,
        |l| lax_field(l) * sign,
        y0,
        spec.t_max,
        project,
        |v: &StepView<'_>| {
            let t = v.t * sign;
            let rhs_norm = v.dydt.norm();
            let offdiag = off_diagonal_norm(v.y);
            last_rhs = rhs_norm;
            last_offdiag = offdiag;
            diag.max_correction = diag.max_correction.max(v.correction);
            if opts.store_samples {
                samples.push(Sample {
                    t,
                    state: v.y.clone(),
                });
                if opts.track_spectrum {
                    diag.spectral_drift = diag
                        .spectral_drift
                        .max(spectral_distance(&initial_spectrum, v.y));
                }
            }
            let step = LaxStep {
                t,
                l: v.y,
                rhs_norm,
            };
            if observer(&step) == Control::Stop {
                return Control::Stop;
            }
            if watch.update(spec, v.t, rhs_norm, offdiag) {
                converged = true;
                return Control::Stop;
            }
            Control::Continue
        },
    );

    let status = match &result {
        Ok(out) if converged => {
            let _ = out;
            RunStatus::Converged
        }
        Ok(out) if out.stopped => RunStatus::Stopped,
        Ok(_) => RunStatus::ReachedTMax,
        Err(e) => {
            diag.failure = Some(e.to_string());
            RunStatus::Failed
        }
    };
    let final_state = match &result {
        Ok(out) => out.y.clone(),
        Err(_) => samples
            .last()
            .map(|s: &Sample| s.state.clone())
            .unwrap_or_else(|| l0.clone()),
    };
    if let Ok(out) = &result {
        diag.accepted_steps = out.accepted;
        diag.rejected_steps = out.rejected;
        if !opts.store_samples {
            samples.push(Sample {
                t: out.t * sign,
                state: out.y.clone(),
            });
        }
    }
    if samples.is_empty() {
        samples.push(Sample {
            t: 0.0,
            state: final_state.clone(),
        });
    }
    diag.spectral_drift = diag
        .spectral_drift
        .max(spectral_distance(&initial_spectrum, &final_state));
    diag.final_rhs_norm = if last_rhs.is_nan() {
        lax_field(&final_state).norm()
    } else {
        last_rhs
    };
    diag.final_offdiag_norm = if last_offdiag.is_nan() {
        off_diagonal_norm(&final_state)
    } else {
        last_offdiag
    };
    if opts.sweep == Sweep::Backward {
        samples.reverse();
    }
    Ok(Trajectory {
        samples,
        status,
        diagnostics: diag,
        limit: None,
        sweep: opts.sweep,
    })
}

fn spectral_distance(reference: &[f64], l: &DMatrix<f64>) -> f64 {
    sorted_eigenvalues(l)
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Integrates `psi' = -M(Ad_psi Lambda) psi` with polar retraction onto the
/// orthogonal group after each step. Samples hold `psi`.
pub fn integrate_group(
    alg: &Realization,
    spec: &TodaSpec,
    psi0: &KElement,
) -> Result<GroupTrajectory> {
    KElement::new(psi0.matrix().clone())?;
    let initial_spectrum = sorted_eigenvalues(&spec.lambda);
    let mut samples = Vec::new();
    let mut diag = FlowDiagnostics::default();
    let mut watch = SettleWatch::new();
    let mut converged = false;
    let mut last_potential: Option<f64> = None;
    let mut max_drift = 0.0f64;

    let project = |y: &mut DMatrix<f64>| {
        max_drift = max_drift.max(orthogonality(y).0);
        let (q, corr) = polar_retract(y);
        *y = q;
        corr
    };

    let result = ode::integrate(
        &spec.control,
        |psi| group_rhs(spec, psi),
        psi0.matrix().clone(),
        spec.t_max,
        project,
        |v: &StepView<'_>| {
            let l = v.y * &spec.lambda * v.y.transpose();
            let rhs_norm = lax_field(&l).norm();
            let offdiag = off_diagonal_norm(&l);
            diag.max_correction = diag.max_correction.max(v.correction);
            diag.spectral_drift = diag
                .spectral_drift
                .max(spectral_distance(&initial_spectrum, &l));
            diag.final_rhs_norm = rhs_norm;
            diag.final_offdiag_norm = offdiag;
            let f = potential_of_lax(alg, spec, &l);
            if let Some(prev) = last_potential {
                let increase = match POTENTIAL_TREND {
                    Trend::Decreasing => f - prev,
                    Trend::Increasing => prev - f,
                };
                if increase > MONOTONICITY_SLACK {
                    diag.potential_violations += 1;
                }
                diag.max_potential_increase = diag.max_potential_increase.max(increase);
            }
            last_potential = Some(f);
            samples.push(Sample {
                t: v.t,
                state: v.y.clone(),
            });
            if watch.update(spec, v.t, rhs_norm, offdiag) {
                converged = true;
                return Control::Stop;
            }
            Control::Continue
        },
    );
    diag.max_orthogonality_drift = max_drift;
    let status = match &result {
        Ok(_) if converged => RunStatus::Converged,
        Ok(out) if out.stopped => RunStatus::Stopped,
        Ok(_) => RunStatus::ReachedTMax,
        Err(e) => {
            diag.failure = Some(e.to_string());
            RunStatus::Failed
        }
    };
    if let Ok(out) = &result {
        diag.accepted_steps = out.accepted;
        diag.rejected_steps = out.rejected;
    }
    Ok(Trajectory {
        samples,
        status,
        diagnostics: diag,
        limit: None,
        sweep: Sweep::Forward,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    /// Coefficient of `e_alpha - e_{-alpha}` in `M(Ad_gamma(t) Lambda)`.
    pub k: f64,
    /// `||M - k (e_alpha - e_{-alpha})||`
    pub off_residual: f64,
    /// Distance of `Ad_gamma(t) Lambda` from `h + R(e_alpha + e_{-alpha})`.
    pub span_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub w: usize,
    pub root: usize,
    pub root_name: String,
    pub points: Vec<CurvePoint>,
    pub max_off_residual: f64,
    pub max_span_residual: f64,
    /// Element `s_alpha w` reached at `t = pi/2`.
    pub endpoint: usize,
    /// Distance of `gamma(pi/2) rep(s_alpha w)^T` from a diagonal sign matrix.
    pub landing_residual: f64,
    /// `||Ad_gamma(pi/2) Lambda - Lambda_{s_alpha w}||`
    pub landing_point_residual: f64,
}

/// Checks that `gamma(t) = exp(t(e_alpha - e_{-alpha})) rep(w)` is tangent to
/// the group field: `M(Ad_gamma Lambda)` only has an `alpha` component.
pub fn invariant_curve_check(
    alg: &Realization,
    group: &WeylGroup,
    spec: &TodaSpec,
    w: usize,
    root: usize,
    t_grid: &[f64],
) -> Result<CurveReport> {
    let rs = alg.root_system();
    if !rs.is_positive(root) {
        return Err(Error::Precondition(format!(
            "root {} is not positive",
            rs.root_name(root)
        )));
    }
    let rep = alg.weyl_representative(group, w)?;
    let kgen = alg.k_generator(root);
    let pgen = alg.p_generator(root);
    let slot = alg.root_slot(root);
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let gamma = KElement::new_unchecked(exp_matrix(&kgen, t) * rep.matrix());
        let l = gamma.adjoint(&spec.lambda);
        let m = toda_projector(alg, &l)?;
        let k = alg.expand(&m)?[slot];
        let off_residual = (&m - &kgen * k).norm();
        let lc = alg.expand(&l)?;
        let cartan_part = DMatrix::from_diagonal(&l.diagonal());
        let span_residual = (&l - cartan_part - &pgen * lc[slot]).norm();
        points.push(CurvePoint {
            t,
            k,
            off_residual,
            span_residual,
        });
    }
    let endpoint = group.multiply(group.reflection(root), w);
    let gamma_end = exp_matrix(&kgen, FRAC_PI_2) * rep.matrix();
    let rep_end = alg.weyl_representative(group, endpoint)?;
    let ratio = &gamma_end * rep_end.matrix().transpose();
    let signs = DMatrix::from_diagonal(&DVector::from_iterator(
        ratio.nrows(),
        ratio.diagonal().iter().map(|d| d.signum()),
    ));
    let landing_residual = (ratio - signs).norm();
    let lambda_end = alg.weyl_act_on_cartan(group, endpoint, &spec.lambda)?;
    let landing_point_residual =
        (&gamma_end * &spec.lambda * gamma_end.transpose() - lambda_end).norm();
    Ok(CurveReport {
        w,
        root,
        root_name: rs.root_name(root),
        max_off_residual: points.iter().map(|p| p.off_residual).fold(0.0, f64::max),
        max_span_residual: points.iter().map(|p| p.span_residual).fold(0.0, f64::max),
        points,
        endpoint,
        landing_residual,
        landing_point_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    /// `jacobian[beta][alpha]`: coefficient of `e_beta + e_{-beta}` in the
    /// derivative of the field along `e_alpha + e_{-alpha}`.
    pub jacobian: Vec<Vec<f64>>,
    /// `alpha(Lambda_w)` for each positive root.
    pub expected: Vec<f64>,
    /// Largest Cartan component of any directional derivative, and the
    /// derivative along Cartan directions.
    pub cartan_leak: f64,
    pub max_deviation: f64,
}

/// Central-difference Jacobian of the Lax field at a Cartan element, in the
/// basis `{e_alpha + e_{-alpha}}`.
pub fn linearize(alg: &Realization, h: &DMatrix<f64>, eps: f64) -> Result<Linearization> {
    let rs = alg.root_system();
    let p = rs.n_positive();
    let mut jac = vec![vec![0.0; p]; p];
    let mut leak = 0.0f64;
    let directional = |dir: &DMatrix<f64>| -> Result<DVector<f64>> {
        let plus = lax_rhs(alg, &(h + dir * eps))?;
        let minus = lax_rhs(alg, &(h - dir * eps))?;
        alg.expand(&((plus - minus) / (2.0 * eps)))
    };
    for a in rs.positive_roots() {
        let d = directional(&alg.p_generator(a))?;
        for b in rs.positive_roots() {
            jac[b][a] = d[alg.root_slot(b)];
        }
        leak = leak.max(
            d.iter()
                .take(rs.rank())
                .fold(0.0, |m: f64, x| m.max(x.abs())),
        );
    }
    for hb in alg.cartan_basis() {
        let d = directional(hb)?;
        leak = leak.max(d.amax());
    }
    let expected: Vec<f64> = rs.positive_roots().map(|a| alg.root_value(a, h)).collect();
    let mut max_dev = leak;
    for (b, row) in jac.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            let target = if a == b { expected[a] } else { 0.0 };
            max_dev = max_dev.max((v - target).abs());
        }
    }
    Ok(Linearization {
        jacobian: jac,
        expected,
        cartan_leak: leak,
        max_deviation: max_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::RootSystem;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(t: CartanType, r: usize) -> (Realization, WeylGroup, TodaSpec) {
        let rs = RootSystem::build(t, r).unwrap();
        let g = WeylGroup::enumerate(&rs);
        let a = Realization::realize(&rs).unwrap();
        let s = TodaSpec::default_for(&a).unwrap();
        (a, g, s)
    }

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat())
    }

    #[test]
    fn defaults() {
        let (a, _, s) = setup(CartanType::A, 2);
        assert_eq!(s.lambda_diagonal(), vec![1.0, 0.0, -1.0]);
        assert_eq!(default_lambda(&setup(CartanType::A, 1).0), vec![1.0, -1.0]);
        assert_eq!(
            default_lambda(&setup(CartanType::A, 3).0),
            vec![3.0, 1.0, -1.0, -3.0]
        );
        assert!(check_regular(&a, &s.n_elem).is_ok());
    }

    #[test]
    fn projector_examples() {
        let (a, _, _) = setup(CartanType::A, 1);
        let l = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(
            toda_projector(&a, &l).unwrap(),
            m(&[&[0.0, 1.0], &[-1.0, 0.0]])
        );
        let d = m(&[&[0.5, 0.0], &[0.0, -0.5]]);
        assert_eq!(toda_projector(&a, &d).unwrap(), DMatrix::zeros(2, 2));

        let (a, _, _) = setup(CartanType::A, 2);
        let l = m(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0], &[2.0, 3.0, 0.0]]);
        let expected = m(&[&[0.0, 1.0, 2.0], &[-1.0, 0.0, 3.0], &[-2.0, -3.0, 0.0]]);
        assert_eq!(toda_projector(&a, &l).unwrap(), expected);
        assert!(matches!(
            toda_projector(
                &a,
                &m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
            ),
            Err(Error::NotInP { .. })
        ));
    }

    #[test]
    fn rhs_a1_closed_form() {
        let (alg, _, _) = setup(CartanType::A, 1);
        let (x, y) = (0.7, -1.3);
        let l = m(&[&[x, y], &[y, -x]]);
        let rhs = lax_rhs(&alg, &l).unwrap();
        let expected = m(&[&[-2.0 * y * y, 2.0 * x * y], &[2.0 * x * y, 2.0 * y * y]]);
        assert!((rhs - expected).norm() < 1e-15);
        assert_eq!(
            lax_rhs(&alg, &m(&[&[1.0, 0.0], &[0.0, -1.0]])).unwrap(),
            DMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn a1_tanh_solution() {
        let (alg, _, spec) = setup(CartanType::A, 1);
        let spec = spec.with_t_max(10.0);
        let traj = integrate_lax(&alg, &spec, &m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let mut err = 0.0f64;
        for s in &traj.samples {
            let a = -(2.0 * s.t).tanh();
            let b = 1.0 / (2.0 * s.t).cosh();
            err = err
                .max((s.state[(0, 0)] - a).abs())
                .max((s.state[(0, 1)] - b).abs());
        }
        assert!(err < 1e-6, "max error {err}");
        let last = traj.last();
        assert!((last.state[(0, 0)] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn fixed_point_is_constant() {
        let (alg, _, spec) = setup(CartanType::A, 2);
        let traj = integrate_lax(&alg, &spec, &spec.lambda).unwrap();
        assert!(traj.is_converged());
        for s in &traj.samples {
            assert_eq!(s.state, spec.lambda);
        }
    }

    #[test]
    fn backward_sweep_times_increase() {
        let (alg, _, spec) = setup(CartanType::A, 1);
        let spec = spec.with_t_max(5.0);
        let opts = FlowOptions {
            sweep: Sweep::Backward,
            ..FlowOptions::default()
        };
        let traj = integrate_lax_with(&alg, &spec, &m(&[&[0.0, 1.0], &[1.0, 0.0]]), &opts, |_| {
            Control::Continue
        })
        .unwrap();
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(traj.last().t, 0.0);
        // backward in time the solution approaches diag(1, -1)
        assert!((traj.first().state[(0, 0)] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn group_fixed_points() {
        let (alg, g, spec) = setup(CartanType::A, 2);
        for w in 0..g.len() {
            let rep = alg.weyl_representative(&g, w).unwrap();
            assert!(group_rhs(&spec, rep.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn potential_values_a1() {
        let rs = RootSystem::build(CartanType::A, 1).unwrap();
        let g = WeylGroup::enumerate(&rs);
        let alg = Realization::realize(&rs).unwrap();
        let spec = TodaSpec::new(&alg, &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let id = KElement::identity(2);
        assert!((morse_potential(&alg, &spec, &id) - 8.0).abs() < 1e-12);
        let s = alg.weyl_representative(&g, 1).unwrap();
        assert!((morse_potential(&alg, &spec, &s) + 8.0).abs() < 1e-12);
        assert!((morse_potential_exact(&alg, &spec, &s).unwrap() + 8.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_critical_values() {
        for (t, r) in [
            (CartanType::A, 1),
            (CartanType::A, 2),
            (CartanType::A, 3),
            (CartanType::A, 4),
            (CartanType::B, 2),
        ] {
            let (alg, g, spec) = setup(t, r);
            let mut vals: Vec<f64> = (0..g.len())
                .map(|w| morse_potential(&alg, &spec, &alg.weyl_representative(&g, w).unwrap()))
                .collect();
            vals.sort_by(f64::total_cmp);
            for pair in vals.windows(2) {
                assert!(pair[1] - pair[0] > 1e-6, "{t}{r}: {vals:?}");
            }
        }
    }

    #[test]
    fn trend_and_gradient_sign() {
        let (alg, _, spec) = setup(CartanType::A, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(detect_trend(&alg, &spec, &mut rng), POTENTIAL_TREND);
        for _ in 0..20 {
            let psi = random_k_element(&alg, &mut rng, 1.0);
            let fd = potential_derivative_fd(&alg, &spec, &psi, 1e-6);
            let exact = potential_derivative(&alg, &spec, &psi);
            assert!(exact <= 0.0);
            assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1e-3));
        }
    }

    #[test]
    fn group_flow_matches_lax_flow() {
        let (alg, _, _) = setup(CartanType::A, 1);
        let spec = TodaSpec::new(&alg, &[1.0, -1.0], &[1.0, -1.0])
            .unwrap()
            .with_t_max(10.0);
        // Ad_psi0(diag(1,-1)) = [[0,1],[1,0]] for a rotation by -pi/4
        let th = -std::f64::consts::FRAC_PI_4;
        let psi0 = KElement::new(m(&[&[th.cos(), th.sin()], &[-th.sin(), th.cos()]])).unwrap();
        assert!((psi0.adjoint(&spec.lambda) - m(&[&[0.0, 1.0], &[1.0, 0.0]])).norm() < 1e-15);
        let traj = integrate_group(&alg, &spec, &psi0).unwrap();
        let mut err = 0.0f64;
        for s in &traj.samples {
            let l = &s.state * &spec.lambda * s.state.transpose();
            err = err
                .max((l[(0, 0)] + (2.0 * s.t).tanh()).abs())
                .max((l[(0, 1)] - 1.0 / (2.0 * s.t).cosh()).abs());
        }
        assert!(err < 1e-6, "{err}");
        assert!(traj.diagnostics.max_orthogonality_drift < 1e-9);
        assert_eq!(traj.diagnostics.potential_violations, 0);
    }

    #[test]
    fn identity_is_constant_group_trajectory() {
        let (alg, _, spec) = setup(CartanType::A, 2);
        let traj = integrate_group(&alg, &spec, &KElement::identity(3)).unwrap();
        assert!(traj.is_converged());
        assert!(traj
            .samples
            .iter()
            .all(|s| s.state == DMatrix::identity(3, 3)));
    }

    #[test]
    fn curve_check_a1() {
        let rs = RootSystem::build(CartanType::A, 1).unwrap();
        let g = WeylGroup::enumerate(&rs);
        let alg = Realization::realize(&rs).unwrap();
        let spec = TodaSpec::new(&alg, &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| -1.5 + 0.15 * i as f64).collect();
        let rep = invariant_curve_check(&alg, &g, &spec, 0, 0, &grid).unwrap();
        assert!(rep.max_off_residual < 1e-12);
        for p in &rep.points {
            assert!((p.k + (2.0 * p.t).sin()).abs() < 1e-12);
        }
        let at0 = invariant_curve_check(&alg, &g, &spec, 0, 0, &[0.0]).unwrap();
        assert_eq!(at0.points[0].k, 0.0);
        assert_eq!(at0.points[0].off_residual, 0.0);
        assert_eq!(rep.endpoint, 1);
        assert!(rep.landing_residual < 1e-12 && rep.landing_point_residual < 1e-12);
    }

    #[test]
    fn linearization_is_diagonal() {
        let (alg, g, spec) = setup(CartanType::B, 2);
        for w in 0..g.len() {
            let h = alg.weyl_act_on_cartan(&g, w, &spec.lambda).unwrap();
            let lin = linearize(&alg, &h, 1e-4).unwrap();
            assert!(lin.max_deviation < 1e-7, "{w}: {}", lin.max_deviation);
        }
    }

    #[test]
    fn projector_routes_agree_b2() {
        let (alg, _, spec) = setup(CartanType::B, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let l = random_isospectral(&alg, &spec, &mut rng);
            let a = toda_projector(&alg, &l).unwrap();
            assert!((a - triangular_projector(&l)).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn rhs_is_symmetric_and_trace_free(c in prop::collection::vec(-2.0f64..2.0, 9)) {
            let (alg, _, _) = setup(CartanType::A, 3);
            let mut l = DMatrix::from_diagonal(&DVector::from_vec(vec![c[0], c[1], c[2], -c[0] - c[1] - c[2]]));
            for (k, root) in alg.root_system().positive_roots().enumerate() {
                l += alg.p_generator(root) * c[3 + k];
            }
            let rhs = lax_rhs(&alg, &l).unwrap();
            prop_assert!((rhs.trace()).abs() < 1e-12);
            prop_assert!((&rhs - rhs.transpose()).norm() < 1e-12);
            prop_assert!((toda_projector(&alg, &l).unwrap() - triangular_projector(&l)).norm() < 1e-12);
        }
    }
}
