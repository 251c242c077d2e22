//! Trajectory launches near fixed points: gamma-curve covers, generic shots
//! into unstable (or stable) subspaces and great-circle bisection for
//! connections of codimension one.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Portrait, APPROACH_TOL, GAMMA_OFFSET, SHOT_EPSILON};
use crate::error::{Error, Result};
use crate::liealg::{exp_matrix, Realization};
use crate::ode::Control;
use crate::rootsys::WeylGroup;
use crate::todaflow::{integrate_lax_with, FlowOptions, RunStatus, Sweep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    GammaCurve,
    GenericShot,
    Bisection,
    Transitive,
}

/// A trajectory found to run from `src` to `dst` (raw ids).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub src: usize,
    pub dst: usize,
    pub evidence: Evidence,
    /// Closest approach to the targeted fixed point, or the distance to the
    /// limit at the end of integration when nothing was targeted.
    pub approach: f64,
    pub final_rhs: f64,
    pub spectral_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub index: usize,
    pub direction: Vec<f64>,
    pub limit: Option<usize>,
    /// Minimum distance to the target over the trajectory (infinite when
    /// there is no target).
    pub approach: f64,
    pub rhs_at_approach: f64,
    /// Signs of the target's escape-root components at the closest approach;
    /// empty when the shot stays away from the target.
    pub side: Vec<bool>,
    /// Distance to the limit point at the end of integration.
    pub end_distance: f64,
    pub final_rhs: f64,
    pub spectral_drift: f64,
    pub status: RunStatus,
}

struct ShotPlan {
    base: usize,
    roots: Vec<usize>,
    sweep: Sweep,
    support: Option<DMatrix<bool>>,
    target: Option<usize>,
    /// Roots along which a trajectory leaves the target in the sweep direction.
    escape: Vec<usize>,
    side_radius: f64,
    /// Launch amplitude per root of `roots`.
    amps: Vec<f64>,
}

impl ShotPlan {
    fn witness(&self, shot: &Shot, evidence: Evidence) -> Option<Witness> {
        let limit = shot.limit?;
        if limit == self.base {
            return None;
        }
        let (src, dst) = match self.sweep {
            Sweep::Forward => (self.base, limit),
            Sweep::Backward => (limit, self.base),
        };
        let approach = if Some(limit) == self.target {
            shot.approach.min(shot.end_distance)
        } else {
            shot.end_distance
        };
        Some(Witness {
            src,
            dst,
            evidence,
            approach,
            final_rhs: shot.final_rhs,
            spectral_drift: shot.spectral_drift,
        })
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-task seed so that results do not depend on scheduling.
pub(crate) fn task_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix(seed), |acc, &t| splitmix(acc ^ t))
}

fn random_directions(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Positive roots in the image of `sigma - 1` on the root lattice. The Cartan
/// subalgebra plus these root spaces is a subalgebra on which the flow
/// restricts. It contains the fixed points of the coset `W_S u`, and the
/// restricted flow is the Toda flow of a smaller split algebra, so a
/// connection from `u` to `sigma u` can be looked for there with fewer
/// directions to control.
pub fn subsystem_roots(group: &WeylGroup, sigma: usize) -> Vec<usize> {
    let rs = group.root_system();
    let r = rs.rank();
    let mut span: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let img = rs.root(group.act(sigma, rs.simple_root(i)));
            (0..r)
                .map(|j| img[j] as f64 - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let base_rank = matrix_rank(&span);
    rs.positive_roots()
        .filter(|&a| {
            span.push(rs.root(a).iter().map(|&c| c as f64).collect());
            let rank = matrix_rank(&span);
            span.pop();
            rank == base_rank
        })
        .collect()
}

fn matrix_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    m.rank(1e-9)
}

/// Entries allowed to be nonzero on `h + sum_{alpha in roots} p_alpha`.
pub(crate) fn support_mask(alg: &Realization, roots: &[usize]) -> DMatrix<bool> {
    let n = alg.n();
    let mut mask = DMatrix::from_fn(n, n, |i, j| i == j);
    let rs = alg.root_system();
    for &a in roots {
        for root in [a, rs.negate(a)] {
            for (keep, v) in mask.iter_mut().zip(alg.root_vector(root).iter()) {
                if *v != 0.0 {
                    *keep = true;
                }
            }
        }
    }
    mask
}

/// `Ad_{exp(k)}(Lambda_base)` with `k` chosen so that the first-order
/// displacement is `sum_alpha amp_alpha c_alpha (e_alpha + e_{-alpha})`.
/// Starting on the orbit keeps the spectrum exact.
fn start_state(
    portrait: &Portrait<'_>,
    base: usize,
    roots: &[usize],
    amps: &[f64],
    dir: &[f64],
) -> DMatrix<f64> {
    let alg = portrait.alg;
    let lw = &portrait.fixed_point(base).lambda_w;
    let mut k = DMatrix::zeros(alg.n(), alg.n());
    for ((&a, &amp), &c) in roots.iter().zip(amps).zip(dir) {
        k += alg.k_generator(a) * (-amp * c / alg.root_value(a, lw));
    }
    let g = exp_matrix(&k, 1.0);
    let l = &g * lw * g.transpose();
    (&l + l.transpose()) * 0.5
}

/// Smallest launch amplitude used by isochronous launches.
const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Per-root launch amplitudes. Uniform amplitudes let the fastest modes
/// dominate, so trajectories tangent to slow directions are almost never
/// sampled. Isochronous amplitudes `eps^(r_alpha / r_min)` make every linear
/// mode reach size one at the same time, with `eps` raised if needed to keep
/// all amplitudes above [`AMPLITUDE_FLOOR`].
fn launch_amplitudes(
    portrait: &Portrait<'_>,
    base: usize,
    roots: &[usize],
    isochronous: bool,
) -> Vec<f64> {
    if !isochronous {
        return vec![SHOT_EPSILON; roots.len()];
    }
    let lw = &portrait.fixed_point(base).lambda_w;
    let rates: Vec<f64> = roots
        .iter()
        .map(|&a| portrait.alg.root_value(a, lw).abs())
        .collect();
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rates.iter().copied().fold(0.0, f64::max);
    let eps = SHOT_EPSILON.max(AMPLITUDE_FLOOR.powf(min / max));
    rates.iter().map(|r| eps.powf(r / min)).collect()
}

struct Run {
    limit: Option<usize>,
    approach: f64,
    rhs_at_approach: f64,
    /// State at the closest approach to the target.
    closest: Option<DMatrix<f64>>,
    end_distance: f64,
    final_rhs: f64,
    spectral_drift: f64,
    status: RunStatus,
}

fn run_from(
    portrait: &Portrait<'_>,
    l0: &DMatrix<f64>,
    sweep: Sweep,
    support: Option<&DMatrix<bool>>,
    target: Option<usize>,
) -> Result<Run> {
    let opts = FlowOptions {
        sweep,
        store_samples: false,
        support: support.cloned(),
        track_spectrum: false,
    };
    let target_point = target.map(|t| &portrait.fixed_point(t).lambda_w);
    let mut approach = f64::INFINITY;
    let mut rhs_at_approach = f64::NAN;
    let mut closest = None;
    let traj = integrate_lax_with(portrait.alg, &portrait.spec, l0, &opts, |step| {
        if let Some(tp) = target_point {
            let d = (step.l - tp).norm();
            if d < approach {
                approach = d;
                rhs_at_approach = step.rhs_norm;
                closest = Some(step.l.clone());
            }
        }
        Control::Continue
    })?;
    let end = &traj.end().state;
    let limit = if traj.status == RunStatus::Failed {
        None
    } else {
        portrait.classify(end)?
    };
    let end_distance = limit
        .map(|w| (end - &portrait.fixed_point(w).lambda_w).norm())
        .unwrap_or(f64::INFINITY);
    Ok(Run {
        limit,
        approach,
        rhs_at_approach,
        closest,
        end_distance,
        final_rhs: traj.diagnostics.final_rhs_norm,
        spectral_drift: traj.diagnostics.spectral_drift,
        status: traj.status,
    })
}

/// Signs of the escape-root components of `l - Lambda_target`, or empty when
/// `l` is not closer to the target than half the distance to any other fixed
/// point.
fn side_of_passage(
    portrait: &Portrait<'_>,
    plan: &ShotPlan,
    l: &DMatrix<f64>,
    approach: f64,
) -> Vec<bool> {
    let Some(target) = plan.target else {
        return vec![];
    };
    if approach >= plan.side_radius {
        return vec![];
    }
    let d = l - &portrait.fixed_point(target).lambda_w;
    plan.escape
        .iter()
        .map(|&a| {
            let e = portrait.alg.root_vector(a);
            d.dot(e) / e.norm_squared() >= 0.0
        })
        .collect()
}

fn run_shot(portrait: &Portrait<'_>, plan: &ShotPlan, index: usize, dir: &[f64]) -> Result<Shot> {
    let l0 = start_state(portrait, plan.base, &plan.roots, &plan.amps, dir);
    let run = run_from(
        portrait,
        &l0,
        plan.sweep,
        plan.support.as_ref(),
        plan.target,
    )?;
    let side = match &run.closest {
        Some(l) => side_of_passage(portrait, plan, l, run.approach),
        None => vec![],
    };
    Ok(Shot {
        index,
        direction: dir.to_vec(),
        limit: run.limit,
        approach: run.approach,
        rhs_at_approach: run.rhs_at_approach,
        side,
        end_distance: run.end_distance,
        final_rhs: run.final_rhs,
        spectral_drift: run.spectral_drift,
        status: run.status,
    })
}

fn run_shots(portrait: &Portrait<'_>, plan: &ShotPlan, dirs: &[Vec<f64>]) -> Result<Vec<Shot>> {
    dirs.par_iter()
        .enumerate()
        .map(|(i, d)| run_shot(portrait, plan, i, d))
        .collect()
}

/// Basin census of shots launched from one fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub base: usize,
    pub sweep: Sweep,
    pub samples: usize,
    /// Raw id of each limit reached, with counts.
    pub limits: BTreeMap<usize, usize>,
    pub unclassified: usize,
    /// At most 1% of shots unclassified.
    pub valid: bool,
    pub witnesses: Vec<Witness>,
}

fn census(portrait: &Portrait<'_>, plan: &ShotPlan, shots: &[Shot]) -> Census {
    let mut limits = BTreeMap::new();
    let mut unclassified = 0;
    let mut witnesses: BTreeMap<(usize, usize), Witness> = BTreeMap::new();
    for shot in shots {
        match shot.limit {
            Some(l) => *limits.entry(l).or_insert(0) += 1,
            None => unclassified += 1,
        }
        if let Some(w) = plan.witness(shot, Evidence::GenericShot) {
            witnesses
                .entry((w.src, w.dst))
                .and_modify(|old| {
                    if w.approach < old.approach {
                        *old = w.clone();
                    }
                })
                .or_insert(w);
        }
    }
    let _ = portrait;
    Census {
        base: plan.base,
        sweep: plan.sweep,
        samples: shots.len(),
        limits,
        unclassified,
        valid: unclassified * 100 <= shots.len(),
        witnesses: witnesses.into_values().collect(),
    }
}

/// Forward shots from `w_src` in uniformly sampled directions of its
/// unstable subspace.
pub fn generic_shots(
    portrait: &Portrait<'_>,
    w_src: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Census> {
    let fp = portrait.fixed_point(w_src);
    if fp.unstable_dim == 0 {
        return Err(Error::Precondition(format!(
            "fixed point {w_src} has no unstable directions"
        )));
    }
    let plan = ShotPlan {
        base: w_src,
        roots: fp.unstable_roots.clone(),
        sweep: Sweep::Forward,
        support: None,
        target: None,
        escape: vec![],
        side_radius: 0.0,
        amps: vec![SHOT_EPSILON; fp.unstable_roots.len()],
    };
    let dirs = random_directions(
        plan.roots.len(),
        n_samples,
        task_seed(seed, &[1, w_src as u64]),
    );
    let shots = run_shots(portrait, &plan, &dirs)?;
    Ok(census(portrait, &plan, &shots))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub n_samples: usize,
    pub max_iter: usize,
    pub approach_tol: f64,
    /// Bracketing pairs tried before giving up.
    pub max_arcs: usize,
    /// Restrict launches to one direction; by default the direction with the
    /// lower codimension is used.
    pub sweep: Option<Sweep>,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            n_samples: 24,
            max_iter: 200,
            approach_tol: APPROACH_TOL,
            max_arcs: 6,
            sweep: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub src: usize,
    pub dst: usize,
    /// Positive roots of the invariant subsystem searched in.
    pub subsystem: Vec<usize>,
    pub sweep: Sweep,
    /// Codimension of the connecting set in the sphere of launch directions.
    pub codimension: usize,
    pub witness: Option<Witness>,
    pub best_approach: f64,
    pub rhs_at_best: f64,
    pub shots: usize,
    pub bisection_steps: usize,
    /// Iterations of the approach-lowering descent.
    pub descent_steps: usize,
    /// Other connections observed on the way.
    pub observed: Vec<Witness>,
    pub note: Option<String>,
}

/// Searches for a trajectory from `u` to `v` (raw ids).
///
/// Launches go forward from `u` or backward from `v`, either inside the
/// invariant subsystem of `v u^{-1}` or in the full algebra, whichever makes
/// the set of connecting directions have the lowest codimension. Codimension zero needs only
/// sampling; codimension one brackets the target between two shots that pass
/// it on different sides (different limits, or opposite signs along the
/// target's escape directions at closest approach) and bisects the
/// great-circle arc between them. Returns
/// an outcome with `witness: None` when nothing was found, which is absence
/// of evidence only.
pub fn bisection_heteroclinic(
    portrait: &Portrait<'_>,
    u: usize,
    v: usize,
    params: &SearchParams,
) -> Result<SearchOutcome> {
    if u == v {
        return Err(Error::Precondition("source and target coincide".into()));
    }
    let alg = portrait.alg;
    let group = portrait.group;
    let sigma = group.multiply(v, group.inverse(u));
    let subsystem = subsystem_roots(group, sigma);
    let lu = &portrait.fixed_point(u).lambda_w;
    let lv = &portrait.fixed_point(v).lambda_w;
    let all: Vec<usize> = alg.root_system().positive_roots().collect();
    let mut systems = vec![subsystem];
    if systems[0].len() < all.len() {
        systems.push(all.clone());
    }
    // (codimension, system index, sweep, launch roots, escape roots)
    let mut candidates = Vec::new();
    for (k, roots) in systems.iter().enumerate() {
        let select = |h: &DMatrix<f64>, positive: bool| -> Vec<usize> {
            roots
                .iter()
                .copied()
                .filter(|&a| (alg.root_value(a, h) > 0.0) == positive)
                .collect()
        };
        for sweep in [Sweep::Forward, Sweep::Backward] {
            if params.sweep.is_some_and(|s| s != sweep) {
                continue;
            }
            let (launch, codim) = match sweep {
                Sweep::Forward => (select(lu, true), select(lv, true).len()),
                Sweep::Backward => (select(lv, false), select(lu, false).len()),
            };
            let escape = match sweep {
                Sweep::Forward => select(lv, true),
                Sweep::Backward => select(lu, false),
            };
            // a connecting set of codimension c needs a sphere of dimension >= c
            if !launch.is_empty() && launch.len() > codim {
                candidates.push((codim, k, sweep, launch, escape));
            }
        }
    }
    candidates.sort_by_key(|c| (c.0, c.1, c.2 == Sweep::Backward));
    let Some((codimension, k, sweep, launch, escape)) = candidates.into_iter().next() else {
        return Ok(SearchOutcome {
            src: u,
            dst: v,
            subsystem: systems.swap_remove(0),
            sweep: Sweep::Forward,
            codimension: 0,
            witness: None,
            best_approach: f64::INFINITY,
            rhs_at_best: f64::NAN,
            shots: 0,
            bisection_steps: 0,
            descent_steps: 0,
            observed: vec![],
            note: Some("no usable launch directions".into()),
        });
    };
    let subsystem = systems.swap_remove(k);
    let support = (subsystem.len() < all.len()).then(|| support_mask(alg, &subsystem));
    let (base, target) = match sweep {
        Sweep::Forward => (u, v),
        Sweep::Backward => (v, u),
    };
    let lt = &portrait.fixed_point(target).lambda_w;
    let side_radius = 0.5
        * portrait
            .fixed
            .iter()
            .filter(|f| f.w != target)
            .map(|f| (&f.lambda_w - lt).norm())
            .fold(f64::INFINITY, f64::min);
    let plan = ShotPlan {
        base,
        sweep,
        support,
        target: Some(target),
        amps: launch_amplitudes(portrait, base, &launch, true),
        roots: launch,
        escape,
        side_radius,
    };
    let mut outcome = SearchOutcome {
        src: u,
        dst: v,
        subsystem: subsystem.clone(),
        sweep: plan.sweep,
        codimension,
        witness: None,
        best_approach: f64::INFINITY,
        rhs_at_best: f64::NAN,
        shots: 0,
        bisection_steps: 0,
        descent_steps: 0,
        observed: vec![],
        note: None,
    };
    if codimension >= 2 {
        outcome.note = Some(format!(
            "connecting set has codimension {codimension}; not searched"
        ));
        return Ok(outcome);
    }

    let dirs = random_directions(
        plan.roots.len(),
        params.n_samples,
        task_seed(params.seed, &[3, u as u64, v as u64]),
    );
    let shots = run_shots(portrait, &plan, &dirs)?;
    let mut search = Search {
        portrait,
        plan: &plan,
        params,
        outcome,
        observed: BTreeMap::new(),
        shots: Vec::new(),
    };
    let evidence = if codimension == 0 {
        Evidence::GenericShot
    } else {
        Evidence::Bisection
    };
    let mut found = false;
    for shot in shots {
        found |= search.record(shot, evidence);
    }
    if !found && codimension == 1 && plan.roots.len() >= 2 {
        found = search.bisect_arcs(0)?;
        if !found {
            let before = search.shots.len();
            found = search.descend()?;
            if !found {
                search.bisect_arcs(before)?;
            }
        }
    }
    let mut outcome = search.outcome;
    outcome.shots = search.shots.len();
    outcome.observed = search.observed.into_values().collect();
    Ok(outcome)
}

/// State of one codimension-zero or codimension-one search.
struct Search<'p, 'a> {
    portrait: &'p Portrait<'a>,
    plan: &'p ShotPlan,
    params: &'p SearchParams,
    outcome: SearchOutcome,
    observed: BTreeMap<(usize, usize), Witness>,
    shots: Vec<Shot>,
}

impl Search<'_, '_> {
    /// Stores the shot and reports whether it reached the target.
    fn record(&mut self, shot: Shot, evidence: Evidence) -> bool {
        let target = self.plan.target;
        let outcome = &mut self.outcome;
        if shot.approach < outcome.best_approach {
            outcome.best_approach = shot.approach;
            outcome.rhs_at_best = shot.rhs_at_approach;
        }
        if let Some(w) = self.plan.witness(&shot, Evidence::GenericShot) {
            self.observed.entry((w.src, w.dst)).or_insert(w);
        }
        let reached = shot.limit.is_some() && shot.limit == target;
        let hit = reached || shot.approach < self.params.approach_tol;
        if hit && outcome.witness.is_none() {
            outcome.witness = Some(Witness {
                src: outcome.src,
                dst: outcome.dst,
                evidence,
                approach: shot.approach.min(if reached {
                    shot.end_distance
                } else {
                    f64::INFINITY
                }),
                final_rhs: shot.rhs_at_approach,
                spectral_drift: shot.spectral_drift,
            });
        }
        self.shots.push(shot);
        hit
    }

    fn run(&mut self, dir: &[f64]) -> Result<Shot> {
        run_shot(self.portrait, self.plan, self.shots.len(), dir)
    }

    /// Bisects great-circle arcs between recorded shots that pass the target
    /// on different sides. Only pairs with at least one shot from index
    /// `from` on are tried.
    fn bisect_arcs(&mut self, from: usize) -> Result<bool> {
        // Shots on opposite sides of the connecting set either end in
        // different basins or leave the target along opposite escape
        // directions.
        let key = |shot: &Shot| (shot.limit, shot.side.clone());
        let shots = &self.shots;
        let mut arcs: Vec<(usize, usize)> = Vec::new();
        for j in from.max(1)..shots.len() {
            for i in 0..j {
                let (ki, kj) = (key(&shots[i]), key(&shots[j]));
                if ki.0.is_some() && kj.0.is_some() && ki != kj {
                    arcs.push((i, j));
                }
            }
        }
        arcs.sort_by(|x, y| {
            let dx = shots[x.0].approach + shots[x.1].approach;
            let dy = shots[y.0].approach + shots[y.1].approach;
            dx.total_cmp(&dy).then(x.cmp(y))
        });
        arcs.truncate(self.params.max_arcs);
        for (i, j) in arcs {
            let (mut a, ka) = (self.shots[i].direction.clone(), key(&self.shots[i]));
            let mut b = self.shots[j].direction.clone();
            for _ in 0..self.params.max_iter {
                let gap: f64 = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if gap < 1e-15 {
                    break;
                }
                let mid = normalize(a.iter().zip(&b).map(|(x, y)| x + y).collect());
                let shot = self.run(&mid)?;
                self.outcome.bisection_steps += 1;
                let km = key(&shot);
                if self.record(shot, Evidence::Bisection) {
                    return Ok(true);
                }
                if km.0.is_none() {
                    break;
                }
                if km == ka {
                    a = mid;
                } else {
                    b = mid;
                }
            }
        }
        Ok(false)
    }

    /// Compass search on the sphere of launch directions that lowers the
    /// closest approach, starting from the best recorded shot. Used when no
    /// sampled shot came near enough to the target to tell its sides apart.
    fn descend(&mut self) -> Result<bool> {
        let Some(best) = self
            .shots
            .iter()
            .min_by(|a, b| a.approach.total_cmp(&b.approach))
        else {
            return Ok(false);
        };
        let (mut x, mut fx) = (best.direction.clone(), best.approach);
        let dim = x.len();
        let mut step = 0.5;
        let mut iter = 0;
        while iter < self.params.max_iter && step > 1e-9 {
            iter += 1;
            let trials: Vec<Vec<f64>> = (0..2 * dim)
                .map(|k| {
                    let mut y = x.clone();
                    y[k / 2] += if k % 2 == 0 { step } else { -step };
                    normalize(y)
                })
                .collect();
            let start = self.shots.len();
            let results: Vec<Shot> = trials
                .par_iter()
                .enumerate()
                .map(|(k, d)| run_shot(self.portrait, self.plan, start + k, d))
                .collect::<Result<_>>()?;
            self.outcome.descent_steps += 1;
            let mut improved = None;
            for shot in results {
                if shot.approach < fx {
                    fx = shot.approach;
                    improved = Some(shot.direction.clone());
                }
                if self.record(shot, Evidence::Bisection) {
                    return Ok(true);
                }
            }
            match improved {
                Some(y) => x = y,
                None => step *= 0.5,
            }
        }
        Ok(false)
    }
}

/// Minimum distance to `v` along forward shots from `u`, and to `u` along
/// backward shots from `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachProbe {
    pub u: usize,
    pub v: usize,
    pub min_approach: f64,
    pub shots: usize,
    pub observed: Vec<Witness>,
}

pub fn closest_approach_census(
    portrait: &Portrait<'_>,
    u: usize,
    v: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ApproachProbe> {
    let alg = portrait.alg;
    let mut min_approach = f64::INFINITY;
    let mut shots_run = 0;
    let mut observed: BTreeMap<(usize, usize), Witness> = BTreeMap::new();
    let stable: Vec<usize> = alg
        .root_system()
        .positive_roots()
        .filter(|&a| alg.root_value(a, &portrait.fixed_point(v).lambda_w) < 0.0)
        .collect();
    let unstable = portrait.fixed_point(u).unstable_roots.clone();
    let plans = [
        ShotPlan {
            base: u,
            amps: launch_amplitudes(portrait, u, &unstable, true),
            roots: unstable,
            sweep: Sweep::Forward,
            support: None,
            target: Some(v),
            escape: vec![],
            side_radius: 0.0,
        },
        ShotPlan {
            base: v,
            amps: launch_amplitudes(portrait, v, &stable, true),
            roots: stable,
            sweep: Sweep::Backward,
            support: None,
            target: Some(u),
            escape: vec![],
            side_radius: 0.0,
        },
    ];
    for (k, plan) in plans.iter().enumerate() {
        if plan.roots.is_empty() {
            continue;
        }
        let dirs = random_directions(
            plan.roots.len(),
            n_samples,
            task_seed(seed, &[4 + k as u64, u as u64, v as u64]),
        );
        for shot in run_shots(portrait, plan, &dirs)? {
            shots_run += 1;
            min_approach = min_approach.min(shot.approach);
            if let Some(w) = plan.witness(&shot, Evidence::GenericShot) {
                observed.entry((w.src, w.dst)).or_insert(w);
            }
        }
    }
    Ok(ApproachProbe {
        u,
        v,
        min_approach,
        shots: shots_run,
        observed: observed.into_values().collect(),
    })
}

/// Result of following one gamma curve between `lower` and `upper = s_alpha lower`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverWitness {
    pub lower: usize,
    pub upper: usize,
    pub root: usize,
    pub root_name: String,
    pub witness: Witness,
    /// Potential drops from the source end to the sink end.
    pub potential_monotone: bool,
}

/// Follows the gamma curve of every pair `(w, s_alpha w)` whose labels differ
/// in length by one, launching forward and backward from points `1e-4` along
/// the curve off each end. Integration is restricted to `h + p_alpha`, which
/// the curve never leaves.
pub fn cover_connections(portrait: &Portrait<'_>) -> Result<Vec<CoverWitness>> {
    let alg = portrait.alg;
    let group = portrait.group;
    let rs = alg.root_system();
    let mut tasks = Vec::new();
    for w in 0..group.len() {
        let lw = group.length(portrait.label(w));
        for root in rs.positive_roots() {
            let x = group.multiply(group.reflection(root), w);
            if group.length(portrait.label(x)) == lw + 1 {
                tasks.push((w, root, x));
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(w, root, x)| follow_curve(portrait, w, root, x))
        .collect()
}

fn follow_curve(portrait: &Portrait<'_>, w: usize, root: usize, x: usize) -> Result<CoverWitness> {
    let alg = portrait.alg;
    let rs = alg.root_system();
    let kgen = alg.k_generator(root);
    let rep = portrait.representative(w).matrix();
    let mask = support_mask(alg, &[root]);
    let curve_point = |t: f64| {
        let g = exp_matrix(&kgen, t) * rep;
        let l = &g * &portrait.spec.lambda * g.transpose();
        (&l + l.transpose()) * 0.5
    };
    let fail = |detail: String| Error::GammaCurve {
        point: w,
        root: rs.root_name(root),
        detail,
    };
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let mut worst_distance = 0.0f64;
    let mut worst_rhs = 0.0f64;
    let mut drift = 0.0f64;
    for t0 in [GAMMA_OFFSET, FRAC_PI_2 - GAMMA_OFFSET] {
        let l0 = curve_point(t0);
        let mut lim = [0usize; 2];
        for (k, sweep) in [Sweep::Backward, Sweep::Forward].into_iter().enumerate() {
            let run = run_from(portrait, &l0, sweep, Some(&mask), None)?;
            let status = run.status;
            let limit = run.limit.ok_or_else(|| {
                fail(format!(
                    "{sweep:?} run from t = {t0:.4} ended unclassified ({status:?})"
                ))
            })?;
            lim[k] = limit;
            worst_distance = worst_distance.max(run.end_distance);
            worst_rhs = worst_rhs.max(run.final_rhs);
            drift = drift.max(run.spectral_drift);
        }
        ends.push((lim[0], lim[1]));
    }
    let (src, dst) = ends[0];
    if ends[1] != ends[0] {
        return Err(fail(format!(
            "launches disagree: {:?} vs {:?}",
            ends[0], ends[1]
        )));
    }
    let mut pair = [src, dst];
    pair.sort();
    let mut expected = [w, x];
    expected.sort();
    if pair != expected {
        return Err(fail(format!(
            "limits {src} -> {dst}, expected endpoints {w} and {x}"
        )));
    }
    let potential_monotone =
        portrait.fixed_point(dst).potential < portrait.fixed_point(src).potential;
    Ok(CoverWitness {
        lower: w,
        upper: x,
        root,
        root_name: rs.root_name(root),
        witness: Witness {
            src,
            dst,
            evidence: Evidence::GammaCurve,
            approach: worst_distance,
            final_rhs: worst_rhs,
            spectral_drift: drift,
        },
        potential_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{CartanType, RootSystem};
    use crate::todaflow::TodaSpec;

    fn setup(r: usize) -> (Realization, WeylGroup) {
        let rs = RootSystem::build(CartanType::A, r).unwrap();
        let g = WeylGroup::enumerate(&rs);
        (Realization::realize(&rs).unwrap(), g)
    }

    #[test]
    fn subsystems() {
        let (_, g) = setup(3);
        assert!(subsystem_roots(&g, 0).is_empty());
        let s1 = g.from_word(&[0]).unwrap();
        assert_eq!(subsystem_roots(&g, s1), vec![0]);
        let s1s3 = g.from_word(&[0, 2]).unwrap();
        assert_eq!(subsystem_roots(&g, s1s3), vec![0, 2]);
        let c = g.from_word(&[0, 1]).unwrap();
        assert_eq!(subsystem_roots(&g, c).len(), 3);
        // w0 = s_{a1+a2+a3} s_{a2}
        assert_eq!(subsystem_roots(&g, g.longest()), vec![1, 5]);
    }

    #[test]
    fn masks_follow_roots() {
        let (alg, _) = setup(2);
        let m = support_mask(&alg, &[0]);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[true, true, false, true, true, false, false, false, true],
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn a1_cover_and_shots() {
        let (alg, g) = setup(1);
        let spec = TodaSpec::new(&alg, &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let p = Portrait::new(&alg, &g, spec).unwrap();
        let covers = cover_connections(&p).unwrap();
        assert_eq!(covers.len(), 1);
        assert_eq!((covers[0].witness.src, covers[0].witness.dst), (0, 1));
        assert!(covers[0].potential_monotone);
        let census = generic_shots(&p, 0, 8, 1).unwrap();
        assert_eq!(census.limits.get(&1), Some(&8));
        assert!(matches!(
            generic_shots(&p, 1, 8, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn start_state_is_isospectral() {
        let (alg, g) = setup(2);
        let spec = TodaSpec::default_for(&alg).unwrap();
        let p = Portrait::new(&alg, &g, spec).unwrap();
        let l = start_state(&p, 0, &[0, 1, 2], &[1e-2; 3], &[0.6, 0.0, 0.8]);
        let ev = crate::liealg::sorted_eigenvalues(&l);
        assert!((ev[0] + 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14 && (ev[2] - 1.0).abs() < 1e-14);
        // first-order displacement matches the requested direction
        assert!((l[(0, 1)] - 6e-3).abs() < 1e-4);
        assert!((l[(1, 2)]).abs() < 1e-4);
    }

    #[test]
    fn a2_codimension_one_bisection() {
        let (alg, g) = setup(2);
        let spec = TodaSpec::default_for(&alg).unwrap();
        let p = Portrait::new(&alg, &g, spec).unwrap();
        let e = p.raw(g.identity());
        for v in (0..g.len()).filter(|&x| g.length(x) == 2) {
            let params = SearchParams {
                sweep: Some(Sweep::Forward),
                seed: 7,
                ..Default::default()
            };
            let o = bisection_heteroclinic(&p, e, p.raw(v), &params).unwrap();
            assert_eq!(o.codimension, 1);
            let w = o.witness.expect("connection found");
            assert!(w.approach < APPROACH_TOL, "{}", w.approach);
            assert_eq!(w.evidence, Evidence::Bisection);
        }
    }

    #[test]
    fn isochronous_amplitudes() {
        let (alg, g) = setup(2);
        let spec = TodaSpec::default_for(&alg).unwrap();
        let p = Portrait::new(&alg, &g, spec).unwrap();
        let roots = p.fixed_point(0).unstable_roots.clone();
        let amps = launch_amplitudes(&p, 0, &roots, true);
        // rates 1, 1, 2 for Lambda = diag(1, 0, -1)
        assert_eq!(amps, vec![1e-4, 1e-4, 1e-8]);
        assert_eq!(
            launch_amplitudes(&p, 0, &roots, false),
            vec![SHOT_EPSILON; 3]
        );
    }

    #[test]
    fn task_seeds_differ() {
        assert_ne!(task_seed(1, &[1, 2]), task_seed(1, &[2, 1]));
        assert_eq!(task_seed(9, &[3]), task_seed(9, &[3]));
    }
}
