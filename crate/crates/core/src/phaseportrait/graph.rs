//! Connectivity graph assembly and comparison with Bruhat orders.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::shooting::{task_seed, Evidence, Witness};
use super::{
    bisection_heteroclinic, closest_approach_census, cover_connections, generic_shots, Portrait,
    SearchParams, NEGATIVE_CONTROL_FLOOR,
};
use crate::error::Result;
use crate::rootsys::{BruhatPoset, OrderKind, WeylGroup};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Forward shots launched from every fixed point with unstable directions.
    pub generic_samples: usize,
    pub search: SearchParams,
    /// Non-cover comparable pairs searched per length difference; `None`
    /// searches all of them.
    pub pairs_per_length_difference: Option<usize>,
    /// Incomparable pairs probed as negative controls; `None` probes all.
    pub negative_control_pairs: Option<usize>,
    pub negative_control_samples: usize,
    /// Search each pair `(u, v)` as `(e, v u^{-1})` in the system shifted by `u`.
    pub use_shift: bool,
    /// Rerun the pipeline with `Lambda` replaced by `Ad_w(Lambda)` for one
    /// seeded nontrivial `w` and compare the graphs.
    pub shift_check: bool,
    pub seed: u64,
}

impl Budget {
    /// Exhaustive at rank up to 2, sampled above.
    pub fn for_rank(rank: usize, seed: u64) -> Self {
        let sampled = rank > 2;
        Budget {
            generic_samples: 32,
            search: SearchParams {
                seed,
                ..SearchParams::default()
            },
            pairs_per_length_difference: sampled.then_some(10),
            negative_control_pairs: sampled.then_some(10),
            negative_control_samples: 16,
            use_shift: true,
            shift_check: true,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeResiduals {
    pub final_rhs: f64,
    pub spectral_drift: f64,
}

/// Edge between labels; `src` is the `t -> -inf` limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub evidence: Evidence,
    /// Closest approach to the target fixed point, or the distance to the
    /// limit at the end of integration. Absent for transitive edges.
    pub approach: Option<f64>,
    pub residuals: Option<EdgeResiduals>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    pub nodes: Vec<usize>,
    /// Direct witnesses first, then transitive closure edges, each sorted by
    /// `(src, dst)`.
    pub edges: Vec<Edge>,
}

impl ConnectivityGraph {
    pub fn direct_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges
            .iter()
            .filter(|e| e.evidence != Evidence::Transitive)
    }

    pub fn reaches(&self, a: usize, b: usize) -> bool {
        self.edges.iter().any(|e| e.src == a && e.dst == b)
    }

    pub fn strict_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.src, e.dst)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationMatch {
    Match,
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationDetail {
    pub kind: OrderKind,
    pub order_pairs: usize,
    /// Pairs reached by the flow but not related in the order.
    pub flow_only: Vec<[usize; 2]>,
    /// Pairs related in the order but not reached by the flow.
    pub order_only: Vec<[usize; 2]>,
    /// Order is contained in reachability (strictly when not equal).
    pub order_is_subrelation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub strong: RelationMatch,
    pub weak_left: RelationMatch,
    pub weak_right: RelationMatch,
    /// Strong-order pairs with no direct (non-transitive) witness.
    pub missing_witnesses: Vec<[usize; 2]>,
    pub flow_pairs: usize,
    pub details: Vec<RelationDetail>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointEntry {
    /// Label (Weyl element id after putting the source at the identity).
    pub w: usize,
    /// Weyl id whose representative carries this fixed point.
    pub raw: usize,
    /// Reduced word of the label, 1-based.
    pub word: Vec<usize>,
    pub length: usize,
    pub unstable_dim: usize,
    pub stable_dim: usize,
    pub potential_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub src: usize,
    pub samples: usize,
    /// Label of each limit reached, with counts.
    pub limits: BTreeMap<usize, usize>,
    pub unclassified: usize,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub src: usize,
    pub dst: usize,
    pub length_difference: usize,
    pub subsystem: Vec<String>,
    pub sweep: crate::todaflow::Sweep,
    pub codimension: usize,
    pub shifted: bool,
    pub found: bool,
    pub evidence: Option<Evidence>,
    pub best_approach: f64,
    pub rhs_at_best: f64,
    pub shots: usize,
    pub bisection_steps: usize,
    pub descent_steps: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub u: usize,
    pub v: usize,
    pub min_approach: f64,
    pub shots: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    IncomparableEdge,
    ReversedEdge,
    PotentialNotMonotone,
    Cycle,
    InvalidCensus,
    ShiftCovariance,
}

/// Outcome of rerunning the pipeline on the shifted system. Raw id `x` of the
/// shifted system is the fixed point `x w` of the original one, so the two
/// graphs should agree after that relabeling, which is the identity on
/// labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    /// Raw id of the shift.
    pub w: usize,
    /// Reduced word of the shift, 1-based.
    pub word: Vec<usize>,
    /// Source of the shifted system is `w^{-1}` times the original source.
    pub source_moved: bool,
    pub pairs: usize,
    /// Strict reachability pairs present in only one of the two runs.
    pub differences: Vec<[usize; 2]>,
    pub isomorphic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub algebra: String,
    #[serde(rename = "Lambda")]
    pub lambda: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    pub seed: u64,
    /// Resolved run configuration, filled in by callers that have one.
    pub config: Option<serde_json::Value>,
    pub budget: Budget,
    /// Weyl id of the flow source before relabeling.
    pub source_raw: usize,
    pub fixed_points: Vec<FixedPointEntry>,
    pub edges: Vec<Edge>,
    pub comparison: Comparison,
    pub census: Vec<CensusEntry>,
    pub searches: Vec<SearchEntry>,
    pub negative_controls: Vec<NegativeControl>,
    pub shift_check: Option<ShiftCheck>,
    pub acyclic: bool,
    pub violations: Vec<Violation>,
}

impl ConnectivityReport {
    pub fn graph(&self) -> ConnectivityGraph {
        ConnectivityGraph {
            nodes: self.fixed_points.iter().map(|f| f.w).collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn has_violation(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

fn evidence_rank(e: Evidence) -> u8 {
    match e {
        Evidence::GammaCurve => 0,
        Evidence::GenericShot => 1,
        Evidence::Bisection => 2,
        Evidence::Transitive => 3,
    }
}

struct Collector<'p, 'a> {
    portrait: &'p Portrait<'a>,
    strong: &'p BruhatPoset,
    direct: BTreeMap<(usize, usize), Edge>,
    violations: Vec<Violation>,
    seen_bad: BTreeSet<(usize, usize)>,
}

impl Collector<'_, '_> {
    /// Records a witness given in raw ids of the collector's portrait.
    fn add(&mut self, w: &Witness) {
        let (a, b) = (self.portrait.label(w.src), self.portrait.label(w.dst));
        self.add_labeled(a, b, w);
    }

    fn add_labeled(&mut self, a: usize, b: usize, w: &Witness) {
        if !self.strong.lt(a, b) {
            if self.seen_bad.insert((a, b)) {
                let (kind, what) = if self.strong.lt(b, a) {
                    (ViolationKind::ReversedEdge, "runs against")
                } else {
                    (
                        ViolationKind::IncomparableEdge,
                        "connects elements incomparable in",
                    )
                };
                self.violations.push(Violation {
                    kind,
                    detail: format!("edge {a} -> {b} ({:?}) {what} the strong order", w.evidence),
                });
            }
            return;
        }
        let edge = Edge {
            src: a,
            dst: b,
            evidence: w.evidence,
            approach: Some(w.approach),
            residuals: Some(EdgeResiduals {
                final_rhs: w.final_rhs,
                spectral_drift: w.spectral_drift,
            }),
        };
        let better = |new: &Edge, old: &Edge| {
            let (rn, ro) = (evidence_rank(new.evidence), evidence_rank(old.evidence));
            let approach = |e: &Edge| e.approach.unwrap_or(f64::INFINITY);
            rn < ro || (rn == ro && approach(new) < approach(old))
        };
        match self.direct.get(&(a, b)) {
            Some(old) if !better(&edge, old) => {}
            _ => {
                self.direct.insert((a, b), edge);
            }
        }
    }
}

fn closure(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in pairs {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                let row = reach[k].clone();
                for (r, via) in reach[i].iter_mut().zip(row) {
                    *r |= via;
                }
            }
        }
    }
    reach
}

/// Compares a set of strict pairs with each Bruhat order.
pub fn compare(
    group: &WeylGroup,
    pairs: &BTreeSet<(usize, usize)>,
    direct: &BTreeSet<(usize, usize)>,
) -> Comparison {
    let mut details = Vec::new();
    let mut verdict = HashMap::new();
    for kind in OrderKind::ALL {
        let poset = BruhatPoset::build(group, kind);
        let order: BTreeSet<(usize, usize)> = poset.strict_pairs().into_iter().collect();
        let flow_only: Vec<[usize; 2]> = pairs.difference(&order).map(|&(a, b)| [a, b]).collect();
        let order_only: Vec<[usize; 2]> = order.difference(pairs).map(|&(a, b)| [a, b]).collect();
        let m = if flow_only.is_empty() && order_only.is_empty() {
            RelationMatch::Match
        } else {
            RelationMatch::Mismatch
        };
        verdict.insert(kind, m);
        details.push(RelationDetail {
            kind,
            order_pairs: order.len(),
            order_is_subrelation: order_only.is_empty(),
            flow_only,
            order_only,
        });
    }
    let strong = BruhatPoset::build(group, OrderKind::Strong);
    let missing_witnesses = strong
        .strict_pairs()
        .into_iter()
        .filter(|p| !direct.contains(p))
        .map(|(a, b)| [a, b])
        .collect();
    Comparison {
        strong: verdict[&OrderKind::Strong],
        weak_left: verdict[&OrderKind::WeakLeft],
        weak_right: verdict[&OrderKind::WeakRight],
        missing_witnesses,
        flow_pairs: pairs.len(),
        details,
    }
}

fn sample_pairs(
    pairs: Vec<(usize, usize)>,
    group: &WeylGroup,
    per_diff: Option<usize>,
    seed: u64,
) -> Vec<(usize, usize)> {
    let Some(k) = per_diff else { return pairs };
    let mut by_diff: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (a, b) in pairs {
        by_diff
            .entry(group.length(b) - group.length(a))
            .or_default()
            .push((a, b));
    }
    let mut out = Vec::new();
    for (d, mut list) in by_diff {
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, &[7, d as u64]));
        list.shuffle(&mut rng);
        list.truncate(k);
        list.sort();
        out.extend(list);
    }
    out
}

/// Runs the full pipeline: gamma-curve covers, generic shots from every
/// fixed point, searches for non-cover comparable pairs, negative controls
/// on incomparable pairs, then transitive closure and comparison with the
/// strong and weak orders.
///
/// Falsifying observations (edges between incomparable elements, cycles)
/// are returned as violations; gamma-curve failures and labeling failures
/// are errors.
pub fn connectivity_graph(portrait: &Portrait<'_>, budget: &Budget) -> Result<ConnectivityReport> {
    let group = portrait.group;
    let strong = BruhatPoset::build(group, OrderKind::Strong);
    let mut col = Collector {
        portrait,
        strong: &strong,
        direct: BTreeMap::new(),
        violations: Vec::new(),
        seen_bad: BTreeSet::new(),
    };

    for cover in cover_connections(portrait)? {
        if !cover.potential_monotone {
            col.violations.push(Violation {
                kind: ViolationKind::PotentialNotMonotone,
                detail: format!(
                    "potential does not drop along the curve {} -> {}",
                    portrait.label(cover.witness.src),
                    portrait.label(cover.witness.dst)
                ),
            });
        }
        col.add(&cover.witness);
    }

    let mut census = Vec::new();
    for fp in &portrait.fixed {
        if fp.unstable_dim == 0 {
            continue;
        }
        let c = generic_shots(portrait, fp.w, budget.generic_samples, budget.seed)?;
        for w in &c.witnesses {
            col.add(w);
        }
        if !c.valid {
            col.violations.push(Violation {
                kind: ViolationKind::InvalidCensus,
                detail: format!(
                    "{} of {} shots from {} unclassified",
                    c.unclassified,
                    c.samples,
                    portrait.label(fp.w)
                ),
            });
        }
        census.push(CensusEntry {
            src: portrait.label(c.base),
            samples: c.samples,
            limits: c
                .limits
                .iter()
                .map(|(&k, &v)| (portrait.label(k), v))
                .collect(),
            unclassified: c.unclassified,
            valid: c.valid,
        });
    }

    let non_cover: Vec<(usize, usize)> = strong
        .strict_pairs()
        .into_iter()
        .filter(|&(a, b)| !strong.is_cover(a, b))
        .collect();
    let chosen = sample_pairs(
        non_cover,
        group,
        budget.pairs_per_length_difference,
        budget.seed,
    );
    let mut shifted_cache: HashMap<usize, Portrait<'_>> = HashMap::new();
    let mut searches = Vec::new();
    for (a, b) in chosen {
        let (u, v) = (portrait.raw(a), portrait.raw(b));
        let params = SearchParams {
            seed: task_seed(budget.search.seed, &[a as u64, b as u64]),
            ..budget.search.clone()
        };
        let outcome = if budget.use_shift {
            let sp = match shifted_cache.entry(u) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(portrait.shifted(u)?),
            };
            // raw id x of the shifted system is raw id x u of this one
            let back = |x: usize| group.multiply(x, u);
            let sigma = group.multiply(v, group.inverse(u));
            let mut o = bisection_heteroclinic(sp, group.identity(), sigma, &params)?;
            let fix = |w: &mut Witness| {
                w.src = back(w.src);
                w.dst = back(w.dst);
            };
            o.src = u;
            o.dst = v;
            if let Some(w) = o.witness.as_mut() {
                fix(w);
            }
            o.observed.iter_mut().for_each(fix);
            o
        } else {
            bisection_heteroclinic(portrait, u, v, &params)?
        };
        for w in &outcome.observed {
            col.add(w);
        }
        if let Some(w) = &outcome.witness {
            col.add(w);
        }
        let rs = portrait.alg.root_system();
        searches.push(SearchEntry {
            src: a,
            dst: b,
            length_difference: group.length(b) - group.length(a),
            subsystem: outcome.subsystem.iter().map(|&r| rs.root_name(r)).collect(),
            sweep: outcome.sweep,
            codimension: outcome.codimension,
            shifted: budget.use_shift,
            found: outcome.witness.is_some(),
            evidence: outcome.witness.as_ref().map(|w| w.evidence),
            best_approach: outcome
                .witness
                .as_ref()
                .map(|w| w.approach)
                .unwrap_or(outcome.best_approach),
            rhs_at_best: outcome.rhs_at_best,
            shots: outcome.shots,
            bisection_steps: outcome.bisection_steps,
            descent_steps: outcome.descent_steps,
            note: outcome.note.clone(),
        });
    }

    let mut incomparable = Vec::new();
    for a in 0..group.len() {
        for b in 0..group.len() {
            if a != b && !strong.comparable(a, b) {
                incomparable.push((a, b));
            }
        }
    }
    let probes = sample_pairs_flat(incomparable, budget.negative_control_pairs, budget.seed);
    let mut negative_controls = Vec::new();
    for (a, b) in probes {
        let probe = closest_approach_census(
            portrait,
            portrait.raw(a),
            portrait.raw(b),
            budget.negative_control_samples,
            task_seed(budget.seed, &[11, a as u64, b as u64]),
        )?;
        for w in &probe.observed {
            col.add(w);
        }
        negative_controls.push(NegativeControl {
            u: a,
            v: b,
            min_approach: probe.min_approach,
            shots: probe.shots,
            passed: probe.min_approach > NEGATIVE_CONTROL_FLOOR,
        });
    }

    let n = group.len();
    let direct_pairs: BTreeSet<(usize, usize)> = col.direct.keys().copied().collect();
    let reach = closure(n, col.direct.keys().copied());
    let acyclic = (0..n).all(|i| !reach[i][i]);
    if !acyclic {
        col.violations.push(Violation {
            kind: ViolationKind::Cycle,
            detail: "reachability has a cycle".into(),
        });
    }
    let mut pairs = BTreeSet::new();
    for (i, row) in reach.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r && i != j {
                pairs.insert((i, j));
            }
        }
    }
    let mut edges: Vec<Edge> = col.direct.values().cloned().collect();
    for &(a, b) in &pairs {
        if !col.direct.contains_key(&(a, b)) {
            edges.push(Edge {
                src: a,
                dst: b,
                evidence: Evidence::Transitive,
                approach: None,
                residuals: None,
            });
        }
    }
    let comparison = compare(group, &pairs, &direct_pairs);

    let shift_check = if budget.shift_check && n > 1 {
        let others: Vec<usize> = (0..n).filter(|&x| x != group.identity()).collect();
        let w = others[(task_seed(budget.seed, &[17]) % others.len() as u64) as usize];
        let check = shift_covariance(portrait, budget, w, &pairs)?;
        if !check.isomorphic {
            col.violations.push(Violation {
                kind: ViolationKind::ShiftCovariance,
                detail: format!(
                    "shift by {:?} changes {} reachability pairs",
                    check.word,
                    check.differences.len()
                ),
            });
        }
        Some(check)
    } else {
        None
    };

    let fixed_points = (0..n)
        .map(|label| {
            let fp = portrait.fixed_point(portrait.raw(label));
            FixedPointEntry {
                w: label,
                raw: fp.w,
                word: group.element(label).word.iter().map(|i| i + 1).collect(),
                length: group.length(label),
                unstable_dim: fp.unstable_dim,
                stable_dim: fp.stable_dim,
                potential_value: fp.potential,
            }
        })
        .collect();

    Ok(ConnectivityReport {
        algebra: portrait.alg.root_system().label().to_string(),
        lambda: portrait.spec.lambda_diagonal(),
        n: portrait.spec.n_diagonal(),
        seed: budget.seed,
        config: None,
        budget: budget.clone(),
        source_raw: portrait.labeling.source,
        fixed_points,
        edges,
        comparison,
        census,
        searches,
        negative_controls,
        shift_check,
        acyclic,
        violations: col.violations,
    })
}

/// Runs the pipeline on `Ad_w(Lambda)` and compares its reachability with
/// `pairs` (labels of the original run).
fn shift_covariance(
    portrait: &Portrait<'_>,
    budget: &Budget,
    w: usize,
    pairs: &BTreeSet<(usize, usize)>,
) -> Result<ShiftCheck> {
    let group = portrait.group;
    let shifted = portrait.shifted(w)?;
    let inner = Budget {
        shift_check: false,
        ..budget.clone()
    };
    let report = connectivity_graph(&shifted, &inner)?;
    let other = report.graph().strict_pairs();
    let differences: Vec<[usize; 2]> = pairs
        .symmetric_difference(&other)
        .map(|&(a, b)| [a, b])
        .collect();
    let source_moved =
        shifted.labeling.source == group.multiply(group.inverse(w), portrait.labeling.source);
    Ok(ShiftCheck {
        w,
        word: group.element(w).word.iter().map(|i| i + 1).collect(),
        source_moved,
        pairs: pairs.len(),
        isomorphic: differences.is_empty() && source_moved,
        differences,
    })
}

fn sample_pairs_flat(
    mut pairs: Vec<(usize, usize)>,
    k: Option<usize>,
    seed: u64,
) -> Vec<(usize, usize)> {
    if let Some(k) = k {
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, &[13]));
        pairs.shuffle(&mut rng);
        pairs.truncate(k);
        pairs.sort();
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::Realization;
    use crate::rootsys::{CartanType, RootSystem};
    use crate::todaflow::TodaSpec;

    #[test]
    fn closure_is_transitive() {
        let r = closure(4, [(0, 1), (1, 2), (2, 3)].into_iter());
        assert!(r[0][3] && r[1][3] && !r[3][0] && !r[0][0]);
    }

    #[test]
    fn comparison_of_exact_orders() {
        let rs = RootSystem::build(CartanType::A, 2).unwrap();
        let g = WeylGroup::enumerate(&rs);
        let strong: BTreeSet<_> = BruhatPoset::build(&g, OrderKind::Strong)
            .strict_pairs()
            .into_iter()
            .collect();
        let c = compare(&g, &strong, &strong);
        assert_eq!(c.strong, RelationMatch::Match);
        assert_eq!(c.weak_left, RelationMatch::Mismatch);
        assert!(c.details[1].order_is_subrelation);
        assert!(c.missing_witnesses.is_empty());
    }

    #[test]
    fn a1_single_edge() {
        let rs = RootSystem::build(CartanType::A, 1).unwrap();
        let g = WeylGroup::enumerate(&rs);
        let alg = Realization::realize(&rs).unwrap();
        let spec = TodaSpec::default_for(&alg).unwrap();
        let p = Portrait::new(&alg, &g, spec).unwrap();
        let report = connectivity_graph(&p, &Budget::for_rank(1, 5)).unwrap();
        assert_eq!(report.edges.len(), 1);
        assert_eq!((report.edges[0].src, report.edges[0].dst), (0, 1));
        assert_eq!(report.edges[0].evidence, Evidence::GammaCurve);
        assert_eq!(report.comparison.strong, RelationMatch::Match);
        assert!(report.violations.is_empty());
    }
}
