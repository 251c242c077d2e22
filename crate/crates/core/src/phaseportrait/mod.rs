//! Fixed points of the Toda flow, their stability data, heteroclinic
//! connection search and the connectivity graph compared against Bruhat
//! orders.
//!
//! Fixed points are indexed by Weyl group ids ("raw" ids): the fixed point of
//! `w` is `Lambda_w = Ad_w(Lambda)`. A [`Labeling`] renames them so that the
//! flow source is the identity; edges and comparisons use labels.

mod graph;
mod shooting;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{KElement, Realization};
use crate::rootsys::WeylGroup;
use crate::todaflow::{check_regular, lax_field, morse_potential, TodaSpec, Trajectory};

pub use graph::{
    compare, connectivity_graph, Budget, CensusEntry, Comparison, ConnectivityGraph,
    ConnectivityReport, Edge, EdgeResiduals, FixedPointEntry, NegativeControl, RelationDetail,
    RelationMatch, SearchEntry, ShiftCheck, Violation, ViolationKind,
};
pub use shooting::{
    bisection_heteroclinic, closest_approach_census, cover_connections, generic_shots,
    subsystem_roots, ApproachProbe, Census, CoverWitness, Evidence, SearchOutcome, SearchParams,
    Shot, Witness,
};

pub const GAMMA_OFFSET: f64 = 1e-4;
pub const SHOT_EPSILON: f64 = 1e-4;
pub const APPROACH_TOL: f64 = 1e-5;
pub const NEGATIVE_CONTROL_FLOOR: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    /// Raw Weyl id.
    pub w: usize,
    pub lambda_w: DMatrix<f64>,
    /// Positive roots with `alpha(Lambda_w) > 0`.
    pub unstable_roots: Vec<usize>,
    pub unstable_dim: usize,
    pub stable_dim: usize,
    pub potential: f64,
}

/// One fixed point per Weyl element, with sign data of `alpha(Lambda_w)`.
pub fn fixed_points(
    alg: &Realization,
    group: &WeylGroup,
    spec: &TodaSpec,
) -> Result<Vec<FixedPoint>> {
    check_regular(alg, &spec.lambda)?;
    let rs = alg.root_system();
    let p = rs.n_positive();
    (0..group.len())
        .map(|w| {
            let rep = alg.weyl_representative(group, w)?;
            let lambda_w = DMatrix::from_diagonal(&rep.adjoint(&spec.lambda).diagonal());
            let unstable_roots: Vec<usize> = rs
                .positive_roots()
                .filter(|&a| alg.root_value(a, &lambda_w) > 0.0)
                .collect();
            let unstable_dim = unstable_roots.len();
            Ok(FixedPoint {
                w,
                potential: morse_potential(alg, spec, &rep),
                lambda_w,
                unstable_roots,
                unstable_dim,
                stable_dim: p - unstable_dim,
            })
        })
        .collect()
}

/// Bijection between raw ids and labels with the flow source at the
/// identity: `label(w) = w * source^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    /// Raw id of the fixed point with full unstable dimension.
    pub source: usize,
    /// Raw id to label.
    pub label: Vec<usize>,
    /// Label to raw id.
    pub raw: Vec<usize>,
}

impl Labeling {
    pub fn label(&self, raw: usize) -> usize {
        self.label[raw]
    }

    pub fn raw(&self, label: usize) -> usize {
        self.raw[label]
    }
}

/// Puts the source at the identity and checks that every fixed point's
/// stable dimension equals the length of its label. Fails if the source is
/// not unique or any dimension disagrees.
pub fn label_by_length(group: &WeylGroup, fps: &[FixedPoint]) -> Result<Labeling> {
    let p = group.root_system().n_positive();
    let sources: Vec<usize> = fps
        .iter()
        .filter(|f| f.unstable_dim == p)
        .map(|f| f.w)
        .collect();
    let source = match sources.as_slice() {
        [s] => *s,
        _ => {
            return Err(Error::Labeling(format!(
                "expected one source, found {}",
                sources.len()
            )))
        }
    };
    let sinv = group.inverse(source);
    let label: Vec<usize> = (0..group.len()).map(|w| group.multiply(w, sinv)).collect();
    let mut raw = vec![0; group.len()];
    for (w, &l) in label.iter().enumerate() {
        raw[l] = w;
    }
    for fp in fps {
        let len = group.length(label[fp.w]);
        if fp.stable_dim != len {
            return Err(Error::Labeling(format!(
                "fixed point {} has stable dimension {} but its label has length {len}",
                fp.w, fp.stable_dim
            )));
        }
    }
    Ok(Labeling { source, label, raw })
}

/// The fixed point within `spec.fixed_point_radius` of `l` when the field there is
/// below the stall threshold.
pub fn classify_state(
    l: &DMatrix<f64>,
    fps: &[FixedPoint],
    spec: &TodaSpec,
) -> Result<Option<usize>> {
    if lax_field(l).norm() >= spec.stall_threshold {
        return Ok(None);
    }
    let mut hit: Option<usize> = None;
    for fp in fps {
        if (l - &fp.lambda_w).norm() < spec.fixed_point_radius {
            if let Some(prev) = hit {
                return Err(Error::AmbiguousLimit(prev, fp.w));
            }
            hit = Some(fp.w);
        }
    }
    Ok(hit)
}

/// Limit at the end where integration stopped (`t -> +inf` for forward
/// runs, `t -> -inf` for backward ones).
pub fn classify_limit(
    traj: &Trajectory,
    fps: &[FixedPoint],
    spec: &TodaSpec,
) -> Result<Option<usize>> {
    classify_state(&traj.end().state, fps, spec)
}

/// Everything the searches need about one choice of `Lambda`.
#[derive(Clone, Debug)]
pub struct Portrait<'a> {
    pub alg: &'a Realization,
    pub group: &'a WeylGroup,
    pub spec: TodaSpec,
    pub fixed: Vec<FixedPoint>,
    pub labeling: Labeling,
    reps: Vec<KElement>,
}

impl<'a> Portrait<'a> {
    pub fn new(alg: &'a Realization, group: &'a WeylGroup, spec: TodaSpec) -> Result<Self> {
        let fixed = fixed_points(alg, group, &spec)?;
        let labeling = label_by_length(group, &fixed)?;
        let reps = (0..group.len())
            .map(|w| alg.weyl_representative(group, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Portrait {
            alg,
            group,
            spec,
            fixed,
            labeling,
            reps,
        })
    }

    /// The same system with `Lambda` replaced by `Ad_w(Lambda)`.
    pub fn shifted(&self, w: usize) -> Result<Portrait<'a>> {
        Portrait::new(
            self.alg,
            self.group,
            self.spec.shifted(self.alg, self.group, w)?,
        )
    }

    pub fn fixed_point(&self, w: usize) -> &FixedPoint {
        &self.fixed[w]
    }

    pub fn representative(&self, w: usize) -> &KElement {
        &self.reps[w]
    }

    pub fn classify(&self, l: &DMatrix<f64>) -> Result<Option<usize>> {
        classify_state(l, &self.fixed, &self.spec)
    }

    pub fn label(&self, raw: usize) -> usize {
        self.labeling.label(raw)
    }

    pub fn raw(&self, label: usize) -> usize {
        self.labeling.raw(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{CartanType, RootSystem};
    use crate::todaflow::integrate_lax;

    fn setup(r: usize) -> (Realization, WeylGroup) {
        let rs = RootSystem::build(CartanType::A, r).unwrap();
        let g = WeylGroup::enumerate(&rs);
        (Realization::realize(&rs).unwrap(), g)
    }

    #[test]
    fn a1_fixed_points() {
        let (alg, g) = setup(1);
        let spec = TodaSpec::new(&alg, &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let fps = fixed_points(&alg, &g, &spec).unwrap();
        assert_eq!(fps.len(), 2);
        assert_eq!(fps[0].unstable_dim, 1);
        assert_eq!(fps[1].unstable_dim, 0);
        assert_eq!(
            fps[1].lambda_w,
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, 1.0])
        );
        let lab = label_by_length(&g, &fps).unwrap();
        assert_eq!(lab.source, 0);
        assert_eq!(lab.label, vec![0, 1]);
    }

    #[test]
    fn a2_dimensions_and_sink() {
        let (alg, g) = setup(2);
        let spec = TodaSpec::default_for(&alg).unwrap();
        let fps = fixed_points(&alg, &g, &spec).unwrap();
        let mut dims: Vec<usize> = fps.iter().map(|f| f.unstable_dim).collect();
        dims.sort();
        assert_eq!(dims, vec![0, 1, 1, 2, 2, 3]);
        let sink = fps.iter().find(|f| f.unstable_dim == 0).unwrap();
        let min = fps
            .iter()
            .min_by(|a, b| a.potential.total_cmp(&b.potential))
            .unwrap();
        assert_eq!(sink.w, min.w);
        for f in &fps {
            assert_eq!(
                crate::liealg::sorted_eigenvalues(&f.lambda_w),
                crate::liealg::sorted_eigenvalues(&spec.lambda)
            );
        }
        label_by_length(&g, &fps).unwrap();
    }

    #[test]
    fn labeling_follows_shift() {
        let (alg, g) = setup(2);
        let spec = TodaSpec::default_for(&alg).unwrap();
        let w = g.from_word(&[0, 1]).unwrap();
        let shifted = spec.shifted(&alg, &g, w).unwrap();
        let fps = fixed_points(&alg, &g, &shifted).unwrap();
        let lab = label_by_length(&g, &fps).unwrap();
        assert_eq!(lab.source, g.inverse(w));
        for x in 0..g.len() {
            assert_eq!(lab.label(x), g.multiply(x, w));
        }
    }

    #[test]
    fn labeling_rejects_inconsistent_dimensions() {
        let (alg, g) = setup(2);
        let spec = TodaSpec::default_for(&alg).unwrap();
        let mut fps = fixed_points(&alg, &g, &spec).unwrap();
        fps[1].stable_dim += 1;
        assert!(matches!(label_by_length(&g, &fps), Err(Error::Labeling(_))));
    }

    #[test]
    fn classify_examples() {
        let (alg, g) = setup(1);
        let spec = TodaSpec::new(&alg, &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let fps = fixed_points(&alg, &g, &spec).unwrap();
        let c = integrate_lax(&alg, &spec, &spec.lambda).unwrap();
        assert_eq!(classify_limit(&c, &fps, &spec).unwrap(), Some(0));
        let l0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = integrate_lax(&alg, &spec, &l0).unwrap();
        assert_eq!(classify_limit(&t, &fps, &spec).unwrap(), Some(1));
        let short = integrate_lax(&alg, &spec.clone().with_t_max(1.0), &l0).unwrap();
        assert_eq!(classify_limit(&short, &fps, &spec).unwrap(), None);
    }

    #[test]
    fn non_regular_lambda_is_rejected() {
        let (alg, g) = setup(2);
        let mut spec = TodaSpec::default_for(&alg).unwrap();
        spec.lambda = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, -2.0]);
        match fixed_points(&alg, &g, &spec) {
            Err(Error::NotRegular { roots, .. }) => assert_eq!(roots, vec!["a1".to_string()]),
            other => panic!("{other:?}"),
        }
    }
}
