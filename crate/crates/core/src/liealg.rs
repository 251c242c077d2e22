//! Matrix realizations of split real forms.
//!
//! Realizations are fixed per type: `sl(r+1, R)` for type A and the split
//! `so(3, 2)` (preserving the antidiagonal form) for B2. In both, the Cartan
//! subalgebra is diagonal, positive root vectors are strictly upper
//! triangular, and `e_{-alpha} = e_alpha^T`, so the Cartan involution is
//! `theta(X) = -X^T`, `k` is the antisymmetric part and `p` the symmetric part.
//!
//! Root vectors are normalized so that `(e_alpha, e_{-alpha}, [e_alpha, e_{-alpha}])`
//! is an sl2-triple; then `exp((pi/2)(e_alpha - e_{-alpha}))` represents the
//! reflection in `alpha` for every root length.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rootsys::{CartanType, RootSystem, WeylGroup};

/// Relative tolerance for algebra membership.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Orthogonality tolerance for elements of K.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// `exp(t X)`.
pub fn exp_matrix(x: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (x * t).exp()
}

/// Frobenius norm of the off-diagonal part.
pub fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Symmetric eigenvalues in ascending order.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// An element of the maximal compact subgroup: orthogonal with determinant 1.
#[derive(Clone, Debug, PartialEq)]
pub struct KElement(DMatrix<f64>);

impl KElement {
    pub fn new(psi: DMatrix<f64>) -> Result<Self> {
        let (residual, det) = orthogonality(&psi);
        if residual > ORTHOGONALITY_TOL || det <= 0.0 {
            return Err(Error::NotInK { residual, det });
        }
        Ok(KElement(psi))
    }

    pub(crate) fn new_unchecked(psi: DMatrix<f64>) -> Self {
        KElement(psi)
    }

    pub fn identity(n: usize) -> Self {
        KElement(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `Ad_psi(X) = psi X psi^{-1}`
    pub fn adjoint(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.0 * x * self.0.transpose()
    }

    pub fn compose(&self, other: &KElement) -> KElement {
        KElement(&self.0 * &other.0)
    }

    pub fn orthogonality_residual(&self) -> f64 {
        orthogonality(&self.0).0
    }
}

/// `(||psi^T psi - I||_F, det psi)`
pub fn orthogonality(psi: &DMatrix<f64>) -> (f64, f64) {
    let n = psi.nrows();
    if n != psi.ncols() {
        return (f64::INFINITY, 0.0);
    }
    let residual = (psi.transpose() * psi - DMatrix::<f64>::identity(n, n)).norm();
    (residual, psi.determinant())
}

/// Nearest orthogonal matrix (polar factor), with the size of the correction.
pub fn polar_retract(psi: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let svd = psi.clone().svd(true, true);
    let q = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
    let correction = (&q - psi).norm();
    (q, correction)
}

#[derive(Clone, Debug)]
pub struct Realization {
    rs: RootSystem,
    n: usize,
    /// Cartan basis `h_1..h_r`, then `e_alpha` in root order.
    basis: Vec<DMatrix<f64>>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    /// `(i, j)` such that `alpha(H) = H_ii - H_jj` for diagonal `H`.
    root_weight: Vec<(usize, usize)>,
    killing_scale: f64,
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

fn type_a(rs: &RootSystem) -> (usize, Vec<DMatrix<f64>>) {
    let r = rs.rank();
    let n = r + 1;
    let mut basis: Vec<DMatrix<f64>> = (0..r)
        .map(|i| unit(n, i, i) - unit(n, i + 1, i + 1))
        .collect();
    for idx in 0..rs.n_roots() {
        let coords = rs.root(idx);
        let first = coords.iter().position(|&c| c != 0).expect("nonzero root");
        let last = coords.iter().rposition(|&c| c != 0).expect("nonzero root");
        let (i, j) = (first, last + 1);
        basis.push(if rs.is_positive(idx) {
            unit(n, i, j)
        } else {
            unit(n, j, i)
        });
    }
    (n, basis)
}

fn type_b2(rs: &RootSystem) -> Result<(usize, Vec<DMatrix<f64>>)> {
    let n = 5;
    let bar = |k: usize| n - 1 - k;
    // X_ij = E_ij - E_{bar j, bar i} spans the algebra preserving the antidiagonal form
    let x = |i: usize, j: usize| unit(n, i, j) - unit(n, bar(j), bar(i));
    let mut basis = vec![
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0, 1.0, -1.0])),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 0.0, -2.0, 0.0])),
    ];
    for idx in 0..rs.n_roots() {
        let p = rs.positive_part(idx);
        let c = rs.root(p);
        // epsilon coordinates: alpha_1 = e1 - e2, alpha_2 = e2
        let eps = (c[0], c[1] - c[0]);
        let (i, j, scale) = match eps {
            (1, -1) => (0, 1, 1.0),
            (1, 1) => (0, 3, 1.0),
            (1, 0) => (0, 2, std::f64::consts::SQRT_2),
            (0, 1) => (1, 2, std::f64::consts::SQRT_2),
            _ => return Err(Error::Consistency(format!("unexpected B2 root {c:?}"))),
        };
        let e = x(i, j) * scale;
        basis.push(if rs.is_positive(idx) {
            e
        } else {
            e.transpose()
        });
    }
    Ok((n, basis))
}

impl Realization {
    pub fn realize(rs: &RootSystem) -> Result<Self> {
        let (n, basis) = match (rs.cartan_type(), rs.rank()) {
            (CartanType::A, _) => type_a(rs),
            (CartanType::B, 2) => type_b2(rs)?,
            (t, r) => {
                return Err(Error::UnsupportedAlgebra {
                    letter: t.letter(),
                    rank: r,
                })
            }
        };
        let dim = basis.len();
        let gram = DMatrix::from_fn(dim, dim, |a, b| trace_product(&basis[a], &basis[b]));
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Consistency("trace form is degenerate".into()))?;
        let r = rs.rank();
        let root_weight = (0..rs.n_roots())
            .map(|idx| {
                let e = &basis[r + idx];
                let mut pos = (0, 0);
                'outer: for i in 0..n {
                    for j in 0..n {
                        if e[(i, j)] != 0.0 {
                            pos = (i, j);
                            break 'outer;
                        }
                    }
                }
                pos
            })
            .collect();
        let mut alg = Realization {
            rs: rs.clone(),
            n,
            basis,
            gram,
            gram_inv,
            root_weight,
            killing_scale: 0.0,
        };
        let h1 = alg.basis[0].clone();
        alg.killing_scale = alg.killing_form(&h1, &h1)? / trace_product(&h1, &h1);
        alg.check_structure()?;
        Ok(alg)
    }

    fn check_structure(&self) -> Result<()> {
        let r = self.rs.rank();
        for idx in 0..self.rs.n_roots() {
            let e = self.root_vector(idx);
            for i in 0..r {
                let lhs = commutator(&self.basis[i], e);
                let expected = e * f64::from(self.rs.pairing(idx, i));
                if (lhs - expected).norm() > 1e-12 {
                    return Err(Error::Consistency(format!(
                        "[h_{}, e_{}] is not the root value times e",
                        i + 1,
                        self.rs.root_name(idx)
                    )));
                }
            }
            if self.rs.is_positive(idx) {
                let upper = (0..self.n).all(|i| (0..=i).all(|j| e[(i, j)] == 0.0));
                if !upper || e.transpose() != *self.root_vector(self.rs.negate(idx)) {
                    return Err(Error::Consistency(format!(
                        "root vector for {} breaks the triangular/transpose convention",
                        self.rs.root_name(idx)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn root_system(&self) -> &RootSystem {
        &self.rs
    }

    /// Matrix size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn cartan_basis(&self) -> &[DMatrix<f64>] {
        &self.basis[..self.rs.rank()]
    }

    pub fn root_vector(&self, root: usize) -> &DMatrix<f64> {
        &self.basis[self.rs.rank() + root]
    }

    /// Basis slot of a root vector in expansions.
    pub fn root_slot(&self, root: usize) -> usize {
        self.rs.rank() + root
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `e_alpha - e_{-alpha}` (in k).
    pub fn k_generator(&self, root: usize) -> DMatrix<f64> {
        let neg = self.rs.negate(root);
        self.root_vector(root) - self.root_vector(neg)
    }

    /// `e_alpha + e_{-alpha}` (in p).
    pub fn p_generator(&self, root: usize) -> DMatrix<f64> {
        let neg = self.rs.negate(root);
        self.root_vector(root) + self.root_vector(neg)
    }

    /// Positive ratio between the Killing form and the trace form.
    pub fn killing_scale(&self) -> f64 {
        self.killing_scale
    }

    /// Coefficients of `x` in the basis, via the inverse Gram matrix.
    pub fn expand(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::NotInAlgebra {
                residual: f64::INFINITY,
            });
        }
        let pairings =
            DVector::from_iterator(self.dim(), self.basis.iter().map(|b| trace_product(x, b)));
        let coeffs = &self.gram_inv * pairings;
        let residual = (self.combine(&coeffs) - x).norm();
        // written so that NaN fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(residual <= MEMBERSHIP_TOL * x.norm().max(1.0)) {
            return Err(Error::NotInAlgebra { residual });
        }
        Ok(coeffs)
    }

    pub fn combine(&self, coeffs: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            if *c != 0.0 {
                out += b * *c;
            }
        }
        out
    }

    pub fn contains(&self, x: &DMatrix<f64>) -> bool {
        self.expand(x).is_ok()
    }

    /// `(k_part, p_part)` with `x = k_part + p_part`.
    pub fn cartan_split(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.expand(x)?;
        let xt = x.transpose();
        Ok(((x - &xt) * 0.5, (x + &xt) * 0.5))
    }

    /// Checks that `l` is symmetric and lies in the algebra.
    pub fn check_p(&self, l: &DMatrix<f64>) -> Result<DVector<f64>> {
        let coeffs = self.expand(l).map_err(|e| Error::NotInP {
            reason: e.to_string(),
        })?;
        let asym = (l - l.transpose()).norm();
        if asym > MEMBERSHIP_TOL * l.norm().max(1.0) {
            return Err(Error::NotInP {
                reason: format!("antisymmetric part of norm {asym:.3e}"),
            });
        }
        Ok(coeffs)
    }

    /// A Cartan element from its diagonal.
    pub fn cartan_element(&self, diagonal: &[f64]) -> Result<DMatrix<f64>> {
        if diagonal.len() != self.n {
            return Err(Error::NotCartan {
                residual: f64::INFINITY,
            });
        }
        let h = DMatrix::from_diagonal(&DVector::from_column_slice(diagonal));
        let coeffs = self.expand(&h).map_err(|e| match e {
            Error::NotInAlgebra { residual } => Error::NotCartan { residual },
            other => other,
        })?;
        let r = self.rs.rank();
        let stray: f64 = coeffs.iter().skip(r).map(|c| c * c).sum::<f64>().sqrt();
        if stray > MEMBERSHIP_TOL {
            return Err(Error::NotCartan { residual: stray });
        }
        Ok(h)
    }

    /// Coordinates of a diagonal Cartan element in the coroot basis `h_i`.
    pub fn cartan_coords(&self, h: &DMatrix<f64>) -> Result<Vec<f64>> {
        let coeffs = self.expand(h)?;
        Ok(coeffs.iter().take(self.rs.rank()).copied().collect())
    }

    /// `alpha(H)` for a diagonal Cartan element.
    pub fn root_value(&self, root: usize, h: &DMatrix<f64>) -> f64 {
        let (i, j) = self.root_weight[root];
        h[(i, i)] - h[(j, j)]
    }

    pub fn trace_form(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        trace_product(x, y)
    }

    /// Matrix of `ad_x` in the basis.
    pub fn ad_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        let mut ad = DMatrix::zeros(dim, dim);
        for (b, basis) in self.basis.iter().enumerate() {
            let col = self.expand(&commutator(x, basis))?;
            ad.set_column(b, &col);
        }
        Ok(ad)
    }

    /// `Tr(ad_x ad_y)`.
    pub fn killing_form(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        let ax = self.ad_matrix(x)?;
        let ay = self.ad_matrix(y)?;
        Ok((ax * ay).trace())
    }

    /// Product of `exp((pi/2)(e_{alpha_i} - e_{-alpha_i}))` over the reduced word of `w`.
    pub fn weyl_representative(&self, group: &WeylGroup, w: usize) -> Result<KElement> {
        let mut psi = DMatrix::identity(self.n, self.n);
        for &i in &group.element(w).word {
            psi *= exp_matrix(&self.k_generator(self.rs.simple_root(i)), FRAC_PI_2);
        }
        let rep = KElement::new(psi)
            .map_err(|e| Error::Consistency(format!("representative of {w}: {e}")))?;
        let residual = self.representative_residual(group, w, &rep);
        if residual > 1e-10 {
            return Err(Error::Consistency(format!(
                "representative of element {w} acts on the Cartan subalgebra with residual {residual:.3e}"
            )));
        }
        Ok(rep)
    }

    /// How far `Ad_psi` is from acting on the Cartan subalgebra as `w`:
    /// checks that the image of a generic Cartan element is diagonal with
    /// root values `alpha(Ad_psi H) = (w^{-1} alpha)(H)`.
    pub fn representative_residual(&self, group: &WeylGroup, w: usize, psi: &KElement) -> f64 {
        let h = self.generic_cartan();
        let image = psi.adjoint(&h);
        let winv = group.inverse(w);
        let mut residual = off_diagonal_norm(&image);
        for root in 0..self.rs.n_roots() {
            let lhs = self.root_value(root, &image);
            let rhs = self.root_value(group.act(winv, root), &h);
            residual = residual.max((lhs - rhs).abs());
        }
        residual
    }

    fn generic_cartan(&self) -> DMatrix<f64> {
        let coeffs: Vec<f64> = (0..self.rs.rank())
            .map(|i| 1.0 + (i as f64 + 1.0).sqrt() * 0.37)
            .collect();
        let mut h = DMatrix::zeros(self.n, self.n);
        for (c, b) in coeffs.iter().zip(self.cartan_basis()) {
            h += b * *c;
        }
        h
    }

    /// `Ad_w(H)` for a Cartan element, with rounding noise off the diagonal removed.
    pub fn weyl_act_on_cartan(
        &self,
        group: &WeylGroup,
        w: usize,
        h: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let rep = self.weyl_representative(group, w)?;
        let image = rep.adjoint(h);
        Ok(DMatrix::from_diagonal(&image.diagonal()))
    }

    /// A random element of K: `exp(sum_alpha c_alpha (e_alpha - e_{-alpha}))`.
    pub fn k_element_from_coefficients(&self, coeffs: &[f64]) -> KElement {
        let mut x = DMatrix::zeros(self.n, self.n);
        for (root, c) in self.rs.positive_roots().zip(coeffs) {
            x += self.k_generator(root) * *c;
        }
        KElement::new_unchecked(exp_matrix(&x, 1.0))
    }
}

fn trace_product(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    // tr(XY) = sum_ij X_ij Y_ji
    x.component_mul(&y.transpose()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::CartanType;
    use proptest::prelude::*;

    fn alg(t: CartanType, r: usize) -> (Realization, WeylGroup) {
        let rs = RootSystem::build(t, r).unwrap();
        let g = WeylGroup::enumerate(&rs);
        (Realization::realize(&rs).unwrap(), g)
    }

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat())
    }

    #[test]
    fn a1_sl2_triple() {
        let (a, _) = alg(CartanType::A, 1);
        assert_eq!(a.n(), 2);
        assert_eq!(a.cartan_basis()[0], m(&[&[1.0, 0.0], &[0.0, -1.0]]));
        assert_eq!(*a.root_vector(0), m(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(*a.root_vector(1), m(&[&[0.0, 0.0], &[1.0, 0.0]]));
        let br = commutator(&a.cartan_basis()[0], a.root_vector(0));
        assert_eq!(br, a.root_vector(0) * 2.0);
    }

    #[test]
    fn dimensions() {
        assert_eq!(alg(CartanType::A, 2).0.dim(), 8);
        assert_eq!(alg(CartanType::A, 3).0.dim(), 15);
        assert_eq!(alg(CartanType::B, 2).0.dim(), 10);
        let rs = RootSystem::build(CartanType::C, 3).unwrap();
        assert!(matches!(
            Realization::realize(&rs),
            Err(Error::UnsupportedAlgebra { .. })
        ));
    }

    #[test]
    fn cartan_split_cases() {
        let (a, _) = alg(CartanType::A, 1);
        let sym = m(&[&[1.0, 2.0], &[2.0, -1.0]]);
        let (k, p) = a.cartan_split(&sym).unwrap();
        assert_eq!(k, DMatrix::zeros(2, 2));
        assert_eq!(p, sym);
        let anti = m(&[&[0.0, 3.0], &[-3.0, 0.0]]);
        let (k, p) = a.cartan_split(&anti).unwrap();
        assert_eq!((k, p), (anti, DMatrix::zeros(2, 2)));
        let (k, p) = a.cartan_split(a.root_vector(0)).unwrap();
        assert_eq!(k, m(&[&[0.0, 0.5], &[-0.5, 0.0]]));
        assert_eq!(p, m(&[&[0.0, 0.5], &[0.5, 0.0]]));
        // identity is not trace free
        let err = a.cartan_split(&DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NotInAlgebra { residual } if residual > 0.1));
    }

    #[test]
    fn expand_cases() {
        let (a, _) = alg(CartanType::A, 1);
        let c = a.expand(a.root_vector(0)).unwrap();
        assert_eq!(c.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(
            a.expand(&DMatrix::zeros(2, 2)).unwrap().as_slice(),
            &[0.0; 3]
        );
        let x = &a.cartan_basis()[0] + a.root_vector(0) * 2.0;
        let c = a.expand(&x).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 2.0).abs() < 1e-15 && c[2].abs() < 1e-15);
    }

    #[test]
    fn killing_values_a1() {
        let (a, _) = alg(CartanType::A, 1);
        let h = a.cartan_basis()[0].clone();
        assert!((a.killing_form(&h, &h).unwrap() - 8.0).abs() < 1e-12);
        assert!(
            a.killing_form(a.root_vector(0), a.root_vector(0))
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!((a.killing_scale() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn killing_scale_matches_classical_constants() {
        // 2n for sl(n), n - 2 for so(n)
        assert!((alg(CartanType::A, 2).0.killing_scale() - 6.0).abs() < 1e-10);
        assert!((alg(CartanType::A, 3).0.killing_scale() - 8.0).abs() < 1e-10);
        assert!((alg(CartanType::B, 2).0.killing_scale() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn exp_rotation() {
        let x = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let r = exp_matrix(&x, FRAC_PI_2);
        assert!((r - m(&[&[0.0, 1.0], &[-1.0, 0.0]])).norm() < 1e-15);
        assert_eq!(
            exp_matrix(&DMatrix::zeros(3, 3), 2.0),
            DMatrix::identity(3, 3)
        );
        let t = 0.3;
        let r = exp_matrix(&x, t);
        let closed = m(&[&[t.cos(), t.sin()], &[-t.sin(), t.cos()]]);
        assert!((r - closed).norm() < 1e-15);
    }

    #[test]
    fn representatives() {
        let (a, g) = alg(CartanType::A, 1);
        assert_eq!(
            a.weyl_representative(&g, 0).unwrap().matrix(),
            &DMatrix::identity(2, 2)
        );
        let s = a.weyl_representative(&g, 1).unwrap();
        assert!((s.matrix() - m(&[&[0.0, 1.0], &[-1.0, 0.0]])).norm() < 1e-15);

        let (a, g) = alg(CartanType::A, 2);
        let w = g.from_word(&[0, 1]).unwrap();
        let rep = a.weyl_representative(&g, w).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, -2.0]));
        let image = rep.adjoint(&d);
        // s1 s2 moves the entry in slot 3 to slot 1: (d3, d1, d2)
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 3.0, -1.0]));
        assert!((image - expected).norm() < 1e-14);
    }

    #[test]
    fn representatives_b2() {
        let (a, g) = alg(CartanType::B, 2);
        for w in 0..g.len() {
            let rep = a.weyl_representative(&g, w).unwrap();
            assert!(rep.orthogonality_residual() < 1e-13);
        }
    }

    #[test]
    fn representatives_compose_up_to_centralizer() {
        for (t, r) in [(CartanType::A, 3), (CartanType::B, 2)] {
            let (a, g) = alg(t, r);
            for u in 0..g.len() {
                for v in 0..g.len() {
                    let prod = a
                        .weyl_representative(&g, u)
                        .unwrap()
                        .compose(&a.weyl_representative(&g, v).unwrap());
                    assert!(a.representative_residual(&g, g.multiply(u, v), &prod) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn root_vector_brackets() {
        for (t, r) in [(CartanType::A, 3), (CartanType::B, 2)] {
            let (a, _) = alg(t, r);
            let rs = a.root_system();
            for x in 0..rs.n_roots() {
                for y in 0..rs.n_roots() {
                    let br = commutator(a.root_vector(x), a.root_vector(y));
                    let sum: Vec<i32> = rs
                        .root(x)
                        .iter()
                        .zip(rs.root(y))
                        .map(|(p, q)| p + q)
                        .collect();
                    if sum.iter().all(|&c| c == 0) {
                        // lands in the Cartan subalgebra
                        let coeffs = a.expand(&br).unwrap();
                        assert!(coeffs.iter().skip(r).all(|c| c.abs() < 1e-14));
                    } else if let Some(z) = rs.find(&sum) {
                        let e = a.root_vector(z);
                        let c = a.trace_form(&br, &e.transpose()) / a.trace_form(e, &e.transpose());
                        assert!((br - e * c).norm() < 1e-14);
                    } else {
                        assert!(br.norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn theta_compatibility_and_trace_signs() {
        for (t, r) in [(CartanType::A, 3), (CartanType::B, 2)] {
            let (a, _) = alg(t, r);
            let rs = a.root_system();
            for root in rs.positive_roots() {
                assert_eq!(
                    a.root_vector(root).transpose(),
                    *a.root_vector(rs.negate(root))
                );
                let k = a.k_generator(root);
                let p = a.p_generator(root);
                assert!(a.trace_form(&k, &k) < 0.0);
                assert!(a.trace_form(&p, &p) > 0.0);
                assert!(a.cartan_split(&k).unwrap().1.norm() == 0.0);
            }
            for h in a.cartan_basis() {
                assert_eq!(h.transpose(), *h);
                assert!(a.trace_form(h, h) > 0.0);
            }
            assert!(a.gram().clone().try_inverse().is_some());
        }
    }

    #[test]
    fn root_values() {
        let (a, _) = alg(CartanType::A, 2);
        let h = a.cartan_element(&[1.0, 0.0, -1.0]).unwrap();
        let vals: Vec<f64> = (0..6).map(|r| a.root_value(r, &h)).collect();
        assert_eq!(vals, vec![1.0, 1.0, 2.0, -1.0, -1.0, -2.0]);
        assert!(matches!(
            a.cartan_element(&[1.0, 1.0, 1.0]),
            Err(Error::NotCartan { .. })
        ));
        let (b, _) = alg(CartanType::B, 2);
        assert!(b.cartan_element(&[2.0, 1.0, 0.0, -1.0, -2.0]).is_ok());
        assert!(b.cartan_element(&[2.0, 1.0, 0.0, 1.0, -2.0]).is_err());
    }

    #[test]
    fn polar_retraction() {
        let (a, _) = alg(CartanType::A, 2);
        let k = a.k_element_from_coefficients(&[0.3, -0.7, 1.1]);
        let noisy = k.matrix() + DMatrix::from_element(3, 3, 1e-7);
        let (q, corr) = polar_retract(&noisy);
        assert!(orthogonality(&q).0 < 1e-14);
        assert!(corr > 0.0 && corr < 1e-6);
    }

    proptest! {
        #[test]
        fn killing_is_symmetric(cx in prop::collection::vec(-2.0f64..2.0, 8), cy in prop::collection::vec(-2.0f64..2.0, 8)) {
            let (a, _) = alg(CartanType::A, 2);
            let x = a.combine(&DVector::from_vec(cx));
            let y = a.combine(&DVector::from_vec(cy));
            let xy = a.killing_form(&x, &y).unwrap();
            let yx = a.killing_form(&y, &x).unwrap();
            prop_assert!((xy - yx).abs() < 1e-9 * (1.0 + xy.abs()));
            prop_assert!((xy - a.killing_scale() * a.trace_form(&x, &y)).abs() < 1e-9 * (1.0 + xy.abs()));
        }

        #[test]
        fn split_reconstructs(c in prop::collection::vec(-3.0f64..3.0, 10)) {
            let (a, _) = alg(CartanType::B, 2);
            let x = a.combine(&DVector::from_vec(c));
            let (k, p) = a.cartan_split(&x).unwrap();
            prop_assert!((&k + &p - &x).norm() < 1e-14);
            prop_assert!(a.contains(&k) && a.contains(&p));
            // [p, k] lies in p
            let br = commutator(&p, &k);
            prop_assert!(a.check_p(&br).is_ok());
        }
    }
}
