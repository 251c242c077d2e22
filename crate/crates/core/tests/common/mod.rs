//! Oracles shared by the integration tests. They rebuild what they need
//! from the Cartan matrix and the stored reduced words only, without the
//! group's multiplication tables or the poset construction.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use toda_bruhat::rootsys::{CartanType, RootSystem, WeylGroup};

pub type IntMatrix = Vec<Vec<i64>>;

pub fn group(t: CartanType, rank: usize) -> WeylGroup {
    WeylGroup::enumerate(&RootSystem::build(t, rank).unwrap())
}

fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

/// Simple reflections acting on simple-root coordinates:
/// `s_i(alpha_j) = alpha_j - A_ij alpha_i`.
pub fn simple_reflections(cartan: &[Vec<i32>]) -> Vec<IntMatrix> {
    let n = cartan.len();
    (0..n)
        .map(|i| {
            let mut m = identity(n);
            for j in 0..n {
                m[i][j] -= i64::from(cartan[i][j]);
            }
            m
        })
        .collect()
}

pub fn word_matrix(gens: &[IntMatrix], word: &[usize]) -> IntMatrix {
    word.iter()
        .fold(identity(gens.len()), |acc, &i| mat_mul(&acc, &gens[i]))
}

/// Group elements as matrices of the reflection representation, keyed back
/// to their ids.
pub fn element_index(g: &WeylGroup) -> (Vec<IntMatrix>, HashMap<IntMatrix, usize>) {
    let gens = simple_reflections(g.root_system().cartan_matrix());
    let mut index = HashMap::new();
    for e in g.elements() {
        let prev = index.insert(word_matrix(&gens, &e.word), e.id);
        assert!(prev.is_none(), "two words give the same element");
    }
    (gens, index)
}

/// Strict pairs `(u, w)` with `u < w`, from the subword property on one
/// reduced word of each `w`.
pub fn subword_order(g: &WeylGroup) -> BTreeSet<(usize, usize)> {
    let (gens, index) = element_index(g);
    let mut pairs = BTreeSet::new();
    for e in g.elements() {
        let l = e.word.len();
        for mask in 0u64..(1 << l) {
            let sub: Vec<usize> = (0..l)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| e.word[k])
                .collect();
            let u = index[&word_matrix(&gens, &sub)];
            if u != e.id {
                pairs.insert((u, e.id));
            }
        }
    }
    pairs
}

/// Permutation of `{0..=rank}` for a type A element, from its word of
/// adjacent transpositions.
pub fn permutation(rank: usize, word: &[usize]) -> Vec<usize> {
    let mut p: Vec<usize> = (0..=rank).collect();
    for &i in word.iter().rev() {
        for x in p.iter_mut() {
            if *x == i {
                *x = i + 1;
            } else if *x == i + 1 {
                *x = i;
            }
        }
    }
    p
}

pub fn inversions(p: &[usize]) -> usize {
    (0..p.len())
        .flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| p[i] > p[j])
        .count()
}

/// Tableau criterion: `u <= w` iff `#{a <= i : u(a) >= j}` is dominated by
/// the same count for `w` for every `i, j`.
pub fn tableau_leq(u: &[usize], w: &[usize]) -> bool {
    let n = u.len();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let cu = u[..=i].iter().filter(|&&x| x >= j).count();
            let cw = w[..=i].iter().filter(|&&x| x >= j).count();
            cu <= cw
        })
    })
}

pub fn tableau_order(g: &WeylGroup) -> BTreeSet<(usize, usize)> {
    let rank = g.root_system().rank();
    let perms: Vec<Vec<usize>> = g
        .elements()
        .iter()
        .map(|e| permutation(rank, &e.word))
        .collect();
    let mut pairs = BTreeSet::new();
    for u in 0..g.len() {
        for w in 0..g.len() {
            if u != w && tableau_leq(&perms[u], &perms[w]) {
                pairs.insert((u, w));
            }
        }
    }
    pairs
}
