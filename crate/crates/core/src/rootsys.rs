//! Finite root systems, Weyl groups and Bruhat orders.
//!
//! Roots are integer vectors in the simple-root basis. The Cartan matrix is
//! stored as `cartan[i][j] = alpha_j(h_i)`, the value of the j-th simple root
//! on the i-th simple coroot, so a root `beta` evaluates on `h_i` to
//! `sum_j cartan[i][j] * beta[j]`.
//!
//! Weyl group elements are identified by their action on the roots (a
//! permutation of root indices). Reduced words are witnesses only.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CartanType {
    A,
    B,
    C,
    D,
}

impl CartanType {
    pub fn letter(self) -> char {
        match self {
            CartanType::A => 'A',
            CartanType::B => 'B',
            CartanType::C => 'C',
            CartanType::D => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(CartanType::A),
            'B' => Some(CartanType::B),
            'C' => Some(CartanType::C),
            'D' => Some(CartanType::D),
            _ => None,
        }
    }

    /// Ranks for which root systems and Weyl groups are built.
    pub fn supports_rank(self, rank: usize) -> bool {
        match self {
            CartanType::A => (1..=5).contains(&rank),
            CartanType::B | CartanType::C => (2..=4).contains(&rank),
            CartanType::D => (4..=5).contains(&rank),
        }
    }

    /// Classical root count.
    pub fn root_count(self, rank: usize) -> usize {
        match self {
            CartanType::A => rank * (rank + 1),
            CartanType::B | CartanType::C => 2 * rank * rank,
            CartanType::D => 2 * rank * (rank - 1),
        }
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A type letter together with a rank, written like `A2` or `b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraLabel {
    pub cartan_type: CartanType,
    pub rank: usize,
}

impl fmt::Display for AlgebraLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.cartan_type, self.rank)
    }
}

impl FromStr for AlgebraLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let letter = chars
            .next()
            .ok_or_else(|| Error::Parse("empty algebra label".into()))?;
        let cartan_type = CartanType::from_letter(letter)
            .ok_or_else(|| Error::Parse(format!("unknown type letter {letter:?}")))?;
        let digits = chars.as_str().trim_start_matches('_');
        if digits.is_empty() || digits.len() > 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("invalid rank in {s:?}")));
        }
        let rank: usize = digits
            .parse()
            .map_err(|_| Error::Parse(format!("invalid rank in {s:?}")))?;
        Ok(AlgebraLabel { cartan_type, rank })
    }
}

#[derive(Clone, Debug)]
pub struct RootSystem {
    cartan_type: CartanType,
    rank: usize,
    cartan: Vec<Vec<i32>>,
    /// Positive roots first (sorted by height, simple roots in order), then
    /// their negatives in the same order.
    roots: Vec<Vec<i32>>,
    n_positive: usize,
    index: HashMap<Vec<i32>, usize>,
}

fn cartan_matrix(t: CartanType, r: usize) -> Vec<Vec<i32>> {
    let mut a = vec![vec![0i32; r]; r];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 2;
    }
    for i in 0..r.saturating_sub(1) {
        a[i][i + 1] = -1;
        a[i + 1][i] = -1;
    }
    match t {
        CartanType::A => {}
        // alpha_r short: <alpha_{r-1}, alpha_r^vee> = -2
        CartanType::B => a[r - 1][r - 2] = -2,
        // alpha_r long
        CartanType::C => a[r - 2][r - 1] = -2,
        CartanType::D => {
            // alpha_{r-1}, alpha_r both attach to alpha_{r-2}
            a[r - 2][r - 1] = 0;
            a[r - 1][r - 2] = 0;
            a[r - 3][r - 1] = -1;
            a[r - 1][r - 3] = -1;
        }
    }
    a
}

impl RootSystem {
    pub fn build(cartan_type: CartanType, rank: usize) -> Result<Self> {
        if rank == 0 || !cartan_type.supports_rank(rank) {
            return Err(Error::UnsupportedAlgebra {
                letter: cartan_type.letter(),
                rank,
            });
        }
        let cartan = cartan_matrix(cartan_type, rank);

        let simple: Vec<Vec<i32>> = (0..rank)
            .map(|i| (0..rank).map(|j| i32::from(i == j)).collect())
            .collect();
        let mut seen: HashMap<Vec<i32>, ()> = HashMap::new();
        let mut queue: VecDeque<Vec<i32>> = VecDeque::new();
        for s in &simple {
            seen.insert(s.clone(), ());
            queue.push_back(s.clone());
        }
        while let Some(beta) = queue.pop_front() {
            for i in 0..rank {
                let image = reflect_coords(&cartan, i, &beta);
                if !seen.contains_key(&image) {
                    seen.insert(image.clone(), ());
                    queue.push_back(image);
                }
            }
        }

        let mut positive: Vec<Vec<i32>> = seen
            .into_keys()
            .filter(|b| b.iter().all(|&c| c >= 0))
            .collect();
        positive.sort_by(|a, b| {
            let ha: i32 = a.iter().sum();
            let hb: i32 = b.iter().sum();
            ha.cmp(&hb).then_with(|| b.cmp(a))
        });
        let n_positive = positive.len();
        let mut roots = positive.clone();
        roots.extend(
            positive
                .iter()
                .map(|b| b.iter().map(|c| -c).collect::<Vec<_>>()),
        );
        let index = roots
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i))
            .collect();

        let rs = RootSystem {
            cartan_type,
            rank,
            cartan,
            roots,
            n_positive,
            index,
        };
        if rs.roots.len() != cartan_type.root_count(rank) {
            return Err(Error::Consistency(format!(
                "{}{} produced {} roots, expected {}",
                cartan_type,
                rank,
                rs.roots.len(),
                cartan_type.root_count(rank)
            )));
        }
        Ok(rs)
    }

    pub fn label(&self) -> AlgebraLabel {
        AlgebraLabel {
            cartan_type: self.cartan_type,
            rank: self.rank,
        }
    }

    pub fn cartan_type(&self) -> CartanType {
        self.cartan_type
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cartan_matrix(&self) -> &[Vec<i32>] {
        &self.cartan
    }

    pub fn roots(&self) -> &[Vec<i32>] {
        &self.roots
    }

    pub fn root(&self, idx: usize) -> &[i32] {
        &self.roots[idx]
    }

    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn n_positive(&self) -> usize {
        self.n_positive
    }

    /// Indices of positive roots; these are `0..n_positive`.
    pub fn positive_roots(&self) -> std::ops::Range<usize> {
        0..self.n_positive
    }

    pub fn is_positive(&self, idx: usize) -> bool {
        idx < self.n_positive
    }

    pub fn negate(&self, idx: usize) -> usize {
        (idx + self.n_positive) % self.roots.len()
    }

    /// The positive root among `{idx, -idx}`.
    pub fn positive_part(&self, idx: usize) -> usize {
        idx % self.n_positive
    }

    pub fn simple_root(&self, i: usize) -> usize {
        debug_assert!(i < self.rank);
        i
    }

    pub fn find(&self, coords: &[i32]) -> Option<usize> {
        self.index.get(coords).copied()
    }

    pub fn height(&self, idx: usize) -> i32 {
        self.roots[idx].iter().sum()
    }

    /// `beta(h_i)` for the root with index `idx`.
    pub fn pairing(&self, idx: usize, i: usize) -> i32 {
        coroot_pairing(&self.cartan, i, &self.roots[idx])
    }

    /// Value of a root on the Cartan element `sum_i x[i] h_i`.
    pub fn evaluate(&self, idx: usize, coroot_coords: &[f64]) -> f64 {
        coroot_coords
            .iter()
            .enumerate()
            .map(|(i, x)| x * f64::from(self.pairing(idx, i)))
            .sum()
    }

    pub fn reflect_simple(&self, i: usize, idx: usize) -> usize {
        let image = reflect_coords(&self.cartan, i, &self.roots[idx]);
        self.index[&image]
    }

    /// Human-readable name such as `a1+2a2` or `-a2`.
    pub fn root_name(&self, idx: usize) -> String {
        let coords = &self.roots[idx];
        let sign = if self.is_positive(idx) { "" } else { "-" };
        let terms: Vec<String> = coords
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| {
                let c = c.abs();
                if c == 1 {
                    format!("a{}", j + 1)
                } else {
                    format!("{c}a{}", j + 1)
                }
            })
            .collect();
        match (sign.is_empty(), terms.len()) {
            (true, _) => terms.join("+"),
            (false, 1) => format!("-{}", terms[0]),
            (false, _) => format!("-({})", terms.join("+")),
        }
    }
}

fn coroot_pairing(cartan: &[Vec<i32>], i: usize, beta: &[i32]) -> i32 {
    cartan[i].iter().zip(beta).map(|(a, b)| a * b).sum()
}

fn reflect_coords(cartan: &[Vec<i32>], i: usize, beta: &[i32]) -> Vec<i32> {
    let k = coroot_pairing(cartan, i, beta);
    let mut out = beta.to_vec();
    out[i] -= k;
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    pub id: usize,
    /// Lexicographically smallest reduced word; `[i, j]` means `s_i s_j`.
    pub word: Vec<usize>,
    pub length: usize,
    /// Image of each root index under the element.
    pub root_action: Vec<usize>,
}

/// Reflection in a positive root, as a group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reflection {
    pub root: usize,
    pub element: usize,
}

#[derive(Clone, Debug)]
pub struct WeylGroup {
    rs: RootSystem,
    elements: Vec<WeylElement>,
    lookup: HashMap<Vec<usize>, usize>,
    left: Vec<Vec<usize>>,
    right: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    reflections: Vec<Reflection>,
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

fn inverse_perm(a: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

impl WeylGroup {
    /// Breadth-first closure of the simple reflections acting on roots.
    pub fn enumerate(rs: &RootSystem) -> Self {
        let n = rs.n_roots();
        let simple: Vec<Vec<usize>> = (0..rs.rank())
            .map(|i| (0..n).map(|b| rs.reflect_simple(i, b)).collect())
            .collect();

        let identity: Vec<usize> = (0..n).collect();
        let mut actions = vec![identity.clone()];
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        seen.insert(identity, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            for s in &simple {
                let next = compose(s, &actions[k]);
                if !seen.contains_key(&next) {
                    seen.insert(next.clone(), actions.len());
                    queue.push_back(actions.len());
                    actions.push(next);
                }
            }
        }

        let length_of = |act: &[usize]| {
            rs.positive_roots()
                .filter(|&b| !rs.is_positive(act[b]))
                .count()
        };
        let lengths: Vec<usize> = actions.iter().map(|a| length_of(a)).collect();

        // lexicographically smallest reduced words, shortest first
        let mut order: Vec<usize> = (0..actions.len()).collect();
        order.sort_by_key(|&k| lengths[k]);
        let mut words: Vec<Option<Vec<usize>>> = vec![None; actions.len()];
        for &k in &order {
            if lengths[k] == 0 {
                words[k] = Some(Vec::new());
                continue;
            }
            let (i, shorter) = simple
                .iter()
                .enumerate()
                .find_map(|(i, s)| {
                    let prev = seen[&compose(s, &actions[k])];
                    (lengths[prev] < lengths[k]).then_some((i, prev))
                })
                .expect("non-identity element has a left descent");
            let mut w = vec![i];
            w.extend(
                words[shorter]
                    .as_ref()
                    .expect("shorter element processed first"),
            );
            words[k] = Some(w);
        }

        let mut elements: Vec<WeylElement> = actions
            .into_iter()
            .zip(words)
            .zip(lengths)
            .map(|((root_action, word), length)| WeylElement {
                id: 0,
                word: word.unwrap(),
                length,
                root_action,
            })
            .collect();
        elements.sort_by(|a, b| a.length.cmp(&b.length).then_with(|| a.word.cmp(&b.word)));
        for (id, e) in elements.iter_mut().enumerate() {
            e.id = id;
        }
        let lookup: HashMap<Vec<usize>, usize> = elements
            .iter()
            .map(|e| (e.root_action.clone(), e.id))
            .collect();

        let left = simple
            .iter()
            .map(|s| {
                elements
                    .iter()
                    .map(|e| lookup[&compose(s, &e.root_action)])
                    .collect()
            })
            .collect();
        let right = simple
            .iter()
            .map(|s| {
                elements
                    .iter()
                    .map(|e| lookup[&compose(&e.root_action, s)])
                    .collect()
            })
            .collect();
        let inverse = elements
            .iter()
            .map(|e| lookup[&inverse_perm(&e.root_action)])
            .collect();

        let mut group = WeylGroup {
            rs: rs.clone(),
            elements,
            lookup,
            left,
            right,
            inverse,
            reflections: Vec::new(),
        };
        group.reflections = group.compute_reflections();
        group
    }

    fn compute_reflections(&self) -> Vec<Reflection> {
        let mut by_root: Vec<Option<usize>> = vec![None; self.rs.n_positive()];
        for w in &self.elements {
            for i in 0..self.rs.rank() {
                let root = self.rs.positive_part(w.root_action[self.rs.simple_root(i)]);
                if by_root[root].is_none() {
                    let ws = self.right[i][w.id];
                    by_root[root] = Some(self.multiply(ws, self.inverse[w.id]));
                }
            }
        }
        by_root
            .into_iter()
            .enumerate()
            .map(|(root, e)| Reflection {
                root,
                element: e.expect("every positive root is conjugate to a simple root"),
            })
            .collect()
    }

    pub fn root_system(&self) -> &RootSystem {
        &self.rs
    }

    pub fn elements(&self) -> &[WeylElement] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &WeylElement {
        &self.elements[id]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// The unique element of maximal length.
    pub fn longest(&self) -> usize {
        self.elements.len() - 1
    }

    pub fn length(&self, id: usize) -> usize {
        self.elements[id].length
    }

    pub fn find(&self, root_action: &[usize]) -> Option<usize> {
        self.lookup.get(root_action).copied()
    }

    /// Element with the given word, which need not be reduced.
    pub fn from_word(&self, word: &[usize]) -> Option<usize> {
        let mut id = self.identity();
        for &i in word.iter().rev() {
            if i >= self.rs.rank() {
                return None;
            }
            id = self.left[i][id];
        }
        Some(id)
    }

    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.lookup[&compose(&self.elements[a].root_action, &self.elements[b].root_action)]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// `s_i * w`
    pub fn left_simple(&self, i: usize, w: usize) -> usize {
        self.left[i][w]
    }

    /// `w * s_i`
    pub fn right_simple(&self, w: usize, i: usize) -> usize {
        self.right[i][w]
    }

    pub fn act(&self, w: usize, root: usize) -> usize {
        self.elements[w].root_action[root]
    }

    /// Positive roots sent to negative roots.
    pub fn inversions(&self, w: usize) -> usize {
        let act = &self.elements[w].root_action;
        self.rs
            .positive_roots()
            .filter(|&b| !self.rs.is_positive(act[b]))
            .count()
    }

    /// One reflection per positive root, ordered by root index.
    pub fn reflections(&self) -> &[Reflection] {
        &self.reflections
    }

    pub fn reflection(&self, root: usize) -> usize {
        self.reflections[self.rs.positive_part(root)].element
    }

    /// All reduced words of `w`. Exponential in the length; meant for small ranks.
    pub fn reduced_words(&self, w: usize) -> Vec<Vec<usize>> {
        let len = self.length(w);
        if len == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for i in 0..self.rs.rank() {
            let prev = self.left[i][w];
            if self.length(prev) < len {
                for mut tail in self.reduced_words(prev) {
                    let mut word = vec![i];
                    word.append(&mut tail);
                    out.push(word);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderKind {
    #[serde(rename = "strong")]
    Strong,
    #[serde(rename = "weak-left")]
    WeakLeft,
    #[serde(rename = "weak-right")]
    WeakRight,
}

impl OrderKind {
    pub const ALL: [OrderKind; 3] = [OrderKind::Strong, OrderKind::WeakLeft, OrderKind::WeakRight];

    pub fn name(self) -> &'static str {
        match self {
            OrderKind::Strong => "strong",
            OrderKind::WeakLeft => "weak-left",
            OrderKind::WeakRight => "weak-right",
        }
    }
}

impl FromStr for OrderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "strong" => Ok(OrderKind::Strong),
            "weak-left" | "left" => Ok(OrderKind::WeakLeft),
            "weak-right" | "right" => Ok(OrderKind::WeakRight),
            other => Err(Error::Parse(format!("unknown order kind {other:?}"))),
        }
    }
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fixed-width bitset rows for the order relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitRow(Vec<u64>);

impl BitRow {
    pub(crate) fn new(n: usize) -> Self {
        BitRow(vec![0; n.div_ceil(64)])
    }

    pub(crate) fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn union_with(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub(crate) fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruhatPoset {
    kind: OrderKind,
    /// Covers as (lower, upper), sorted.
    covers: Vec<(usize, usize)>,
    up: Vec<BitRow>,
}

impl BruhatPoset {
    /// Covers are found by exhaustive multiplication with a length check;
    /// the order is their reflexive-transitive closure.
    pub fn build(group: &WeylGroup, kind: OrderKind) -> Self {
        let n = group.len();
        let rank = group.root_system().rank();
        let mut covers = Vec::new();
        for w in 0..n {
            let len = group.length(w);
            let candidates: Vec<usize> = match kind {
                OrderKind::Strong => group
                    .reflections()
                    .iter()
                    .map(|t| group.multiply(t.element, w))
                    .collect(),
                OrderKind::WeakLeft => (0..rank).map(|i| group.left_simple(i, w)).collect(),
                OrderKind::WeakRight => (0..rank).map(|i| group.right_simple(w, i)).collect(),
            };
            for u in candidates {
                if group.length(u) == len + 1 {
                    covers.push((w, u));
                }
            }
        }
        covers.sort_unstable();
        covers.dedup();
        Self::from_covers(n, kind, covers, |id| group.length(id))
    }

    fn from_covers(
        n: usize,
        kind: OrderKind,
        covers: Vec<(usize, usize)>,
        length: impl Fn(usize) -> usize,
    ) -> Self {
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &covers {
            above[a].push(b);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&k| std::cmp::Reverse(length(k)));
        let mut up = vec![BitRow::new(n); n];
        for &w in &order {
            let mut row = BitRow::new(n);
            row.set(w);
            for &c in &above[w] {
                row.union_with(&up[c]);
            }
            up[w] = row;
        }
        BruhatPoset { kind, covers, up }
    }

    pub fn kind(&self) -> OrderKind {
        self.kind
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.up[a].get(b)
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq(a, b)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.leq(a, b) || self.leq(b, a)
    }

    pub fn is_cover(&self, a: usize, b: usize) -> bool {
        self.covers.binary_search(&(a, b)).is_ok()
    }

    /// All strict pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.leq(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn strict_count(&self) -> usize {
        self.up.iter().map(|r| r.count()).sum::<usize>() - self.len()
    }

    /// Every pair related here is related in `other`.
    pub fn is_subrelation_of(&self, other: &BruhatPoset) -> bool {
        self.strict_pairs()
            .into_iter()
            .all(|(a, b)| other.leq(a, b))
    }

    pub fn same_relation(&self, other: &BruhatPoset) -> bool {
        self.up == other.up
    }

    pub fn dump(&self, group: &WeylGroup) -> PosetDump {
        PosetDump {
            kind: self.kind,
            algebra: group.root_system().label().to_string(),
            elements: group
                .elements()
                .iter()
                .map(|e| ElementDump {
                    id: e.id,
                    word: e.word.iter().map(|i| i + 1).collect(),
                    length: e.length,
                })
                .collect(),
            covers: self.covers.iter().map(|&(a, b)| [a, b]).collect(),
            strict_pairs: self.strict_count(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementDump {
    pub id: usize,
    /// One-based simple-reflection indices.
    pub word: Vec<usize>,
    pub length: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosetDump {
    pub kind: OrderKind,
    pub algebra: String,
    pub elements: Vec<ElementDump>,
    pub covers: Vec<[usize; 2]>,
    pub strict_pairs: usize,
}
