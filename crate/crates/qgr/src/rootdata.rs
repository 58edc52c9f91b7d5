//! Finite-type root data: Cartan matrices, symmetrizers, Weyl group actions,
//! the invariant pairing on the weight lattice, the longest element and its
//! involution, and the inverse quantum Cartan matrix as a memoized series.
//!
//! Vertex labels are 1-based everywhere in the public API and follow the
//! Bourbaki numbering.  For the folded types the short and long roots are
//! arranged so that `d_i` equals the size of the corresponding orbit of the
//! unfolding automorphism (see [`Folding`]).
//!
//! Conventions: `α_i = Σ_j c_ji ϖ_j`, `s_i λ = λ − λ_i α_i`,
//! `(α_i, α_j) = d_i c_ij` and `(α_i, ϖ_j) = d_i δ_ij`.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Dynkin series of a finite-type Cartan matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Series {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Series::A => 'A',
            Series::B => 'B',
            Series::C => 'C',
            Series::D => 'D',
            Series::E => 'E',
            Series::F => 'F',
            Series::G => 'G',
        };
        write!(f, "{c}")
    }
}

/// A Cartan type such as `A2`, `B3` or `E6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CartanType {
    pub series: Series,
    pub rank: usize,
}

impl CartanType {
    /// Validates the rank against the series.
    pub fn new(series: Series, rank: usize) -> Result<Self> {
        let ok = match series {
            Series::A => rank >= 1,
            Series::B | Series::C => rank >= 2,
            Series::D => rank >= 3,
            Series::E => (6..=8).contains(&rank),
            Series::F => rank == 4,
            Series::G => rank == 2,
        };
        if ok {
            Ok(CartanType { series, rank })
        } else {
            Err(Error::UnknownCartanType(format!("{series}{rank}")))
        }
    }

    /// True for the types A, D, E.
    pub fn is_simply_laced(&self) -> bool {
        matches!(self.series, Series::A | Series::D | Series::E)
    }

    /// The lacing number `r`: 1 for ADE, 2 for BCF, 3 for G.
    pub fn lacing(&self) -> i64 {
        match self.series {
            Series::A | Series::D | Series::E => 1,
            Series::B | Series::C | Series::F => 2,
            Series::G => 3,
        }
    }

    /// The dual Coxeter number `h∨`.
    pub fn dual_coxeter(&self) -> i64 {
        let n = self.rank as i64;
        match self.series {
            Series::A => n + 1,
            Series::B => 2 * n - 1,
            Series::C => n + 1,
            Series::D => 2 * n - 2,
            Series::E => match n {
                6 => 12,
                7 => 18,
                _ => 30,
            },
            Series::F => 9,
            Series::G => 4,
        }
    }

    /// The number of positive roots, i.e. the length of the longest element.
    pub fn num_positive_roots(&self) -> usize {
        let n = self.rank;
        match self.series {
            Series::A => n * (n + 1) / 2,
            Series::B | Series::C => n * n,
            Series::D => n * (n - 1),
            Series::E => match n {
                6 => 36,
                7 => 63,
                _ => 120,
            },
            Series::F => 24,
            Series::G => 6,
        }
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.series, self.rank)
    }
}

impl FromStr for CartanType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let series = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Series::A,
            Some('B') => Series::B,
            Some('C') => Series::C,
            Some('D') => Series::D,
            Some('E') => Series::E,
            Some('F') => Series::F,
            Some('G') => Series::G,
            _ => return Err(Error::UnknownCartanType(s.to_string())),
        };
        let rank: usize = chars
            .as_str()
            .parse()
            .map_err(|_| Error::UnknownCartanType(s.to_string()))?;
        CartanType::new(series, rank)
    }
}

/// An integral weight written in the basis of fundamental weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight {
    pub coords: Vec<i64>,
}

impl Weight {
    pub fn zero(rank: usize) -> Self {
        Weight {
            coords: vec![0; rank],
        }
    }

    /// The fundamental weight `ϖ_i` (1-based).
    pub fn fundamental(rank: usize, i: usize) -> Self {
        let mut w = Weight::zero(rank);
        w.coords[i - 1] = 1;
        w
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Weight) -> Weight {
        Weight {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, k: i64) -> Weight {
        Weight {
            coords: self.coords.iter().map(|a| a * k).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&a| a == 0)
    }
}

/// Complete root datum of a finite-type Cartan matrix.
#[derive(Debug, Clone)]
pub struct CartanData {
    kind: CartanType,
    cartan: Vec<Vec<i64>>,
    sym: Vec<i64>,
    star: Vec<usize>,
    inverse: Vec<Vec<Rational64>>,
    longest: Vec<usize>,
    ctilde: Arc<QCartanSeries>,
}

fn edges(kind: CartanType) -> Vec<(usize, usize)> {
    let n = kind.rank;
    match kind.series {
        Series::A | Series::B | Series::C => (1..n).map(|i| (i, i + 1)).collect(),
        Series::D => {
            let mut e: Vec<(usize, usize)> = (1..n.saturating_sub(2)).map(|i| (i, i + 1)).collect();
            e.push((n - 2, n - 1));
            e.push((n - 2, n));
            e
        }
        Series::E => {
            let mut e = vec![(1, 3), (3, 4), (2, 4)];
            for i in 4..n {
                e.push((i, i + 1));
            }
            e
        }
        Series::F => vec![(1, 2), (2, 3), (3, 4)],
        Series::G => vec![(1, 2)],
    }
}

/// Builds the Cartan matrix (0-based storage) and symmetrizer of a type.
pub fn build_cartan(kind: CartanType) -> (Vec<Vec<i64>>, Vec<i64>) {
    let n = kind.rank;
    let mut c = vec![vec![0i64; n]; n];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 2;
    }
    for (a, b) in edges(kind) {
        c[a - 1][b - 1] = -1;
        c[b - 1][a - 1] = -1;
    }
    let mut d = vec![1i64; n];
    match kind.series {
        Series::A | Series::D | Series::E => {}
        Series::B => {
            for x in d.iter_mut().take(n - 1) {
                *x = 2;
            }
            c[n - 1][n - 2] = -2;
        }
        Series::C => {
            d[n - 1] = 2;
            c[n - 2][n - 1] = -2;
        }
        Series::F => {
            d = vec![2, 2, 1, 1];
            c[2][1] = -2;
        }
        Series::G => {
            d = vec![3, 1];
            c[1][0] = -3;
        }
    }
    (c, d)
}

fn rational_inverse(c: &[Vec<i64>]) -> Vec<Vec<Rational64>> {
    let n = c.len();
    let mut m: Vec<Vec<Rational64>> = c
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Rational64> = row.iter().map(|&x| Rational64::from_integer(x)).collect();
            r.extend((0..n).map(|j| {
                if i == j {
                    Rational64::one()
                } else {
                    Rational64::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .expect("Cartan matrices of finite type are invertible");
        m.swap(col, piv);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

impl CartanData {
    /// Builds the full datum for the given type.
    pub fn new(kind: CartanType) -> Self {
        let (cartan, sym) = build_cartan(kind);
        let inverse = rational_inverse(&cartan);
        let ctilde = Arc::new(QCartanSeries::new(&cartan, &sym, kind.lacing(), kind.dual_coxeter()));
        let mut data = CartanData {
            kind,
            cartan,
            sym,
            star: Vec::new(),
            inverse,
            longest: Vec::new(),
            ctilde,
        };
        data.longest = data.compute_longest_word();
        data.star = data.compute_star();
        data
    }

    /// Parses a type name such as `"B3"` and builds its datum.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(CartanData::new(name.parse()?))
    }

    pub fn kind(&self) -> CartanType {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.kind.rank
    }

    pub fn lacing(&self) -> i64 {
        self.kind.lacing()
    }

    pub fn dual_coxeter(&self) -> i64 {
        self.kind.dual_coxeter()
    }

    fn check(&self, i: usize) {
        assert!(
            i >= 1 && i <= self.rank(),
            "vertex {i} out of range for {}",
            self.kind
        );
    }

    /// Validates a 1-based vertex label.
    pub fn validate(&self, i: usize) -> Result<()> {
        if i >= 1 && i <= self.rank() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: i,
                rank: self.rank(),
            })
        }
    }

    /// The Cartan entry `c_ij` (1-based labels).
    pub fn c(&self, i: usize, j: usize) -> i64 {
        self.check(i);
        self.check(j);
        self.cartan[i - 1][j - 1]
    }

    /// The symmetrizer entry `d_i`.
    pub fn d(&self, i: usize) -> i64 {
        self.check(i);
        self.sym[i - 1]
    }

    /// The Cartan matrix with 0-based storage.
    pub fn cartan_matrix(&self) -> &[Vec<i64>] {
        &self.cartan
    }

    pub fn symmetrizer(&self) -> &[i64] {
        &self.sym
    }

    /// `i ∼ j`: distinct and joined by an edge.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.c(i, j) != 0
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (1..=self.rank()).filter(|&j| self.adjacent(i, j)).collect()
    }

    /// The involution `i ↦ i*` induced by `w∘α_i = −α_{i*}`.
    pub fn star(&self, i: usize) -> usize {
        self.check(i);
        self.star[i - 1]
    }

    /// The simple root `α_i` in the fundamental-weight basis.
    pub fn simple_root(&self, i: usize) -> Weight {
        self.check(i);
        Weight {
            coords: (0..self.rank()).map(|j| self.cartan[j][i - 1]).collect(),
        }
    }

    /// The simple reflection `s_i λ = λ − λ_i α_i`.
    pub fn simple_reflection(&self, i: usize, lambda: &Weight) -> Weight {
        let k = lambda.coords[i - 1];
        lambda.sub(&self.simple_root(i).scale(k))
    }

    /// Applies `s_{w_1} s_{w_2} ⋯ s_{w_l}` to `lambda` (the last letter acts first).
    pub fn weyl_apply(&self, word: &[usize], lambda: &Weight) -> Weight {
        word.iter()
            .rev()
            .fold(lambda.clone(), |acc, &i| self.simple_reflection(i, &acc))
    }

    /// Expresses a weight in the basis of simple roots.
    pub fn root_coordinates(&self, lambda: &Weight) -> Vec<Rational64> {
        (0..self.rank())
            .map(|i| {
                (0..self.rank())
                    .map(|j| self.inverse[i][j] * Rational64::from_integer(lambda.coords[j]))
                    .sum()
            })
            .collect()
    }

    /// The invariant pairing `(λ, μ)` normalized by `(α_i, ϖ_j) = d_i δ_ij`.
    pub fn pairing(&self, lambda: &Weight, mu: &Weight) -> Rational64 {
        self.root_coordinates(lambda)
            .into_iter()
            .enumerate()
            .map(|(i, x)| x * Rational64::from_integer(self.sym[i] * mu.coords[i]))
            .sum()
    }

    fn compute_longest_word(&self) -> Vec<usize> {
        let mut lambda = Weight {
            coords: vec![1; self.rank()],
        };
        let mut word = Vec::new();
        while let Some(i) = (1..=self.rank()).find(|&i| lambda.coords[i - 1] > 0) {
            lambda = self.simple_reflection(i, &lambda);
            word.push(i);
        }
        word
    }

    fn compute_star(&self) -> Vec<usize> {
        (1..=self.rank())
            .map(|i| {
                let img = self.weyl_apply(&self.longest, &self.simple_root(i));
                (1..=self.rank())
                    .find(|&j| img == self.simple_root(j).scale(-1))
                    .expect("the longest element maps simple roots to negative simple roots")
            })
            .collect()
    }

    /// A reduced word for the longest element `w∘`.
    pub fn longest_word(&self) -> &[usize] {
        &self.longest
    }

    /// The length `ℓ` of `w∘`.
    pub fn longest_length(&self) -> usize {
        self.longest.len()
    }

    /// Checks whether a word is reduced by tracking its inversion set on `ρ`.
    pub fn is_reduced(&self, word: &[usize]) -> bool {
        // s_{w_1}⋯s_{w_l} is reduced iff each prefix increases the length, i.e.
        // (s_{w_1}⋯s_{w_{k-1}})^{-1}-image of ρ pairs positively with the next coroot.
        let mut lambda = Weight {
            coords: vec![1; self.rank()],
        };
        for &i in word {
            if lambda.coords[i - 1] <= 0 {
                return false;
            }
            lambda = self.simple_reflection(i, &lambda);
        }
        true
    }

    /// The inverse quantum Cartan matrix coefficient `c̃_ij(u)`.
    pub fn ctilde(&self, i: usize, j: usize, u: i64) -> i64 {
        self.check(i);
        self.check(j);
        self.ctilde.coeff(i - 1, j - 1, u)
    }

    /// Shared handle on the memoized series.
    pub fn ctilde_series(&self) -> Arc<QCartanSeries> {
        Arc::clone(&self.ctilde)
    }
}

// ---------------------------------------------------------------------------
// Integer polynomials used for the inversion of the quantum Cartan matrix.

type Poly = Vec<i128>;

fn poly_trim(mut p: Poly) -> Poly {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![0i128; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    poly_trim(r)
}

fn poly_sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let r = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0) - b.get(i).copied().unwrap_or(0))
        .collect();
    poly_trim(r)
}

/// Exact division in `Z[q]`; panics if the quotient is not integral.
fn poly_div_exact(a: &Poly, b: &Poly) -> Poly {
    assert!(!b.is_empty(), "division by the zero polynomial");
    let mut rem = a.clone();
    if rem.len() < b.len() {
        assert!(rem.is_empty(), "inexact polynomial division");
        return Vec::new();
    }
    let lead = *b.last().unwrap();
    let mut q = vec![0i128; rem.len() - b.len() + 1];
    for k in (0..q.len()).rev() {
        let top = rem[k + b.len() - 1];
        assert!(top % lead == 0, "inexact polynomial division");
        let f = top / lead;
        q[k] = f;
        for (j, y) in b.iter().enumerate() {
            rem[k + j] -= f * y;
        }
    }
    assert!(rem.iter().all(|&x| x == 0), "inexact polynomial division");
    poly_trim(q)
}

/// The inverse `C̃(q)` of the quantum Cartan matrix, expanded at `q = 0`.
///
/// Writing `P(q) = q^r C(q)` (a polynomial matrix), the adjugate and the
/// determinant of `P` are computed once by fraction-free elimination, and
/// `C̃(q) = q^r adj P(q) / det P(q)` is expanded as a power series.  The
/// coefficients of `1/det` are extended lazily and cached behind a mutex.
#[derive(Debug)]
pub struct QCartanSeries {
    adj: Vec<Vec<Poly>>,
    /// `det P = q^valuation · unit-series`.
    valuation: i64,
    det_unit: Poly,
    lacing: i64,
    inv_det: Mutex<Vec<i128>>,
    default_order: usize,
}

impl QCartanSeries {
    fn new(cartan: &[Vec<i64>], sym: &[i64], lacing: i64, dual_coxeter: i64) -> Self {
        let n = cartan.len();
        let r = lacing as usize;
        // Entries of P(q) = q^r C(q).
        let mut p = vec![vec![Vec::<i128>::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut poly = vec![0i128; 2 * r + 1];
                if i == j {
                    let d = sym[i] as usize;
                    poly[r + d] += 1;
                    poly[r - d] += 1;
                } else if cartan[i][j] != 0 {
                    // [c]_q = −(q^{k−1} + q^{k−3} + ⋯ + q^{1−k}) for c = −k.
                    let k = -cartan[i][j];
                    let mut e = k - 1;
                    while e >= 1 - k {
                        poly[(r as i64 + e) as usize] -= 1;
                        e -= 2;
                    }
                }
                p[i][j] = poly_trim(poly);
            }
        }
        let (det, adj) = bareiss_adjugate(&p);
        let valuation = det.iter().position(|&x| x != 0).expect("nonzero determinant");
        let det_unit: Poly = det[valuation..].to_vec();
        assert!(
            det_unit[0] == 1 || det_unit[0] == -1,
            "the determinant of the quantum Cartan matrix has a unit lowest coefficient"
        );
        let series = QCartanSeries {
            adj,
            valuation: valuation as i64,
            det_unit,
            lacing,
            inv_det: Mutex::new(vec![]),
            default_order: (4 * lacing * dual_coxeter) as usize + 8,
        };
        series.extend(series.default_order);
        series
    }

    fn extend(&self, len: usize) {
        let mut inv = self.inv_det.lock().expect("series cache poisoned");
        let d0 = self.det_unit[0];
        while inv.len() < len {
            let m = inv.len();
            let mut acc: i128 = if m == 0 { 1 } else { 0 };
            for a in 1..=m.min(self.det_unit.len() - 1) {
                acc -= self.det_unit[a] * inv[m - a];
            }
            // d0 = ±1, so division is exact.
            inv.push(acc * d0);
        }
    }

    /// Coefficient of `q^u` in `C̃_ij(q)` (0-based indices).
    pub fn coeff(&self, i: usize, j: usize, u: i64) -> i64 {
        let shift = self.lacing - self.valuation;
        let top = u - shift;
        if top < 0 {
            return 0;
        }
        self.extend(top as usize + 1);
        let inv = self.inv_det.lock().expect("series cache poisoned");
        let mut acc: i128 = 0;
        for (a, x) in self.adj[i][j].iter().enumerate() {
            let idx = top - a as i64;
            if idx < 0 {
                break;
            }
            acc += x * inv[idx as usize];
        }
        i64::try_from(acc).expect("inverse quantum Cartan coefficient overflow")
    }

    /// Number of cached series terms.
    pub fn cached_len(&self) -> usize {
        self.inv_det.lock().expect("series cache poisoned").len()
    }
}

/// Fraction-free elimination returning `(det P, adj P)` over `Z[q]`.
fn bareiss_adjugate(p: &[Vec<Poly>]) -> (Poly, Vec<Vec<Poly>>) {
    let n = p.len();
    let mut m: Vec<Vec<Poly>> = p
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { vec![1] } else { Vec::new() }));
            r
        })
        .collect();
    let mut sign: i128 = 1;
    let mut prev: Poly = vec![1];
    for k in 0..n {
        let piv = (k..n)
            .find(|&r| !m[r][k].is_empty())
            .expect("quantum Cartan matrix is nonsingular");
        if piv != k {
            m.swap(k, piv);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..2 * n {
                let a = poly_mul(&m[k][k], &m[i][j]);
                let b = poly_mul(&m[i][k], &m[k][j]);
                m[i][j] = poly_div_exact(&poly_sub(&a, &b), &prev);
            }
            m[i][k] = Vec::new();
        }
        prev = m[k][k].clone();
    }
    let det: Poly = m[n - 1][n - 1].iter().map(|x| x * sign).collect();
    // U X = det · L with U upper triangular; X is the adjugate.
    let mut x = vec![vec![Vec::<i128>::new(); n]; n];
    for c in 0..n {
        for i in (0..n).rev() {
            let mut acc = poly_mul(&det, &m[i][n + c]);
            for j in i + 1..n {
                acc = poly_sub(&acc, &poly_mul(&m[i][j], &x[j][c]));
            }
            x[i][c] = poly_div_exact(&acc, &m[i][i]);
        }
    }
    (det, x)
}

// ---------------------------------------------------------------------------
// Unfoldings.

/// A simply-laced diagram `Δ` with an automorphism `σ` whose orbit quotient
/// is the Cartan type `g`.  Folded vertices are labelled so that `d_i`
/// equals the size of the orbit of `i`.
#[derive(Debug, Clone)]
pub struct Folding {
    pub delta: CartanData,
    pub folded: CartanData,
    /// `σ` as a permutation of the 1-based vertices of `Δ` (`sigma[ı-1]`).
    sigma: Vec<usize>,
    /// Folded label of every vertex of `Δ`.
    orbit_of: Vec<usize>,
}

impl Folding {
    /// The standard unfolding of `g`: trivial for ADE, and
    /// `B_n → A_{2n−1}`, `C_n → D_{n+1}`, `F_4 → E_6`, `G_2 → D_4` otherwise.
    pub fn unfold(g: CartanType) -> Self {
        let n = g.rank;
        let (delta_kind, sigma, orbit_of): (CartanType, Vec<usize>, Vec<usize>) = match g.series {
            Series::A | Series::D | Series::E => (g, (1..=n).collect(), (1..=n).collect()),
            Series::B => {
                let m = 2 * n - 1;
                let sigma = (1..=m).map(|k| 2 * n - k).collect();
                let orbit = (1..=m).map(|k| k.min(2 * n - k)).collect();
                (CartanType { series: Series::A, rank: m }, sigma, orbit)
            }
            Series::C => {
                let m = n + 1;
                let mut sigma: Vec<usize> = (1..=m).collect();
                sigma.swap(n - 1, n);
                let orbit = (1..=m).map(|k| k.min(n)).collect();
                (CartanType { series: Series::D, rank: m }, sigma, orbit)
            }
            Series::F => (
                CartanType { series: Series::E, rank: 6 },
                vec![6, 2, 5, 4, 3, 1],
                vec![1, 4, 2, 3, 2, 1],
            ),
            Series::G => (
                CartanType { series: Series::D, rank: 4 },
                vec![3, 2, 4, 1],
                vec![1, 2, 1, 1],
            ),
        };
        let folding = Folding {
            delta: CartanData::new(delta_kind),
            folded: CartanData::new(g),
            sigma,
            orbit_of,
        };
        folding.assert_consistent();
        folding
    }

    fn assert_consistent(&self) {
        let g = &self.folded;
        for i in 1..=g.rank() {
            let orbit = self.orbit(i);
            assert_eq!(orbit.len() as i64, g.d(i), "orbit size equals d_i");
            let rep = orbit[0];
            for j in 1..=g.rank() {
                let folded_c: i64 = self.orbit(j).iter().map(|&jj| self.delta.c(rep, jj)).sum();
                assert_eq!(folded_c, g.c(i, j), "folding reproduces c_ij");
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.delta.rank() == self.folded.rank()
    }

    /// `σ(ı)`.
    pub fn sigma(&self, v: usize) -> usize {
        self.sigma[v - 1]
    }

    /// `σ^k(ı)`.
    pub fn sigma_pow(&self, v: usize, k: usize) -> usize {
        (0..k).fold(v, |x, _| self.sigma(x))
    }

    /// Folded label `ī` of a vertex of `Δ`.
    pub fn fold(&self, v: usize) -> usize {
        self.orbit_of[v - 1]
    }

    /// The orbit `{ı ∈ Δ_0 : ī = i}` sorted increasingly.
    pub fn orbit(&self, i: usize) -> Vec<usize> {
        (1..=self.delta.rank())
            .filter(|&v| self.fold(v) == i)
            .collect()
    }

    /// Short description of `σ` such as `"id"` or `"(1 3)(4 6)"`.
    pub fn sigma_name(&self) -> String {
        if self.is_trivial() {
            return "id".into();
        }
        let mut seen = vec![false; self.delta.rank()];
        let mut out = String::new();
        for v in 1..=self.delta.rank() {
            if seen[v - 1] || self.sigma(v) == v {
                continue;
            }
            let mut cyc = vec![v];
            seen[v - 1] = true;
            let mut x = self.sigma(v);
            while x != v {
                seen[x - 1] = true;
                cyc.push(x);
                x = self.sigma(x);
            }
            let parts: Vec<String> = cyc.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("({})", parts.join(" ")));
        }
        out
    }
}
