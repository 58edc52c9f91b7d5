//! Quantum tori over `Z[t^{±1/2}]` with exact sparse arithmetic.
//!
//! An element is stored as a finite sum `Σ c_a(t) X^a` where `X^a` is the
//! bar-invariant *commutative monomial* attached to the exponent vector `a`
//! and `c_a` is a Laurent polynomial in `t^{1/2}`.  Multiplication uses
//! `X^a X^b = t^{Λ(a,b)/2} X^{a+b}` for a skew-symmetric integer form `Λ`
//! given by a [`BilinearForm`] on the generator labels.  Because the basis is
//! bar-invariant, the bar involution acts on coefficients only.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qdatum::QDatum;
use crate::rootdata::CartanData;

// ---------------------------------------------------------------------------
// Laurent polynomials in t^{1/2}.

/// A Laurent polynomial in `t^{1/2}`; keys are exponents of `t^{1/2}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Laurent {
    terms: BTreeMap<i64, i64>,
}

fn checked_add(a: i64, b: i64) -> i64 {
    a.checked_add(b).expect("coefficient overflow")
}

fn checked_mul(a: i64, b: i64) -> i64 {
    a.checked_mul(b).expect("coefficient overflow")
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent::default()
    }

    pub fn one() -> Self {
        Laurent::monomial(1, 0)
    }

    /// `c · t^{k/2}`.
    pub fn monomial(c: i64, half: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(half, c);
        }
        Laurent { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, i64)>>(it: I) -> Self {
        let mut l = Laurent::zero();
        for (h, c) in it {
            l.add_term(h, c);
        }
        l
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates `(half-exponent, coefficient)` pairs in increasing exponent.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.terms.iter().map(|(&h, &c)| (h, c))
    }

    pub fn coeff(&self, half: i64) -> i64 {
        self.terms.get(&half).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, half: i64, c: i64) {
        if c == 0 {
            return;
        }
        let e = self.terms.entry(half).or_insert(0);
        *e = checked_add(*e, c);
        if *e == 0 {
            self.terms.remove(&half);
        }
    }

    pub fn add_assign(&mut self, other: &Laurent) {
        for (h, c) in other.iter() {
            self.add_term(h, c);
        }
    }

    pub fn sub_assign(&mut self, other: &Laurent) {
        for (h, c) in other.iter() {
            self.add_term(h, -c);
        }
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut r = self.clone();
        r.add_assign(other);
        r
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        let mut r = self.clone();
        r.sub_assign(other);
        r
    }

    pub fn neg(&self) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(&h, &c)| (h, -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut r = Laurent::zero();
        for (h1, c1) in self.iter() {
            for (h2, c2) in other.iter() {
                r.add_term(h1 + h2, checked_mul(c1, c2));
            }
        }
        r
    }

    /// Multiplies by `t^{k/2}`.
    pub fn shift(&self, half: i64) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(&h, &c)| (h + half, c)).collect(),
        }
    }

    /// The bar involution `t^{1/2} ↦ t^{−1/2}`.
    pub fn bar(&self) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(&h, &c)| (-h, c)).collect(),
        }
    }

    pub fn is_bar_invariant(&self) -> bool {
        *self == self.bar()
    }

    /// Value at `t^{1/2} = 1`.
    pub fn ev1(&self) -> i64 {
        self.terms.values().fold(0, |a, &c| checked_add(a, c))
    }

    /// True if every coefficient is non-negative.
    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|&c| c >= 0)
    }

    /// `Some((c, k))` if the polynomial is a single term `c t^{k/2}`.
    pub fn as_monomial(&self) -> Option<(i64, i64)> {
        if self.terms.len() == 1 {
            let (&h, &c) = self.terms.iter().next().unwrap();
            Some((c, h))
        } else {
            None
        }
    }

    pub fn min_half(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_half(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    /// Exact quotient `self / d`; fails when the division leaves a remainder.
    pub fn div_exact(&self, d: &Laurent) -> Result<Laurent> {
        if d.is_zero() {
            return Err(Error::NotDivisible("division by zero".into()));
        }
        if self.is_zero() {
            return Ok(Laurent::zero());
        }
        let (dmax, dlead) = {
            let (&h, &c) = d.terms.iter().next_back().unwrap();
            (h, c)
        };
        let dmin = d.min_half().unwrap();
        let floor = self.min_half().unwrap() - dmin;
        let mut rem = self.clone();
        let mut q = Laurent::zero();
        while let Some(top) = rem.max_half() {
            let e = top - dmax;
            let c = rem.coeff(top);
            if e < floor || c % dlead != 0 {
                return Err(Error::NotDivisible(format!("{self} by {d}")));
            }
            let f = c / dlead;
            q.add_term(e, f);
            rem.sub_assign(&d.shift(e).mul(&Laurent::monomial(f, 0)));
        }
        Ok(q)
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (h, c) in self.terms.iter().rev() {
            let (sign, abs) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match (*h, abs) {
                (0, a) => write!(f, "{a}")?,
                (h, 1) => write!(f, "{}", t_power(h))?,
                (h, a) => write!(f, "{a}{}", t_power(h))?,
            }
        }
        Ok(())
    }
}

/// Renders `t^{k/2}` in the canonical text form used across the crate.
pub fn t_power(half: i64) -> String {
    if half % 2 == 0 {
        format!("t^{{{}}}", half / 2)
    } else {
        format!("t^{{{half}/2}}")
    }
}

// ---------------------------------------------------------------------------
// Generator labels.

/// A label for a torus generator, with a canonical text representation.
pub trait TorusKey: Ord + Clone + fmt::Debug + Send + Sync + 'static {
    fn label(&self) -> String;
    fn parse_label(s: &str) -> Result<Self>;
}

impl TorusKey for usize {
    fn label(&self) -> String {
        format!("X({self})")
    }

    fn parse_label(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix("X(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("bad generator label `{s}`")))?;
        inner
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad generator label `{s}`")))
    }
}

/// The generator `Y_{i,p}`.  Ordered by `i` ascending and then `p`
/// descending, which is the canonical printing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct YKey {
    pub i: usize,
    pub p: i64,
}

impl YKey {
    pub fn new(i: usize, p: i64) -> Self {
        YKey { i, p }
    }
}

impl Ord for YKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.i.cmp(&other.i).then(other.p.cmp(&self.p))
    }
}

impl PartialOrd for YKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for YKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Y({},{})", self.i, self.p)
    }
}

impl TorusKey for YKey {
    fn label(&self) -> String {
        self.to_string()
    }

    fn parse_label(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix("Y(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("bad generator label `{s}`")))?;
        let mut parts = inner.split(',');
        let bad = || Error::Parse(format!("bad generator label `{s}`"));
        let i = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let p = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(YKey { i, p })
    }
}

// ---------------------------------------------------------------------------
// Monomials.

/// Sparse exponent vector: sorted by key, no zero exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial<K: TorusKey> {
    exps: Vec<(K, i64)>,
}

impl<K: TorusKey> Default for Monomial<K> {
    fn default() -> Self {
        Monomial { exps: Vec::new() }
    }
}

impl<K: TorusKey> Monomial<K> {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(k: K) -> Self {
        Monomial { exps: vec![(k, 1)] }
    }

    pub fn var_pow(k: K, e: i64) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial { exps: vec![(k, e)] }
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (K, i64)>>(it: I) -> Self {
        let mut map: BTreeMap<K, i64> = BTreeMap::new();
        for (k, e) in it {
            *map.entry(k).or_insert(0) += e;
        }
        Monomial {
            exps: map.into_iter().filter(|(_, e)| *e != 0).collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exps(&self) -> &[(K, i64)] {
        &self.exps
    }

    pub fn exp(&self, k: &K) -> i64 {
        self.exps
            .binary_search_by(|(kk, _)| kk.cmp(k))
            .map(|idx| self.exps[idx].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial<K>) -> Monomial<K> {
        let mut out = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            match self.exps[i].0.cmp(&other.exps[j].0) {
                Ordering::Less => {
                    out.push(self.exps[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.exps[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.exps[i].1 + other.exps[j].1;
                    if e != 0 {
                        out.push((self.exps[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.exps[i..]);
        out.extend_from_slice(&other.exps[j..]);
        Monomial { exps: out }
    }

    pub fn inv(&self) -> Monomial<K> {
        Monomial {
            exps: self.exps.iter().map(|(k, e)| (k.clone(), -e)).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> Monomial<K> {
        if n == 0 {
            return Monomial::one();
        }
        Monomial {
            exps: self.exps.iter().map(|(k, e)| (k.clone(), e * n)).collect(),
        }
    }

    pub fn div(&self, other: &Monomial<K>) -> Monomial<K> {
        self.mul(&other.inv())
    }

    /// True if all exponents are non-negative.
    pub fn is_nonneg(&self) -> bool {
        self.exps.iter().all(|(_, e)| *e >= 0)
    }

    /// Keeps only the factors accepted by `keep`.
    pub fn filter<F: Fn(&K) -> bool>(&self, keep: F) -> Monomial<K> {
        Monomial {
            exps: self.exps.iter().filter(|(k, _)| keep(k)).cloned().collect(),
        }
    }

    /// Relabels the generators; collisions are merged.
    pub fn map_keys<L: TorusKey, F: Fn(&K) -> L>(&self, f: F) -> Monomial<L> {
        Monomial::from_pairs(self.exps.iter().map(|(k, e)| (f(k), *e)))
    }

    /// Lexicographic group order on exponent vectors, with generators compared
    /// in key order.  Compatible with multiplication.
    pub fn lex_cmp(&self, other: &Monomial<K>) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.exps.get(i), other.exps.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some((_, e)), None) => return e.cmp(&0),
                (None, Some((_, e))) => return 0.cmp(e),
                (Some((k1, e1)), Some((k2, e2))) => match k1.cmp(k2) {
                    Ordering::Less => return e1.cmp(&0),
                    Ordering::Greater => return 0.cmp(e2),
                    Ordering::Equal => {
                        if e1 != e2 {
                            return e1.cmp(e2);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }

    /// Text rendering such as `Y(1,0)Y(2,-1)^{-1}`; `1` for the unit.
    pub fn render(&self) -> String {
        if self.exps.is_empty() {
            return "1".into();
        }
        self.exps
            .iter()
            .map(|(k, e)| {
                if *e == 1 {
                    k.label()
                } else {
                    format!("{}^{{{e}}}", k.label())
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Bilinear forms and torus elements.

/// An integer skew-symmetric form on generator labels.
pub trait BilinearForm<K: TorusKey>: Send + Sync {
    fn form(&self, a: &K, b: &K) -> i64;
}

/// The zero form: the commutative Laurent polynomial ring.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForm;

impl<K: TorusKey> BilinearForm<K> for ZeroForm {
    fn form(&self, _a: &K, _b: &K) -> i64 {
        0
    }
}

/// A form given by an explicit square matrix on 1-based index labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixForm {
    pub matrix: Vec<Vec<i64>>,
}

impl BilinearForm<usize> for MatrixForm {
    fn form(&self, a: &usize, b: &usize) -> i64 {
        self.matrix[*a - 1][*b - 1]
    }
}

/// A finite sum `Σ c_a X^a` of commutative monomials.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusElement<K: TorusKey> {
    terms: BTreeMap<Monomial<K>, Laurent>,
}

impl<K: TorusKey> Default for TorusElement<K> {
    fn default() -> Self {
        TorusElement {
            terms: BTreeMap::new(),
        }
    }
}

impl<K: TorusKey> TorusElement<K> {
    pub fn zero() -> Self {
        TorusElement::default()
    }

    pub fn one() -> Self {
        TorusElement::term(Monomial::one(), Laurent::one())
    }

    pub fn term(m: Monomial<K>, c: Laurent) -> Self {
        let mut e = TorusElement::zero();
        e.add_term(m, &c);
        e
    }

    /// The commutative monomial `X^m` with coefficient 1.
    pub fn monomial(m: Monomial<K>) -> Self {
        TorusElement::term(m, Laurent::one())
    }

    pub fn var(k: K) -> Self {
        TorusElement::monomial(Monomial::var(k))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<K>, &Laurent)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial<K>) -> Laurent {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: Monomial<K>, c: &Laurent) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_default();
        entry.add_assign(c);
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add_assign(&mut self, other: &TorusElement<K>) {
        for (m, c) in other.terms() {
            self.add_term(m.clone(), c);
        }
    }

    pub fn sub_assign(&mut self, other: &TorusElement<K>) {
        for (m, c) in other.terms() {
            self.add_term(m.clone(), &c.neg());
        }
    }

    pub fn add(&self, other: &TorusElement<K>) -> TorusElement<K> {
        let mut r = self.clone();
        r.add_assign(other);
        r
    }

    pub fn sub(&self, other: &TorusElement<K>) -> TorusElement<K> {
        let mut r = self.clone();
        r.sub_assign(other);
        r
    }

    /// Multiplies every coefficient by a scalar Laurent polynomial.
    pub fn scale(&self, c: &Laurent) -> TorusElement<K> {
        let mut r = TorusElement::zero();
        for (m, d) in self.terms() {
            r.add_term(m.clone(), &d.mul(c));
        }
        r
    }

    /// Multiplies by `t^{k/2}`.
    pub fn shift(&self, half: i64) -> TorusElement<K> {
        TorusElement {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.shift(half)))
                .collect(),
        }
    }

    /// The bar involution.
    pub fn bar(&self) -> TorusElement<K> {
        TorusElement {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.bar()))
                .collect(),
        }
    }

    pub fn is_bar_invariant(&self) -> bool {
        self.terms.values().all(Laurent::is_bar_invariant)
    }

    /// Specialization at `t^{1/2} = 1` (still an element, with constant coefficients).
    pub fn ev1(&self) -> TorusElement<K> {
        let mut r = TorusElement::zero();
        for (m, c) in self.terms() {
            r.add_term(m.clone(), &Laurent::monomial(c.ev1(), 0));
        }
        r
    }

    /// Leading monomial for the lexicographic group order.
    pub fn leading(&self) -> Option<(&Monomial<K>, &Laurent)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Relabels generators term by term (monomials are mapped as commutative monomials).
    pub fn map_keys<L: TorusKey, F: Fn(&K) -> L>(&self, f: F) -> TorusElement<L> {
        let mut r = TorusElement::zero();
        for (m, c) in self.terms() {
            r.add_term(m.map_keys(&f), c);
        }
        r
    }

    /// Keeps the terms whose monomials satisfy `keep`.
    pub fn filter_terms<F: Fn(&Monomial<K>) -> bool>(&self, keep: F) -> TorusElement<K> {
        TorusElement {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Canonical text form: terms in key order, `t^{k/2}` coefficients.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms() {
            let mono = m.render();
            let coeff = if let Some((cc, h)) = c.as_monomial() {
                let tp = if h == 0 { String::new() } else { t_power(h) };
                match (cc, tp.is_empty(), m.is_one()) {
                    (1, true, _) => String::new(),
                    (-1, true, _) => "-".into(),
                    (1, false, _) => tp,
                    (-1, false, _) => format!("-{tp}"),
                    (k, _, _) => format!("{k}{tp}"),
                }
            } else {
                format!("({c})")
            };
            if mono == "1" && (coeff.is_empty() || coeff == "-") {
                parts.push(format!("{coeff}1"));
            } else if mono == "1" {
                parts.push(coeff);
            } else if coeff.is_empty() || coeff == "-" {
                parts.push(format!("{coeff}{mono}"));
            } else {
                parts.push(format!("{coeff}*{mono}"));
            }
        }
        parts.join(" + ").replace("+ -", "- ")
    }

    /// Serializable form.
    pub fn to_json(&self) -> TorusJson {
        let mut terms = Vec::new();
        for (m, c) in self.terms() {
            for (h, k) in c.iter() {
                terms.push(TermJson {
                    t_half: h,
                    exps: m.exps().iter().map(|(key, e)| (key.label(), *e)).collect(),
                    coeff: k,
                });
            }
        }
        TorusJson { terms }
    }

    pub fn from_json(j: &TorusJson) -> Result<Self> {
        let mut r = TorusElement::zero();
        for t in &j.terms {
            let mut pairs = Vec::new();
            for (label, e) in &t.exps {
                pairs.push((K::parse_label(label)?, *e));
            }
            r.add_term(Monomial::from_pairs(pairs), &Laurent::monomial(t.coeff, t.t_half));
        }
        Ok(r)
    }
}

/// JSON shape `{"terms":[{"t_half":k,"exps":{"Y(i,p)":e},"coeff":c}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusJson {
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub t_half: i64,
    pub exps: BTreeMap<String, i64>,
    pub coeff: i64,
}

/// A quantum torus: the multiplication context for [`TorusElement`]s.
#[derive(Clone)]
pub struct QuantumTorus<K: TorusKey> {
    form: Arc<dyn BilinearForm<K>>,
}

impl<K: TorusKey> fmt::Debug for QuantumTorus<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("QuantumTorus")
    }
}

impl<K: TorusKey> QuantumTorus<K> {
    pub fn new(form: Arc<dyn BilinearForm<K>>) -> Self {
        QuantumTorus { form }
    }

    /// The commutative Laurent polynomial ring (`Λ = 0`).
    pub fn commutative() -> Self {
        QuantumTorus {
            form: Arc::new(ZeroForm),
        }
    }

    /// `Λ(a, b) = Σ a_i b_j Λ_ij`.
    pub fn pairing(&self, a: &Monomial<K>, b: &Monomial<K>) -> i64 {
        let mut acc = 0i64;
        for (ka, ea) in a.exps() {
            for (kb, eb) in b.exps() {
                acc += ea * eb * self.form.form(ka, kb);
            }
        }
        acc
    }

    pub fn form(&self, a: &K, b: &K) -> i64 {
        self.form.form(a, b)
    }

    /// Product of two commutative monomials: `X^a X^b = t^{Λ(a,b)/2} X^{a+b}`.
    pub fn mul_monomials(&self, a: &Monomial<K>, b: &Monomial<K>) -> (i64, Monomial<K>) {
        (self.pairing(a, b), a.mul(b))
    }

    pub fn mul(&self, x: &TorusElement<K>, y: &TorusElement<K>) -> TorusElement<K> {
        let mut r = TorusElement::zero();
        for (ma, ca) in x.terms() {
            for (mb, cb) in y.terms() {
                let (h, m) = self.mul_monomials(ma, mb);
                r.add_term(m, &ca.mul(cb).shift(h));
            }
        }
        r
    }

    pub fn mul_all<'a, I: IntoIterator<Item = &'a TorusElement<K>>>(&self, it: I) -> TorusElement<K> {
        it.into_iter()
            .fold(TorusElement::one(), |acc, x| self.mul(&acc, x))
    }

    pub fn pow(&self, x: &TorusElement<K>, n: u32) -> TorusElement<K> {
        (0..n).fold(TorusElement::one(), |acc, _| self.mul(&acc, x))
    }

    /// The half-exponent `c` with `Π^→ X_{k}^{e_k} = t^{c/2} X^{a}` for the
    /// given ordered list of factors.
    pub fn ordered_product_shift(&self, factors: &[(K, i64)]) -> i64 {
        let mut acc = 0i64;
        for (x, (ka, ea)) in factors.iter().enumerate() {
            for (kb, eb) in &factors[x + 1..] {
                acc += ea * eb * self.form.form(ka, kb);
            }
        }
        acc
    }

    /// The commutative monomial expressed relative to an ordered product:
    /// `X^a = t^{−½ Σ_{x<y} a_x a_y Λ_xy} Π^→ X_x^{a_x}`; returns the shift.
    pub fn commutative_shift(&self, factors: &[(K, i64)]) -> i64 {
        -self.ordered_product_shift(factors)
    }

    /// The ordered product `Π^→ X_k^{e_k}` as an element.
    pub fn ordered_product(&self, factors: &[(K, i64)]) -> TorusElement<K> {
        let m = Monomial::from_pairs(factors.iter().cloned());
        TorusElement::term(m, Laurent::monomial(1, self.ordered_product_shift(factors)))
    }

    /// t-commutator exponent: `x y = t^{c} y x` holds for monomials with `c = Λ(a,b)`.
    pub fn commutation_exponent(&self, a: &Monomial<K>, b: &Monomial<K>) -> i64 {
        self.pairing(a, b)
    }

    /// Finds `R` with `R · d = n`, by peeling lexicographic leading terms.
    pub fn right_divide(
        &self,
        n: &TorusElement<K>,
        d: &TorusElement<K>,
        budget: usize,
    ) -> Result<TorusElement<K>> {
        self.divide(n, d, budget, true)
    }

    /// Finds `L` with `d · L = n`.
    pub fn left_divide(
        &self,
        n: &TorusElement<K>,
        d: &TorusElement<K>,
        budget: usize,
    ) -> Result<TorusElement<K>> {
        self.divide(n, d, budget, false)
    }

    fn divide(
        &self,
        n: &TorusElement<K>,
        d: &TorusElement<K>,
        budget: usize,
        right: bool,
    ) -> Result<TorusElement<K>> {
        let (dlead, dcoef) = match d.leading() {
            Some((m, c)) => (m.clone(), c.clone()),
            None => return Err(Error::NotDivisible("division by zero".into())),
        };
        let dmin = d
            .terms()
            .map(|(m, _)| m)
            .min_by(|a, b| a.lex_cmp(b))
            .cloned()
            .unwrap();
        let floor = match n.terms().map(|(m, _)| m).min_by(|a, b| a.lex_cmp(b)) {
            Some(m) => m.div(&dmin),
            None => return Ok(TorusElement::zero()),
        };
        let mut rem = n.clone();
        let mut quot = TorusElement::zero();
        let mut steps = 0usize;
        while let Some((lm, lc)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            steps += 1;
            if steps > budget {
                return Err(Error::BudgetExhausted {
                    budget,
                    context: "quantum torus division".into(),
                });
            }
            let r = lm.div(&dlead);
            if r.lex_cmp(&floor) == Ordering::Less {
                return Err(Error::NotDivisible("non-zero remainder".into()));
            }
            let h = if right {
                self.pairing(&r, &dlead)
            } else {
                self.pairing(&dlead, &r)
            };
            let c = lc.div_exact(&dcoef.shift(h))?;
            let piece = TorusElement::term(r, c);
            let prod = if right {
                self.mul(&piece, d)
            } else {
                self.mul(d, &piece)
            };
            rem.sub_assign(&prod);
            quot.add_assign(&piece);
        }
        Ok(quot)
    }
}

// ---------------------------------------------------------------------------
// The torus 𝒴_t of (q,t)-characters.

/// `𝒩(i,p; j,s) = c̃_ij(p−s−d_i) − c̃_ij(p−s+d_i) − c̃_ij(s−p−d_i) + c̃_ij(s−p+d_i)`.
pub fn n_pairing(cartan: &CartanData, i: usize, p: i64, j: usize, s: i64) -> i64 {
    let d = cartan.d(i);
    let c = |u: i64| cartan.ctilde(i, j, u);
    c(p - s - d) - c(p - s + d) - c(s - p - d) + c(s - p + d)
}

/// The pairing `𝒩` as a form on `Y`-labels.
#[derive(Debug, Clone)]
pub struct NForm {
    cartan: CartanData,
}

impl NForm {
    pub fn new(cartan: CartanData) -> Self {
        NForm { cartan }
    }
}

impl BilinearForm<YKey> for NForm {
    fn form(&self, a: &YKey, b: &YKey) -> i64 {
        n_pairing(&self.cartan, a.i, a.p, b.i, b.p)
    }
}

/// The quantum torus `𝒴_t` of a simple Lie algebra `𝔤` together with a
/// parity function `ε`, which fixes the index set
/// `Î = {(i, p) | p ≡ ε_i mod 2}`.
#[derive(Debug, Clone)]
pub struct YTorus {
    cartan: CartanData,
    epsilon: Vec<i64>,
    torus: QuantumTorus<YKey>,
}

impl YTorus {
    /// Checks `ε_i ≡ ε_j + min(d_i, d_j) mod 2` for `i ∼ j`.
    pub fn new(cartan: CartanData, epsilon: Vec<i64>) -> Result<Self> {
        if epsilon.len() != cartan.rank() {
            return Err(Error::InvalidQDatum(format!(
                "parity function has {} entries for rank {}",
                epsilon.len(),
                cartan.rank()
            )));
        }
        let epsilon: Vec<i64> = epsilon.iter().map(|e| e.rem_euclid(2)).collect();
        for i in 1..=cartan.rank() {
            for j in cartan.neighbors(i) {
                let want = (epsilon[j - 1] + cartan.d(i).min(cartan.d(j))).rem_euclid(2);
                if epsilon[i - 1] != want {
                    return Err(Error::InvalidQDatum(format!(
                        "parity function violates ε_{i} ≡ ε_{j} + min(d_{i}, d_{j}) mod 2"
                    )));
                }
            }
        }
        let torus = QuantumTorus::new(Arc::new(NForm::new(cartan.clone())));
        Ok(YTorus {
            cartan,
            epsilon,
            torus,
        })
    }

    /// The torus attached to the parity function of a Q-datum.
    pub fn for_qdatum(q: &QDatum) -> Self {
        let eps = (1..=q.folded().rank()).map(|i| q.epsilon(i)).collect();
        YTorus::new(q.folded().clone(), eps).expect("Q-data carry a valid parity function")
    }

    /// The standard parity `ε_i ≡ (distance to vertex 1 weighted by min d)`.
    pub fn standard(cartan: CartanData) -> Self {
        let n = cartan.rank();
        let mut eps = vec![-1i64; n];
        eps[0] = 0;
        let mut stack = vec![1usize];
        while let Some(i) = stack.pop() {
            for j in cartan.neighbors(i) {
                if eps[j - 1] < 0 {
                    eps[j - 1] = (eps[i - 1] + cartan.d(i).min(cartan.d(j))).rem_euclid(2);
                    stack.push(j);
                }
            }
        }
        YTorus::new(cartan, eps).expect("a tree admits a parity function")
    }

    /// A torus whose index set `Î` contains `(i, p)`; parity functions are
    /// determined up to a global flip.
    pub fn containing(cartan: CartanData, i: usize, p: i64) -> Result<Self> {
        cartan.validate(i)?;
        let yt = YTorus::standard(cartan);
        if yt.in_ihat(i, p) {
            return Ok(yt);
        }
        let flipped = yt.epsilon.iter().map(|e| e + 1).collect();
        YTorus::new(yt.cartan, flipped)
    }

    /// A torus whose index set contains every variable of `m`.
    pub fn for_monomial(cartan: CartanData, m: &Monomial<YKey>) -> Result<Self> {
        let yt = match m.exps().first() {
            Some((k, _)) => YTorus::containing(cartan, k.i, k.p)?,
            None => YTorus::standard(cartan),
        };
        yt.check_ihat(m)?;
        Ok(yt)
    }

    pub fn cartan(&self) -> &CartanData {
        &self.cartan
    }

    pub fn torus(&self) -> &QuantumTorus<YKey> {
        &self.torus
    }

    pub fn epsilon(&self, i: usize) -> i64 {
        self.epsilon[i - 1]
    }

    /// `(i, p) ∈ Î`.
    pub fn in_ihat(&self, i: usize, p: i64) -> bool {
        i >= 1 && i <= self.cartan.rank() && (p - self.epsilon[i - 1]).rem_euclid(2) == 0
    }

    fn check_ihat(&self, m: &Monomial<YKey>) -> Result<()> {
        match m.exps().iter().find(|(k, _)| !self.in_ihat(k.i, k.p)) {
            Some((k, _)) => Err(Error::PointOutsideLattice { i: k.i, p: k.p }),
            None => Ok(()),
        }
    }

    pub fn n_pairing(&self, i: usize, p: i64, j: usize, s: i64) -> i64 {
        n_pairing(&self.cartan, i, p, j, s)
    }

    /// `𝒩(m, m′) = Σ u_{i,p}(m) u_{j,s}(m′) 𝒩(i,p; j,s)`.
    pub fn n_monomials(&self, m: &Monomial<YKey>, m2: &Monomial<YKey>) -> i64 {
        self.torus.pairing(m, m2)
    }

    /// The commutative monomial `m̲`.
    pub fn commutative_monomial(&self, m: &Monomial<YKey>) -> TorusElement<YKey> {
        TorusElement::monomial(m.clone())
    }

    /// `A_{i,p} = Y_{i,p−d_i} Y_{i,p+d_i} Π_{j∼i, |s−p|<d_i} Y_{j,s}^{−1}`,
    /// defined when `(i, p − d_i) ∈ Î`.
    pub fn a_monomial(&self, i: usize, p: i64) -> Result<Monomial<YKey>> {
        self.cartan.validate(i)?;
        let d = self.cartan.d(i);
        if !self.in_ihat(i, p - d) {
            return Err(Error::PointOutsideLattice { i, p: p - d });
        }
        let mut exps = vec![(YKey::new(i, p - d), 1), (YKey::new(i, p + d), 1)];
        for j in self.cartan.neighbors(i) {
            for s in (p - d + 1)..(p + d) {
                if self.in_ihat(j, s) {
                    exps.push((YKey::new(j, s), -1));
                }
            }
        }
        Ok(Monomial::from_pairs(exps))
    }

    /// `A̲_{i,p}^{e}` as a torus element.
    pub fn a_element(&self, i: usize, p: i64, e: i64) -> Result<TorusElement<YKey>> {
        Ok(TorusElement::monomial(self.a_monomial(i, p)?.pow(e)))
    }

    /// The exponents `n_{i,p} ≥ 0` with `m′ m⁻¹ = Π A_{i,p}^{n_{i,p}}`, or
    /// `None` when the ratio is not such a product.
    ///
    /// The loop simple roots are peeled from the top: the largest spectral
    /// parameter `T` in the ratio can only come from `A_{i,T−d_i}`.  The
    /// search window is the support hull padded by `2 r h∨`; running past
    /// it is reported as an exhausted budget.
    pub fn a_decomposition(
        &self,
        m: &Monomial<YKey>,
        m2: &Monomial<YKey>,
    ) -> Result<Option<BTreeMap<YKey, i64>>> {
        self.check_ihat(m)?;
        self.check_ihat(m2)?;
        let mut ratio = m2.div(m);
        let mut out = BTreeMap::new();
        if ratio.is_one() {
            return Ok(Some(out));
        }
        let pad = 2 * self.cartan.lacing() * self.cartan.dual_coxeter();
        let low = ratio.exps().iter().map(|(k, _)| k.p).min().unwrap() - pad;
        while !ratio.is_one() {
            let top = ratio.exps().iter().map(|(k, _)| k.p).max().unwrap();
            if top < low {
                return Err(Error::BudgetExhausted {
                    budget: pad as usize,
                    context: "Nakajima order search window".into(),
                });
            }
            let (key, e) = *ratio
                .exps()
                .iter()
                .find(|(k, _)| k.p == top)
                .expect("top entry exists");
            if e < 0 {
                return Ok(None);
            }
            let d = self.cartan.d(key.i);
            let a = self.a_monomial(key.i, top - d)?;
            ratio = ratio.div(&a.pow(e));
            *out.entry(YKey::new(key.i, top - d)).or_insert(0) += e;
        }
        Ok(Some(out))
    }

    /// `m ≤ m′` in the Nakajima order.
    pub fn nakajima_leq(&self, m: &Monomial<YKey>, m2: &Monomial<YKey>) -> Result<bool> {
        Ok(self.a_decomposition(m, m2)?.is_some())
    }

    pub fn mul(&self, x: &TorusElement<YKey>, y: &TorusElement<YKey>) -> TorusElement<YKey> {
        self.torus.mul(x, y)
    }

    /// `𝔇^{±1}` on monomials: `Y_{i,p} ↦ Y_{i*, p ± r h∨}`.
    pub fn dual_shift_monomial(&self, m: &Monomial<YKey>, sign: i64) -> Monomial<YKey> {
        let rh = self.cartan.lacing() * self.cartan.dual_coxeter();
        let mut cur = m.clone();
        for _ in 0..sign.unsigned_abs() {
            cur = cur.map_keys(|k| YKey::new(self.cartan.star(k.i), k.p + sign.signum() * rh));
        }
        cur
    }

    /// `𝔇_t^{±1}` (applied `|sign|` times): `m̲ ↦ (𝔇^{±1} m)̲`.
    pub fn dual_shift(&self, x: &TorusElement<YKey>, sign: i64) -> TorusElement<YKey> {
        let mut out = TorusElement::zero();
        for (m, c) in x.terms() {
            out.add_term(self.dual_shift_monomial(m, sign), c);
        }
        out
    }
}

/// `y_{≤ξ}`: discards every monomial containing a factor `Y_{i,p}^{±1}` with
/// `(i, p) ∉ Î_≤ξ`.
pub fn truncate(x: &TorusElement<YKey>, q: &QDatum) -> TorusElement<YKey> {
    truncate_by(x, |k| q.folded_in_leq(k.i, k.p))
}

/// Truncation with respect to an arbitrary set of allowed variables.
pub fn truncate_by<F: Fn(&YKey) -> bool>(x: &TorusElement<YKey>, keep: F) -> TorusElement<YKey> {
    x.filter_terms(|m| m.exps().iter().all(|(k, _)| keep(k)))
}
