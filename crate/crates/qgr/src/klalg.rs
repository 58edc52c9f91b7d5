//! Small-rank character algorithms on the torus `𝒴_t`.
//!
//! * [`fm_qcharacter`] runs the Frenkel–Mukhin algorithm, producing the
//!   classical q-character `χ_q(L(m))` of a dominant monomial.
//! * [`thin_ft`] lifts a multiplicity-free q-character to `F_t(m)` by the
//!   thin ansatz (every commutative monomial with coefficient 1) and certifies
//!   the result with [`screening_check`] in every direction.
//! * [`kl_lt`] builds the standard products `E_t(m)` and triangularizes them
//!   against the Nakajima order, producing the (q,t)-characters `L_t(m)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qtorus::{Laurent, Monomial, TorusElement, TorusJson, YKey, YTorus};
use crate::rootdata::CartanData;

/// Default cap on the number of monomials produced by one computation.
pub const DEFAULT_BUDGET: usize = 10_000;

/// A computed character together with its leading data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharResult {
    pub element: TorusElement<YKey>,
    pub dominant: Monomial<YKey>,
    pub thin: bool,
    pub term_count: usize,
}

/// JSON form: the torus element format plus `dominant` and `thin`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharJson {
    #[serde(flatten)]
    pub element: TorusJson,
    pub dominant: BTreeMap<String, i64>,
    pub thin: bool,
}

impl CharResult {
    fn new(element: TorusElement<YKey>, dominant: Monomial<YKey>) -> Self {
        let thin = element
            .terms()
            .all(|(_, c)| c.ev1() == 1 && c.iter().count() == 1);
        let term_count = element.len();
        CharResult {
            element,
            dominant,
            thin,
            term_count,
        }
    }

    pub fn to_json(&self) -> CharJson {
        CharJson {
            element: self.element.to_json(),
            dominant: self
                .dominant
                .exps()
                .iter()
                .map(|(k, e)| (k.to_string(), *e))
                .collect(),
            thin: self.thin,
        }
    }
}

/// Every exponent is nonnegative.
pub fn is_dominant(m: &Monomial<YKey>) -> bool {
    m.is_nonneg()
}

/// Every exponent of a `Y_{i,·}` is nonnegative.
pub fn is_i_dominant(m: &Monomial<YKey>, i: usize) -> bool {
    m.exps().iter().all(|(k, e)| k.i != i || *e >= 0)
}

/// `Σ_p u_{i,p}(m)`, the weight of `m` along the `i`-th simple coroot.
pub fn i_weight(m: &Monomial<YKey>, i: usize) -> i64 {
    m.exps().iter().filter(|(k, _)| k.i == i).map(|(_, e)| e).sum()
}

// ---------------------------------------------------------------------------
// Frenkel–Mukhin.

/// Decomposes the `Y_i`-part of an `i`-dominant monomial into `q_i`-strings
/// in general position: repeatedly the longest string ascending (in steps of
/// `2d_i`) from the smallest remaining spectral parameter.
fn i_strings(m: &Monomial<YKey>, i: usize, d: i64) -> Vec<(i64, usize)> {
    let mut mult: BTreeMap<i64, i64> = m
        .exps()
        .iter()
        .filter(|(k, e)| k.i == i && *e > 0)
        .map(|(k, e)| (k.p, *e))
        .collect();
    let mut strings = Vec::new();
    while let Some((&a, _)) = mult.iter().next() {
        let mut cur = a;
        let mut len = 0;
        while let Some(e) = mult.get_mut(&cur) {
            *e -= 1;
            if *e == 0 {
                mult.remove(&cur);
            }
            len += 1;
            cur += 2 * d;
        }
        strings.push((a, len));
    }
    strings
}

/// The `U_{q_i}(L𝔰𝔩_2)` character of the `Y_i`-part of `m`, written as
/// `Σ coeff · Π A_{i,·}⁻¹` (keyed by the product of `A⁻¹`'s together with its
/// number of factors).  The string `Y_a Y_{a+2d} ⋯ Y_{a+2d(k−1)}` contributes
/// `Σ_{j=0}^{k} Π_{l=k−j}^{k−1} A⁻¹_{i,a+2dl+d}`.
fn sl2_lowerings(
    yt: &YTorus,
    m: &Monomial<YKey>,
    i: usize,
) -> Result<BTreeMap<Monomial<YKey>, (i64, usize)>> {
    let d = yt.cartan().d(i);
    let mut acc: BTreeMap<Monomial<YKey>, (i64, usize)> = BTreeMap::new();
    acc.insert(Monomial::one(), (1, 0));
    for (a, k) in i_strings(m, i, d) {
        let mut string_terms = vec![(Monomial::one(), 0usize)];
        let mut lower = Monomial::one();
        for j in 1..=k {
            let l = (k - j) as i64;
            lower = lower.mul(&yt.a_monomial(i, a + 2 * d * l + d)?.inv());
            string_terms.push((lower.clone(), j));
        }
        let mut next = BTreeMap::new();
        for (x, (c, n)) in &acc {
            for (y, n2) in &string_terms {
                let e = next.entry(x.mul(y)).or_insert((0, n + n2));
                e.0 += c;
            }
        }
        acc = next;
    }
    Ok(acc)
}

struct FmNode {
    depth: usize,
    colours: Vec<i64>,
    mult: i64,
}

/// The Frenkel–Mukhin algorithm over the (folded) Cartan datum `cartan`.
///
/// Fails with [`Error::FrenkelMukhin`] when a non-`i`-dominant monomial has
/// colouring different from its multiplicity, and with
/// [`Error::BudgetExhausted`] when more than `budget` monomials are produced;
/// partial output is never returned.
pub fn fm_qcharacter(cartan: &CartanData, m: &Monomial<YKey>, budget: usize) -> Result<CharResult> {
    if !is_dominant(m) {
        return Err(Error::FrenkelMukhin(format!("{} is not dominant", m.render())));
    }
    let yt = YTorus::for_monomial(cartan.clone(), m)?;
    fm_on_torus(&yt, m, budget)
}

/// [`fm_qcharacter`] on an explicit torus (its parity must contain `m`).
pub fn fm_on_torus(yt: &YTorus, m: &Monomial<YKey>, budget: usize) -> Result<CharResult> {
    let rank = yt.cartan().rank();
    let mut nodes: BTreeMap<Monomial<YKey>, FmNode> = BTreeMap::new();
    let mut queue: BTreeSet<(usize, Monomial<YKey>)> = BTreeSet::new();
    nodes.insert(
        m.clone(),
        FmNode {
            depth: 0,
            colours: vec![0; rank],
            mult: 0,
        },
    );
    queue.insert((0, m.clone()));
    while let Some((depth, mono)) = queue.pop_first() {
        let node = nodes.get_mut(&mono).expect("queued monomials are registered");
        let s = if depth == 0 {
            1
        } else {
            *node.colours.iter().max().unwrap()
        };
        node.mult = s;
        let colours = node.colours.clone();
        for i in 1..=rank {
            if !is_i_dominant(&mono, i) {
                if colours[i - 1] != s {
                    return Err(Error::FrenkelMukhin(format!(
                        "{} is not {i}-dominant but has colouring {} ≠ multiplicity {s}",
                        mono.render(),
                        colours[i - 1]
                    )));
                }
                continue;
            }
            let diff = s - colours[i - 1];
            if diff < 0 {
                return Err(Error::FrenkelMukhin(format!(
                    "{} has {i}-colouring {} above its multiplicity {s}",
                    mono.render(),
                    colours[i - 1]
                )));
            }
            if diff > 0 {
                for (lower, (c, n)) in sl2_lowerings(yt, &mono, i)? {
                    if n == 0 {
                        continue;
                    }
                    let child = mono.mul(&lower);
                    let entry = nodes.entry(child.clone()).or_insert_with(|| FmNode {
                        depth: depth + n,
                        colours: vec![0; rank],
                        mult: 0,
                    });
                    if entry.depth != depth + n {
                        return Err(Error::Invariant(format!(
                            "{} reached at two depths",
                            child.render()
                        )));
                    }
                    entry.colours[i - 1] += diff * c;
                    queue.insert((depth + n, child));
                }
                if nodes.len() > budget {
                    return Err(Error::BudgetExhausted {
                        budget,
                        context: "Frenkel-Mukhin closure".into(),
                    });
                }
            }
            nodes.get_mut(&mono).unwrap().colours[i - 1] = s;
        }
    }
    let mut element = TorusElement::zero();
    for (mono, node) in nodes {
        element.add_term(mono, &Laurent::monomial(node.mult, 0));
    }
    Ok(CharResult::new(element, m.clone()))
}

// ---------------------------------------------------------------------------
// Screening membership.

/// Outcome of [`screening_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreeningReport {
    pub passed: bool,
    pub residual: TorusElement<YKey>,
}

/// The generator `Y̲_{i,p}(1 + t⁻¹A̲⁻¹_{i,p+d_i})` of `K_{i,t}`; it equals the
/// bar-invariant `Y̲_{i,p} + (Y_{i,p}A⁻¹_{i,p+d_i})̲` in every type.
pub fn screening_block(yt: &YTorus, i: usize, p: i64) -> Result<TorusElement<YKey>> {
    let d = yt.cartan().d(i);
    let y = TorusElement::var(YKey::new(i, p));
    let tail = TorusElement::one().add(&yt.a_element(i, p + d, -1)?.shift(-2));
    Ok(yt.mul(&y, &tail))
}

/// An element of `K_{i,t}` with leading monomial `m̲` (coefficient 1): the
/// commutative monomial of the `j ≠ i` part times the ordered product of the
/// blocks of the `Y_i` factors.
fn peel_element(yt: &YTorus, m: &Monomial<YKey>, i: usize) -> Result<TorusElement<YKey>> {
    let rest = m.filter(|k| k.i != i);
    let mut e = TorusElement::monomial(rest);
    for (k, u) in m.exps().iter().filter(|(k, _)| k.i == i) {
        let block = screening_block(yt, i, k.p)?;
        for _ in 0..*u {
            e = yt.mul(&e, &block);
        }
    }
    let lead = e.coeff(m);
    let (c, h) = lead
        .as_monomial()
        .filter(|(c, _)| *c == 1)
        .ok_or_else(|| Error::Invariant(format!("block product has leading coefficient {lead:?}")))?;
    debug_assert_eq!(c, 1);
    Ok(e.shift(-h))
}

fn peel(yt: &YTorus, x: &TorusElement<YKey>, i: usize, from_back: bool) -> Result<ScreeningReport> {
    let mut r = x.clone();
    let mut steps = 0usize;
    loop {
        let Some(top) = r.terms().map(|(m, _)| i_weight(m, i)).max() else {
            return Ok(ScreeningReport {
                passed: true,
                residual: r,
            });
        };
        let (m, c) = {
            let mut candidates = r.terms().filter(|(m, _)| i_weight(m, i) == top);
            let (m, c) = if from_back {
                candidates.last().unwrap()
            } else {
                candidates.next().unwrap()
            };
            (m.clone(), c.clone())
        };
        if !is_i_dominant(&m, i) {
            return Ok(ScreeningReport {
                passed: false,
                residual: r,
            });
        }
        let e = peel_element(yt, &m, i)?;
        r = r.sub(&e.scale(&c));
        steps += 1;
        if steps > DEFAULT_BUDGET {
            return Err(Error::BudgetExhausted {
                budget: DEFAULT_BUDGET,
                context: "screening peel".into(),
            });
        }
    }
}

/// Decides membership of `x` in `K_{i,t}` by greedily peeling off, at the
/// maximal `i`-weight, block products with the same leading term.  On success
/// the peel is repeated in the opposite tie-breaking order and required to
/// succeed as well.
pub fn screening_check(yt: &YTorus, x: &TorusElement<YKey>, i: usize) -> Result<ScreeningReport> {
    yt.cartan().validate(i)?;
    let report = peel(yt, x, i, false)?;
    if report.passed && !peel(yt, x, i, true)?.passed {
        return Err(Error::Invariant(
            "screening peel depends on the tie-breaking order".into(),
        ));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Thin F_t.

/// `F_t(m)` for a thin module: the sum of the commutative monomials of
/// `χ_q(L(m))`, certified by [`screening_check`] for every `i`.
pub fn thin_ft(cartan: &CartanData, m: &Monomial<YKey>, budget: usize) -> Result<CharResult> {
    let yt = YTorus::for_monomial(cartan.clone(), m)?;
    thin_ft_on_torus(&yt, m, budget)
}

/// [`thin_ft`] on an explicit torus.
pub fn thin_ft_on_torus(yt: &YTorus, m: &Monomial<YKey>, budget: usize) -> Result<CharResult> {
    let fm = fm_on_torus(yt, m, budget)?;
    if !fm.thin {
        return Err(Error::NotThin(m.render()));
    }
    let mut element = TorusElement::zero();
    for (mono, _) in fm.element.terms() {
        element.add_term(mono.clone(), &Laurent::one());
    }
    for i in 1..=yt.cartan().rank() {
        let report = screening_check(yt, &element, i)?;
        if !report.passed {
            return Err(Error::ThinAnsatzRefuted {
                i,
                residual: report.residual.render(),
            });
        }
    }
    Ok(CharResult::new(element, m.clone()))
}

// ---------------------------------------------------------------------------
// Kazhdan–Lusztig triangularization.

/// `L_t(m)` together with the triangular decomposition of `E_t(m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KlResult {
    pub lt: CharResult,
    pub et: TorusElement<YKey>,
    /// `E_t(m) = L_t(m) + Σ p_{m′} L_t(m′)`, each `p_{m′} ∈ tℤ[t]`.
    pub corrections: Vec<(Monomial<YKey>, Laurent)>,
    /// Every coefficient of `L_t(m)` lies in `ℕ₀[t^{±1/2}]`.
    pub positive: bool,
}

/// The exponent (in half-units) of `t^{𝒩(m)}`:
/// `−Σ_{p<s} u_{i,p} u_{j,s} 𝒩(i,p; j,s)`.
pub fn normalization_half(yt: &YTorus, m: &Monomial<YKey>) -> i64 {
    let e = m.exps();
    let mut h = 0;
    for (a, ua) in e {
        for (b, ub) in e {
            if a.p < b.p {
                h -= ua * ub * yt.n_pairing(a.i, a.p, b.i, b.p);
            }
        }
    }
    h
}

struct KlEngine<'a, F: FnMut(&YKey) -> Result<TorusElement<YKey>>> {
    yt: &'a YTorus,
    fundamental: F,
    fundamentals: BTreeMap<YKey, TorusElement<YKey>>,
    memo: BTreeMap<Monomial<YKey>, KlResult>,
    budget: usize,
}

impl<F: FnMut(&YKey) -> Result<TorusElement<YKey>>> KlEngine<'_, F> {
    fn fundamental(&mut self, k: &YKey) -> Result<TorusElement<YKey>> {
        if let Some(f) = self.fundamentals.get(k) {
            return Ok(f.clone());
        }
        let f = (self.fundamental)(k)?;
        self.fundamentals.insert(*k, f.clone());
        Ok(f)
    }

    /// `E_t(m) = t^{𝒩(m)} Π^→_p Π_i F_t(Y_{i,p})^{u_{i,p}}`, increasing `p`.
    fn standard(&mut self, m: &Monomial<YKey>) -> Result<TorusElement<YKey>> {
        let mut by_p: BTreeMap<i64, Vec<(YKey, i64)>> = BTreeMap::new();
        for (k, u) in m.exps() {
            by_p.entry(k.p).or_default().push((*k, *u));
        }
        let mut e = TorusElement::one();
        for group in by_p.values() {
            let fs = group
                .iter()
                .map(|(k, _)| self.fundamental(k))
                .collect::<Result<Vec<_>>>()?;
            for a in 0..fs.len() {
                for b in a + 1..fs.len() {
                    if self.yt.mul(&fs[a], &fs[b]) != self.yt.mul(&fs[b], &fs[a]) {
                        return Err(Error::KazhdanLusztig(format!(
                            "F_t({}) and F_t({}) do not commute",
                            group[a].0, group[b].0
                        )));
                    }
                }
            }
            for (f, (_, u)) in fs.iter().zip(group) {
                for _ in 0..*u {
                    e = self.yt.mul(&e, f);
                }
            }
            if e.len() > self.budget {
                return Err(Error::BudgetExhausted {
                    budget: self.budget,
                    context: "standard product".into(),
                });
            }
        }
        let h = normalization_half(self.yt, m);
        let e = e.shift(h);
        if e.coeff(m) != Laurent::one() {
            return Err(Error::KazhdanLusztig(format!(
                "normalized standard product has coefficient {:?} at {}",
                e.coeff(m),
                m.render()
            )));
        }
        Ok(e)
    }

    fn lt(&mut self, m: &Monomial<YKey>) -> Result<KlResult> {
        if let Some(r) = self.memo.get(m) {
            return Ok(r.clone());
        }
        let et = self.standard(m)?;
        let mut x = et.clone();
        let mut corrections = Vec::new();
        let mut done: BTreeSet<Monomial<YKey>> = BTreeSet::new();
        loop {
            let mut next: Option<(usize, Monomial<YKey>)> = None;
            for (m2, _) in x.terms() {
                if m2 == m || !is_dominant(m2) || done.contains(m2) {
                    continue;
                }
                let dec = self.yt.a_decomposition(m2, m)?.ok_or_else(|| {
                    Error::KazhdanLusztig(format!(
                        "dominant {} of E_t({}) is not below it",
                        m2.render(),
                        m.render()
                    ))
                })?;
                let depth = dec.values().sum::<i64>() as usize;
                if next.as_ref().is_none_or(|(d, _)| depth < *d) {
                    next = Some((depth, m2.clone()));
                }
            }
            let Some((_, m2)) = next else { break };
            done.insert(m2.clone());
            let c = x.coeff(&m2);
            let mut p = Laurent::zero();
            let powers: BTreeSet<i64> = c.iter().map(|(h, _)| h.abs()).filter(|h| *h > 0).collect();
            for h in powers {
                let k = c.coeff(h) - c.coeff(-h);
                if k != 0 && h % 2 != 0 {
                    return Err(Error::KazhdanLusztig(format!(
                        "correction at {} needs the half power t^{{{h}/2}}",
                        m2.render()
                    )));
                }
                p.add_term(h, k);
            }
            if p.is_zero() {
                continue;
            }
            let sub = self.lt(&m2)?;
            x = x.sub(&sub.lt.element.scale(&p));
            corrections.push((m2, p));
        }
        if !x.is_bar_invariant() {
            return Err(Error::KazhdanLusztig(format!(
                "L_t({}) is not bar-invariant",
                m.render()
            )));
        }
        let positive = x.terms().all(|(_, c)| c.is_nonnegative());
        let result = KlResult {
            lt: CharResult::new(x, m.clone()),
            et,
            corrections,
            positive,
        };
        self.memo.insert(m.clone(), result.clone());
        Ok(result)
    }
}

/// `L_t(m)` from supplied fundamental `F_t(Y_{i,p})`.
pub fn kl_lt(
    yt: &YTorus,
    m: &Monomial<YKey>,
    fundamentals: &BTreeMap<YKey, TorusElement<YKey>>,
    budget: usize,
) -> Result<KlResult> {
    let lookup = |k: &YKey| {
        fundamentals
            .get(k)
            .cloned()
            .ok_or_else(|| Error::KazhdanLusztig(format!("F_t({k}) was not supplied")))
    };
    kl_lt_with(yt, m, lookup, budget)
}

/// `L_t(m)` with fundamental `F_t(Y_{i,p})` computed on demand by [`thin_ft`].
pub fn kl_lt_thin(yt: &YTorus, m: &Monomial<YKey>, budget: usize) -> Result<KlResult> {
    let thin = |k: &YKey| Ok(thin_ft_on_torus(yt, &Monomial::var(*k), budget)?.element);
    kl_lt_with(yt, m, thin, budget)
}

/// `L_t(m)` with fundamental `F_t(Y_{i,p})` produced by `fundamental`.
pub fn kl_lt_with<F: FnMut(&YKey) -> Result<TorusElement<YKey>>>(
    yt: &YTorus,
    m: &Monomial<YKey>,
    fundamental: F,
    budget: usize,
) -> Result<KlResult> {
    if !is_dominant(m) {
        return Err(Error::KazhdanLusztig(format!("{} is not dominant", m.render())));
    }
    let mut engine = KlEngine {
        yt,
        fundamental,
        fundamentals: BTreeMap::new(),
        memo: BTreeMap::new(),
        budget,
    };
    engine.lt(m)
}
