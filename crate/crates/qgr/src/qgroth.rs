//! The bridge between quantum cluster data and (q,t)-characters.
//!
//! An adapted sequence `i` of a Q-datum `𝒬` gives the compatible pair
//! `(Λ_i, B̃_i)`; the map `η̃_i` sends the initial cluster variable `X_u`,
//! with `ρ_i(u) = (ı, p)`, to the commutative KR monomial `m̲^{(ı)}[p, ξ_ı]`.
//! Pushing forward-shifted cluster variables through `η̃_i` produces the
//! truncated `F_t` of KR modules, and the exchange relations become the
//! truncated quantum T-systems.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klalg;
use crate::qcluster::{build_pair, prev_occurrence, CompatiblePair, GVector, Seed};
use crate::qdatum::{QDatum, RepPoint, SeqRule};
use crate::qtorus::{
    truncate, MatrixForm, Monomial, QuantumTorus, TorusElement, TorusJson, YKey, YTorus,
};

// ---------------------------------------------------------------------------
// KR monomials.

/// The KR monomial `m^{(ı)}[a,b]` (or one of its half-open/open variants) on
/// the row `ı` of `Δ̂_[ξ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRMonomial {
    pub vertex: usize,
    pub a: i64,
    pub b: i64,
    pub open_left: bool,
    pub open_right: bool,
}

impl KRMonomial {
    /// Validates that both ends lie on the row of `vertex` in `Δ̂_[ξ]`.
    pub fn new(q: &QDatum, vertex: usize, a: i64, b: i64, open_left: bool, open_right: bool) -> Result<Self> {
        q.delta().validate(vertex)?;
        for p in [a, b] {
            if !q.in_bracket(RepPoint::new(vertex, p)) {
                return Err(Error::PointOutsideLattice { i: vertex, p });
            }
        }
        if a > b {
            return Err(Error::InvalidQDatum(format!("empty KR range [{a},{b}]")));
        }
        Ok(KRMonomial {
            vertex,
            a,
            b,
            open_left,
            open_right,
        })
    }

    /// `m^{(ı)}[a,b]`.
    pub fn closed(q: &QDatum, vertex: usize, a: i64, b: i64) -> Result<Self> {
        KRMonomial::new(q, vertex, a, b, false, false)
    }

    /// The spectral parameters of the factors, increasing.
    pub fn points(&self, q: &QDatum) -> Vec<i64> {
        let step = 2 * q.dbar(self.vertex);
        let lo = if self.open_left { self.a + step } else { self.a };
        let hi = if self.open_right { self.b - step } else { self.b };
        (0..)
            .map(|k| lo + k * step)
            .take_while(|&p| p <= hi)
            .collect()
    }

    /// The closed range `[a′, b′]` with the same factors, if non-empty.
    pub fn closed_range(&self, q: &QDatum) -> Option<(i64, i64)> {
        let pts = self.points(q);
        Some((*pts.first()?, *pts.last()?))
    }

    /// `Π Y_{ī,p}` over the admissible `p`.
    pub fn monomial(&self, q: &QDatum) -> Monomial<YKey> {
        let i = q.folding().fold(self.vertex);
        Monomial::from_pairs(self.points(q).into_iter().map(|p| (YKey::new(i, p), 1)))
    }
}

// ---------------------------------------------------------------------------
// The map η̃.

/// `η̃_i : 𝒯(Λ_i) → 𝒴_{t,≤ξ}` on a finite window of the adapted sequence.
#[derive(Debug, Clone)]
pub struct EtaMap {
    q: QDatum,
    seq: Vec<usize>,
    images: Vec<Monomial<YKey>>,
    yt: YTorus,
}

impl EtaMap {
    /// Registers the window `[1, seq.len()]`; `seq` must be adapted to `q`.
    pub fn new(q: &QDatum, seq: &[usize]) -> Result<Self> {
        let check = q.adapted_check(seq);
        if !check.adapted {
            return Err(Error::InvalidSequence(format!(
                "sequence is not adapted to ξ = {:?} (first offending index {:?})",
                q.xi(),
                check.first_offending
            )));
        }
        let mut images = Vec::with_capacity(seq.len());
        for u in 1..=seq.len() {
            let pt = q.rho(seq, u)?;
            let v = pt.vertex;
            images.push(KRMonomial::closed(q, v, pt.p, q.height(v))?.monomial(q));
        }
        Ok(EtaMap {
            q: q.clone(),
            seq: seq.to_vec(),
            images,
            yt: YTorus::for_qdatum(q),
        })
    }

    pub fn qdatum(&self) -> &QDatum {
        &self.q
    }

    pub fn seq(&self) -> &[usize] {
        &self.seq
    }

    pub fn ytorus(&self) -> &YTorus {
        &self.yt
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `m^{(ı)}[p, ξ_ı]` for `ρ_i(u) = (ı, p)`.
    pub fn image(&self, u: usize) -> Result<&Monomial<YKey>> {
        u.checked_sub(1)
            .and_then(|k| self.images.get(k))
            .ok_or_else(|| Error::InvalidSequence(format!("index {u} is not registered")))
    }

    /// `η̃(X^a) = (Π m_u^{a_u})̲`.
    pub fn monomial(&self, a: &Monomial<usize>) -> Result<Monomial<YKey>> {
        let mut out = Monomial::one();
        for &(u, e) in a.exps() {
            out = out.mul(&self.image(u)?.pow(e));
        }
        Ok(out)
    }

    /// `η̃` on an element written in commutative monomials.
    pub fn apply(&self, x: &TorusElement<usize>) -> Result<TorusElement<YKey>> {
        let mut out = TorusElement::zero();
        for (a, c) in x.terms() {
            out.add_term(self.monomial(a)?, c);
        }
        Ok(out)
    }

    /// Pairs `(u, v)` in the window with `Λ_{u,v} ≠ 𝒩(m_u, m_v)`, as
    /// `(u, v, Λ_{u,v}, 𝒩)`.
    pub fn l_equals_n_mismatches(&self, pair: &CompatiblePair) -> Vec<(usize, usize, i64, i64)> {
        let n = pair.n.min(self.len());
        let mut bad = Vec::new();
        for u in 1..=n {
            for v in 1..=n {
                let l = pair.lambda_uv(u, v);
                let nv = self.yt.n_monomials(&self.images[u - 1], &self.images[v - 1]);
                if l != nv {
                    bad.push((u, v, l, nv));
                }
            }
        }
        bad
    }

    /// The image of `X^{b_u}` for an exchangeable `u`.
    pub fn y_hat(&self, pair: &CompatiblePair, u: usize) -> Result<YHatReport> {
        if !pair.is_exchangeable(u) {
            return Err(Error::NotExchangeable { k: u });
        }
        let factors: Vec<(usize, i64)> = (1..=pair.n)
            .map(|k| (k, pair.b(k, u)))
            .filter(|(_, e)| *e != 0)
            .collect();
        // Ordered products on both sides: η̃ is multiplicative, so the
        // t-power of η̃(X^{b_u}) is the difference of the two normalizations.
        let cluster = QuantumTorus::new(Arc::new(MatrixForm {
            matrix: pair.lambda.clone(),
        }));
        let h_cluster = cluster.ordered_product_shift(&factors);
        let mut prod = TorusElement::one();
        for &(k, e) in &factors {
            prod = self.yt.mul(&prod, &TorusElement::monomial(self.image(k)?.pow(e)));
        }
        let (mono, coeff) = prod.terms().next().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let (c, h_y) = coeff
            .as_monomial()
            .ok_or_else(|| Error::Invariant("ordered product of monomials is not a monomial".into()))?;
        debug_assert_eq!(c, 1);
        let (i, p) = self.q.rho_bar(&self.seq, u)?;
        let expected = self.yt.a_monomial(i, p - self.yt.cartan().d(i))?.inv();
        Ok(YHatReport {
            u,
            image: mono,
            expected,
            t_half: h_y - h_cluster,
        })
    }

    /// `η̃_{i}(X_u) = η̃_{i′}(X_{π(u)})` for the commutation permutation `π`
    /// relating two adapted prefixes of the same datum.
    pub fn agrees_with_permuted(&self, other: &EtaMap, pi: &[usize]) -> Result<bool> {
        for (u, &v) in pi.iter().enumerate() {
            if self.image(u + 1)? != other.image(v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The outcome of the `ŷ` check at one exchangeable index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YHatReport {
    pub u: usize,
    pub image: Monomial<YKey>,
    pub expected: Monomial<YKey>,
    /// `η̃(X^{b_u}) = t^{t_half/2} (image)̲`.
    pub t_half: i64,
}

impl YHatReport {
    pub fn holds(&self) -> bool {
        self.image == self.expected && self.t_half == 0
    }
}

// ---------------------------------------------------------------------------
// Truncated F_t as cluster variables.

/// An adapted sequence of `q` long enough for cluster computations on
/// windows of size `n`.
pub fn default_sequence(q: &QDatum, n: usize) -> Result<Vec<usize>> {
    Ok(q.generate_adapted(n, SeqRule::Periodic)?.prefix)
}

/// The cluster variable `(∂₊^*)^k X_u` with `ρ_{∂₊^k i}(u) = (ı, p)`, written
/// in the initial torus of `(Λ_i, B̃_i)` on a window of size `n`, together
/// with its index in the shifted seed.  The window is enlarged until the
/// `k` forward shifts keep `u` inside it (at most `seq.len()`).
pub fn shifted_variable(
    q: &QDatum,
    seq: &[usize],
    vertex: usize,
    p: i64,
    k: usize,
) -> Result<(usize, Seed)> {
    if k > seq.len() {
        return Err(Error::OutsideWindow { i: vertex, p });
    }
    let qk = q.reflect_along(&seq[..k])?;
    let u = qk.rho_inv(&seq[k..], RepPoint::new(vertex, p))?;
    let rank = q.delta().rank();
    let mut n = (u + k + 2 * rank + 2).min(seq.len());
    loop {
        match shift_seed(q, seq, n, k) {
            Ok(seed) if seed.pair().n >= u => return Ok((u, seed)),
            Ok(_) | Err(Error::MoveNotApplicable { .. }) if n < seq.len() => {
                n = (n + n / 2 + rank).min(seq.len());
            }
            Ok(_) => return Err(Error::OutsideWindow { i: vertex, p }),
            Err(e) => return Err(e),
        }
    }
}

fn shift_seed(q: &QDatum, seq: &[usize], n: usize, k: usize) -> Result<Seed> {
    let mut seed = Seed::initial(build_pair(q.delta(), seq, n)?);
    let mut cur = seq.to_vec();
    for _ in 0..k {
        let (next, s) = seed.forward_shift(&cur, None)?;
        cur = next;
        seed = s;
    }
    Ok(seed)
}

/// `η̃_i (∂₊^*)^k X_u = F_t^{(ı)}[p, (s_{ı_k}⋯s_{ı_1}ξ)_ı]_{≤ξ}` where
/// `ρ_{∂₊^k i}(u) = (ı, p)`.
///
/// The result is required to have exactly one dominant monomial, the KR
/// monomial itself.
pub fn trunc_ft_kr(q: &QDatum, seq: &[usize], vertex: usize, p: i64, k: usize) -> Result<TorusElement<YKey>> {
    let (u, seed) = shifted_variable(q, seq, vertex, p, k)?;
    let eta = EtaMap::new(q, &seq[..seed.initial_pair().n])?;
    let image = eta.apply(seed.var(u))?;
    let top = q.reflect_along(&seq[..k])?.height(vertex);
    let m = KRMonomial::closed(q, vertex, p, top)?.monomial(q);
    let dominant: Vec<&Monomial<YKey>> = image
        .terms()
        .map(|(x, _)| x)
        .filter(|x| klalg::is_dominant(x))
        .collect();
    if dominant != vec![&m] {
        return Err(Error::Invariant(format!(
            "cluster image of the KR module at ({vertex},{p}) has dominant part {:?}",
            dominant.iter().map(|x| x.render()).collect::<Vec<_>>()
        )));
    }
    Ok(image)
}

/// The number of reflections `k` after which `(s_{ı_k}⋯s_{ı_1}ξ)_ı = b`.
pub fn shift_count(q: &QDatum, seq: &[usize], vertex: usize, b: i64) -> Result<usize> {
    let top = q.height(vertex);
    let step = 2 * q.dbar(vertex);
    if b > top || (top - b) % step != 0 {
        return Err(Error::PointOutsideLattice { i: vertex, p: b });
    }
    let j = ((top - b) / step) as usize;
    if j == 0 {
        return Ok(0);
    }
    seq.iter()
        .enumerate()
        .filter(|(_, &w)| w == vertex)
        .nth(j - 1)
        .map(|(k, _)| k + 1)
        .ok_or(Error::OutsideWindow { i: vertex, p: b })
}

/// `F_t(m^{(ı)}[a,b])_{≤ξ}` along the cluster route (`a ≤ b ≤ ξ_ı`).
pub fn kr_truncated(q: &QDatum, seq: &[usize], vertex: usize, a: i64, b: i64) -> Result<TorusElement<YKey>> {
    KRMonomial::closed(q, vertex, a, b)?;
    let k = shift_count(q, seq, vertex, b)?;
    trunc_ft_kr(q, seq, vertex, a, k)
}

/// The degree of the cluster variable `η̃⁻¹ F_t(Y_{ī,p})_{≤ξ}` together with
/// the predicted `e_u − e_{u⁻}`, `u = ρ_i⁻¹(ı, p)`.
pub fn fundamental_degree(q: &QDatum, seq: &[usize], vertex: usize, p: i64) -> Result<(GVector, GVector)> {
    let k = shift_count(q, seq, vertex, p)?;
    let (u_k, seed) = shifted_variable(q, seq, vertex, p, k)?;
    let got = seed.degree_of(u_k)?;
    let u = q.rho_inv(seq, RepPoint::new(vertex, p))?;
    let mut want = GVector::unit(u);
    let prev = prev_occurrence(seq, u);
    if prev > 0 {
        want.add_at(prev, -1);
    }
    Ok((got, want))
}

// ---------------------------------------------------------------------------
// Quantum T-systems.

/// Which `F_t`'s enter the T-system check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TsysMode {
    /// Thin `F_t` from the Frenkel–Mukhin/screening route.
    Full,
    /// Truncated `F_t` from the cluster route.
    Truncated,
}

/// The solved identity
/// `F[p,s) F(p,s] = t^{a} F(p,s) F[p,s] + t^{b} Π^→_{ȷ∼ı} F^{(ȷ)}(p,s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsysReport {
    pub lhs: TorusElement<YKey>,
    pub rhs_terms: [TorusElement<YKey>; 2],
    pub a_half: Option<i64>,
    pub b_half: Option<i64>,
    pub residual: TorusElement<YKey>,
    /// The `F^{(ȷ)}(p,s)` mutually `t`-commute.
    pub commuting: bool,
}

/// JSON shape `{lhs, rhs_terms, a_half, b_half, residual}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsysJson {
    pub lhs: TorusJson,
    pub rhs_terms: Vec<TorusJson>,
    pub a_half: Option<i64>,
    pub b_half: Option<i64>,
    pub residual: TorusJson,
}

impl TsysReport {
    /// The identity holds exactly with the solved powers.
    pub fn exact(&self) -> bool {
        self.a_half.is_some() && self.b_half.is_some() && self.residual.is_zero() && self.commuting
    }

    pub fn to_json(&self) -> TsysJson {
        TsysJson {
            lhs: self.lhs.to_json(),
            rhs_terms: self.rhs_terms.iter().map(|x| x.to_json()).collect(),
            a_half: self.a_half,
            b_half: self.b_half,
            residual: self.residual.to_json(),
        }
    }
}

/// `h` with `x y = t^{h/2} y x`, if the two elements `t`-commute.
pub fn t_commutation(yt: &YTorus, x: &TorusElement<YKey>, y: &TorusElement<YKey>) -> Option<i64> {
    let xy = yt.mul(x, y);
    let yx = yt.mul(y, x);
    let (m, c) = yx.leading()?;
    let h = xy.coeff(m).min_half()? - c.min_half()?;
    (xy == yx.shift(h)).then_some(h)
}

fn coefficient_power(x: &TorusElement<YKey>, m: &Monomial<YKey>) -> Option<i64> {
    match x.coeff(m).as_monomial() {
        Some((1, h)) => Some(h),
        _ => None,
    }
}

/// Solves `lhs = t^a x + t^b y` for `a, b` using the coefficients at the
/// leading monomials `mx` of `x` and `my` of `y`.
pub fn solve_tsys(
    yt: &YTorus,
    f_left: &TorusElement<YKey>,
    f_right: &TorusElement<YKey>,
    x_terms: (&TorusElement<YKey>, &TorusElement<YKey>),
    y_factors: &[TorusElement<YKey>],
    mx: &Monomial<YKey>,
    my: &Monomial<YKey>,
) -> TsysReport {
    let lhs = yt.mul(f_left, f_right);
    let x = yt.mul(x_terms.0, x_terms.1);
    let y = yt.torus().mul_all(y_factors.iter());
    let mut commuting = true;
    for a in 0..y_factors.len() {
        for b in a + 1..y_factors.len() {
            commuting &= t_commutation(yt, &y_factors[a], &y_factors[b]).is_some();
        }
    }
    let a_half = coefficient_power(&lhs, mx)
        .zip(coefficient_power(&x, mx))
        .map(|(l, r)| l - r);
    let after_x = match a_half {
        Some(a) => lhs.sub(&x.shift(a)),
        None => lhs.clone(),
    };
    let b_half = coefficient_power(&after_x, my)
        .zip(coefficient_power(&y, my))
        .map(|(l, r)| l - r);
    let residual = match b_half {
        Some(b) => after_x.sub(&y.shift(b)),
        None => after_x,
    };
    TsysReport {
        lhs,
        rhs_terms: [x, y],
        a_half,
        b_half,
        residual,
        commuting,
    }
}

/// The quantum T-system at `(ı, p), (ı, s) ∈ Δ̂_[ξ]`, `p < s`.
///
/// In [`TsysMode::Full`] the six `F_t` come from [`klalg::thin_ft`]; in
/// [`TsysMode::Truncated`] they are the cluster images of [`kr_truncated`]
/// (which needs `s ≤ ξ_ı`) and the identity is checked after truncation.
pub fn t_system_check(q: &QDatum, seq: &[usize], vertex: usize, p: i64, s: i64, mode: TsysMode) -> Result<TsysReport> {
    if p >= s {
        return Err(Error::InvalidQDatum(format!("T-system needs p < s, got [{p},{s}]")));
    }
    let kr = |v: usize, a: i64, b: i64, ol: bool, or: bool| -> Result<KRMonomial> {
        KRMonomial::new(q, v, a, b, ol, or)
    };
    let yt = YTorus::for_qdatum(q);
    let f = |m: &KRMonomial| -> Result<TorusElement<YKey>> {
        match (mode, m.closed_range(q)) {
            (_, None) => Ok(TorusElement::one()),
            (TsysMode::Full, Some(_)) => {
                Ok(klalg::thin_ft_on_torus(&yt, &m.monomial(q), klalg::DEFAULT_BUDGET)?.element)
            }
            (TsysMode::Truncated, Some((a, b))) => kr_truncated(q, seq, m.vertex, a, b),
        }
    };
    let left = kr(vertex, p, s, false, true)?;
    let right = kr(vertex, p, s, true, false)?;
    let inner = kr(vertex, p, s, true, true)?;
    let outer = kr(vertex, p, s, false, false)?;
    let mut neighbours = Vec::new();
    for w in q.delta().neighbors(vertex) {
        let step = 2 * q.dbar(w);
        // The row of `w` strictly between p and s.
        let lo = (p + 1..p + 1 + step).find(|&x| q.in_bracket(RepPoint::new(w, x)));
        let Some(lo) = lo else { continue };
        if lo >= s {
            neighbours.push(None);
            continue;
        }
        let hi = lo + ((s - 1 - lo) / step) * step;
        neighbours.push(Some(kr(w, lo, hi, false, false)?));
    }
    let y_factors = neighbours
        .iter()
        .map(|m| match m {
            Some(m) => f(m),
            None => Ok(TorusElement::one()),
        })
        .collect::<Result<Vec<_>>>()?;
    let mx = inner.monomial(q).mul(&outer.monomial(q));
    let my = neighbours
        .iter()
        .flatten()
        .fold(Monomial::one(), |acc, m| acc.mul(&m.monomial(q)));
    let (fl, fr, fi, fo) = (f(&left)?, f(&right)?, f(&inner)?, f(&outer)?);
    let mut report = solve_tsys(&yt, &fl, &fr, (&fi, &fo), &y_factors, &mx, &my);
    if mode == TsysMode::Truncated {
        report.residual = truncate(&report.residual, q);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtorus::Laurent;
    use rand::{Rng, SeedableRng};

    fn qd(name: &str, xi: Vec<i64>) -> QDatum {
        QDatum::from_name(name, xi).unwrap()
    }

    fn mono(pairs: &[(usize, i64, i64)]) -> Monomial<YKey> {
        Monomial::from_pairs(pairs.iter().map(|&(i, p, e)| (YKey::new(i, p), e)))
    }

    fn data() -> Vec<QDatum> {
        vec![
            qd("A2", vec![0, 1]),
            qd("A3", vec![-1, 0, -1]),
            qd("D4", vec![0, -1, 0, 0]),
            qd("B2", vec![-3, 0, -1]),
        ]
    }

    #[test]
    fn first_occurrences_map_to_single_variables() {
        for q in data() {
            let seq = default_sequence(&q, 12).unwrap();
            let eta = EtaMap::new(&q, &seq).unwrap();
            for v in 1..=q.delta().rank() {
                let u = seq.iter().position(|&w| w == v).unwrap() + 1;
                let i = q.folding().fold(v);
                assert_eq!(eta.image(u).unwrap(), &mono(&[(i, q.height(v), 1)]));
            }
            assert!(eta.image(13).is_err());
        }
    }

    #[test]
    fn lambda_equals_n_on_thirty_indices() {
        for q in data() {
            let seq = default_sequence(&q, 30).unwrap();
            let pair = build_pair(q.delta(), &seq, 30).unwrap();
            let eta = EtaMap::new(&q, &seq).unwrap();
            assert!(eta.l_equals_n_mismatches(&pair).is_empty(), "{:?}", q.xi());
        }
    }

    #[test]
    fn y_hat_is_an_inverse_loop_root_without_t_power() {
        for q in data() {
            let seq = default_sequence(&q, 30).unwrap();
            let pair = build_pair(q.delta(), &seq, 30).unwrap();
            let eta = EtaMap::new(&q, &seq).unwrap();
            for u in pair.exchangeable_indices() {
                let r = eta.y_hat(&pair, u).unwrap();
                assert!(r.holds(), "{:?} u={u}: {r:?}", q.xi());
            }
        }
    }

    #[test]
    fn eta_commutes_with_bar() {
        let q = qd("A3", vec![-1, 0, -1]);
        let seq = default_sequence(&q, 10).unwrap();
        let eta = EtaMap::new(&q, &seq).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let mut x = TorusElement::zero();
            for _ in 0..rng.gen_range(1..4) {
                let a = Monomial::from_pairs((1..=10).map(|u| (u, rng.gen_range(-1..=1))));
                x.add_term(a, &Laurent::monomial(rng.gen_range(-3..=3), rng.gen_range(-4..=4)));
            }
            assert_eq!(eta.apply(&x.bar()).unwrap(), eta.apply(&x).unwrap().bar());
        }
    }

    #[test]
    fn eta_is_multiplicative() {
        let q = qd("A2", vec![0, 1]);
        let seq = default_sequence(&q, 8).unwrap();
        let pair = build_pair(q.delta(), &seq, 8).unwrap();
        let seed = Seed::initial(pair);
        let eta = EtaMap::new(&q, &seq).unwrap();
        for u in 1..=8 {
            for v in 1..=8 {
                let x = seed.torus().mul(seed.var(u), seed.var(v));
                let lhs = eta.apply(&x).unwrap();
                let rhs = eta.ytorus().mul(
                    &eta.apply(seed.var(u)).unwrap(),
                    &eta.apply(seed.var(v)).unwrap(),
                );
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn commutation_equivalent_sequences_give_permuted_maps() {
        let q = qd("A3", vec![-1, 0, -1]);
        let a = default_sequence(&q, 18).unwrap();
        let b = q.generate_adapted(18, SeqRule::DecreasingSpectral).unwrap().prefix;
        assert_ne!(a, b);
        let n = 12;
        let pi = q.commutation_permutation(&a, &b, n).unwrap();
        let ea = EtaMap::new(&q, &a).unwrap();
        let eb = EtaMap::new(&q, &b).unwrap();
        assert!(ea.agrees_with_permuted(&eb, &pi).unwrap());
    }

    #[test]
    fn kr_monomials() {
        let q = qd("B2", vec![-3, 0, -1]);
        let m = KRMonomial::closed(&q, 1, -11, -3).unwrap();
        assert_eq!(m.monomial(&q), mono(&[(1, -11, 1), (1, -7, 1), (1, -3, 1)]));
        let open = KRMonomial::new(&q, 1, -11, -3, true, true).unwrap();
        assert_eq!(open.monomial(&q), mono(&[(1, -7, 1)]));
        let empty = KRMonomial::new(&q, 2, -2, 0, true, true).unwrap();
        assert!(empty.monomial(&q).is_one());
        assert!(empty.closed_range(&q).is_none());
        assert!(KRMonomial::closed(&q, 1, -5, -3).is_err());
    }

    #[test]
    fn unshifted_variables_are_kr_monomials() {
        let q = qd("A2", vec![0, 1]);
        let seq = default_sequence(&q, 40).unwrap();
        let x = trunc_ft_kr(&q, &seq, 1, -4, 0).unwrap();
        assert_eq!(x, TorusElement::monomial(mono(&[(1, -4, 1), (1, -2, 1), (1, 0, 1)])));
    }

    type Triple = (usize, i64, i64);

    #[test]
    fn cluster_route_matches_thin_ft_after_truncation() {
        let cases: Vec<(QDatum, Vec<Triple>)> = vec![
            (qd("A2", vec![0, 1]), vec![(1, -2, -2), (2, -1, -1), (1, -4, -2), (2, -3, -1), (1, -4, -4)]),
            (qd("A1", vec![0]), vec![(1, -2, -2), (1, -4, -2)]),
            (qd("A3", vec![-1, 0, -1]), vec![(1, -3, -3), (2, -2, -2), (2, -4, -2)]),
            (qd("B2", vec![-3, 0, -1]), vec![(1, -7, -7), (2, -2, -2), (2, -4, -2), (3, -5, -5)]),
        ];
        for (q, ranges) in cases {
            let seq = default_sequence(&q, 60).unwrap();
            let yt = YTorus::for_qdatum(&q);
            for (v, a, b) in ranges {
                let cluster = kr_truncated(&q, &seq, v, a, b).unwrap();
                let m = KRMonomial::closed(&q, v, a, b).unwrap().monomial(&q);
                let thin = klalg::thin_ft_on_torus(&yt, &m, klalg::DEFAULT_BUDGET).unwrap();
                assert_eq!(cluster, truncate(&thin.element, &q), "{:?} ({v},[{a},{b}])", q.xi());
            }
        }
    }

    #[test]
    fn fundamental_degrees() {
        for q in [qd("A2", vec![0, 1]), qd("A3", vec![-1, 0, -1])] {
            let seq = default_sequence(&q, 60).unwrap();
            for v in 1..=q.delta().rank() {
                for j in 0..3 {
                    let p = q.height(v) - 2 * q.dbar(v) * j;
                    let (got, want) = fundamental_degree(&q, &seq, v, p).unwrap();
                    assert_eq!(got, want, "{:?} ({v},{p})", q.xi());
                }
            }
        }
    }

    #[test]
    fn a1_full_t_system() {
        // Brute expansion with F_t(Y_{1,0}) = Y̲_{1,0} + Y̲_{1,2}⁻¹ etc.: the
        // products Y̲_{1,0}Y̲_{1,2}, Y̲_{1,0}Y̲_{1,4}⁻¹ and Y̲_{1,2}⁻¹Y̲_{1,4}⁻¹ all
        // carry t^{−1} (𝒩 = ∓2), while Y̲_{1,2}⁻¹Y̲_{1,2} = 1.
        let q = qd("A1", vec![0]);
        let seq = default_sequence(&q, 10).unwrap();
        let r = t_system_check(&q, &seq, 1, -2, 0, TsysMode::Full).unwrap();
        assert!(r.exact(), "{:?}", r.to_json());
        assert_eq!((r.a_half, r.b_half), (Some(-2), Some(0)));
        assert_eq!(r.rhs_terms[1], TorusElement::one());
    }

    #[test]
    fn a2_t_systems_full_and_truncated() {
        let q = qd("A2", vec![0, 1]);
        let seq = default_sequence(&q, 60).unwrap();
        for (v, p, s) in [(1, -2, 0), (2, -3, -1), (1, -4, 0), (2, -5, -1), (1, -4, -2)] {
            for mode in [TsysMode::Full, TsysMode::Truncated] {
                let r = t_system_check(&q, &seq, v, p, s, mode).unwrap();
                assert!(r.exact(), "({v},{p},{s}) {mode:?}: {}", r.residual.render());
            }
            let full = t_system_check(&q, &seq, v, p, s, TsysMode::Full).unwrap();
            let trunc = t_system_check(&q, &seq, v, p, s, TsysMode::Truncated).unwrap();
            assert_eq!((full.a_half, full.b_half), (trunc.a_half, trunc.b_half));
        }
    }

    #[test]
    fn truncated_t_system_is_the_exchange_relation() {
        let q = qd("A2", vec![0, 1]);
        let seq = default_sequence(&q, 20).unwrap();
        let pair = build_pair(q.delta(), &seq, 20).unwrap();
        let seed = Seed::initial(pair);
        let eta = EtaMap::new(&q, &seq).unwrap();
        let v = seq[0];
        let p = q.height(v) - 2;
        let mutated = eta.apply(seed.cluster_transform(1).unwrap().var(1)).unwrap();
        assert_eq!(mutated, kr_truncated(&q, &seq, v, p, p).unwrap());
        let r = t_system_check(&q, &seq, v, p, q.height(v), TsysMode::Truncated).unwrap();
        assert!(r.exact());
        assert_eq!(r.rhs_terms[0], TorusElement::monomial(eta.image(seq[1..].iter().position(|&w| w == v).unwrap() + 2).unwrap().clone()));
    }

    #[test]
    fn t_system_report_json_shape() {
        let q = qd("A1", vec![0]);
        let seq = default_sequence(&q, 10).unwrap();
        let r = t_system_check(&q, &seq, 1, -2, 0, TsysMode::Full).unwrap();
        let j = serde_json::to_value(r.to_json()).unwrap();
        let keys: Vec<&str> = j.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, vec!["a_half", "b_half", "lhs", "residual", "rhs_terms"]);
    }
}
