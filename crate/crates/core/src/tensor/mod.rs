//! Complete contractions of `g⁻¹`, `ḡ⁻¹`, `R`, `R⊥`, `h°` and `Hg`.
//!
//! A [`ContractionTerm`] is a list of factors together with a perfect matching
//! of their index slots. Every pair joins one slot of a metric inverse with
//! one slot of a curvature or second-fundamental-form factor of the same sort.

mod enumerate;
mod eval;
mod syntax;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enumerate::{enumerate_terms, enumerate_terms_bruteforce};
pub use eval::{evaluate_sum, evaluate_term, sums_equal_numeric, FrameSampler};
pub use syntax::{parse_sum, parse_term};

/// Coefficients below this magnitude are dropped when sums are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Tangent,
    Normal,
}

/// The factor alphabet.
///
/// The `normal` flag on the second-fundamental-form factors selects the
/// normal-valued version `h°_{ijα}`, `H_α g_{ij}` used in codimension 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FactorKind {
    MetricInverseTangent,
    MetricInverseNormal,
    IntrinsicRiemann,
    NormalCurvature,
    TracelessH { normal: bool },
    MeanHTimesMetric { normal: bool },
}

use FactorKind::*;
use Sort::{Normal, Tangent};

const KLEIN: &[[usize; 4]] = &[[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];

impl FactorKind {
    pub const ALL: [FactorKind; 8] = [
        MetricInverseTangent,
        MetricInverseNormal,
        IntrinsicRiemann,
        NormalCurvature,
        TracelessH { normal: false },
        TracelessH { normal: true },
        MeanHTimesMetric { normal: false },
        MeanHTimesMetric { normal: true },
    ];

    pub fn slots(self) -> &'static [Sort] {
        match self {
            MetricInverseTangent => &[Tangent, Tangent],
            MetricInverseNormal => &[Normal, Normal],
            IntrinsicRiemann => &[Tangent, Tangent, Tangent, Tangent],
            NormalCurvature => &[Tangent, Tangent, Normal, Normal],
            TracelessH { normal: false } | MeanHTimesMetric { normal: false } => &[Tangent, Tangent],
            TracelessH { normal: true } | MeanHTimesMetric { normal: true } => &[Tangent, Tangent, Normal],
        }
    }

    pub fn arity(self) -> usize {
        self.slots().len()
    }

    pub fn is_metric_inverse(self) -> bool {
        matches!(self, MetricInverseTangent | MetricInverseNormal)
    }

    pub fn is_normal_valued(self) -> bool {
        self.slots().contains(&Normal)
    }

    /// Exponent of `t` under `ḡ ↦ t² ḡ`, components taken in a fixed frame.
    pub fn weight(self) -> i32 {
        match self {
            MetricInverseTangent | MetricInverseNormal => -2,
            IntrinsicRiemann | NormalCurvature => 2,
            TracelessH { normal } | MeanHTimesMetric { normal } => {
                if normal {
                    2
                } else {
                    1
                }
            }
        }
    }

    /// Slot permutations that leave the factor unchanged without a sign.
    pub fn symmetries(self) -> Vec<Vec<usize>> {
        match self {
            IntrinsicRiemann => KLEIN.iter().map(|p| p.to_vec()).collect(),
            NormalCurvature => vec![vec![0, 1, 2, 3], vec![1, 0, 3, 2]],
            MetricInverseTangent | MetricInverseNormal => vec![vec![0, 1], vec![1, 0]],
            TracelessH { normal: false } | MeanHTimesMetric { normal: false } => vec![vec![0, 1], vec![1, 0]],
            TracelessH { normal: true } | MeanHTimesMetric { normal: true } => vec![vec![0, 1, 2], vec![1, 0, 2]],
        }
    }

    /// Name used in the text syntax; the normal-valued variants share it.
    pub fn name(self) -> &'static str {
        match self {
            MetricInverseTangent => "g-1",
            MetricInverseNormal => "gb-1",
            IntrinsicRiemann => "R",
            NormalCurvature => "Rn",
            TracelessH { .. } => "ho",
            MeanHTimesMetric { .. } => "Hg",
        }
    }
}

/// A complete contraction: factors and a perfect matching of their slots.
///
/// Slots are numbered globally, factor by factor, in list order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContractionTerm {
    factors: Vec<FactorKind>,
    pairing: Vec<(usize, usize)>,
}

impl ContractionTerm {
    /// Validates the matching; pairs are stored as sorted `(low, high)` in ascending order.
    pub fn new(factors: Vec<FactorKind>, pairing: Vec<(usize, usize)>) -> Result<ContractionTerm> {
        let sorts: Vec<(Sort, bool)> = factors
            .iter()
            .flat_map(|f| f.slots().iter().map(move |s| (*s, f.is_metric_inverse())))
            .collect();
        let total = sorts.len();
        let mut seen = vec![false; total];
        let mut pairs = Vec::with_capacity(pairing.len());
        for &(a, b) in &pairing {
            if a >= total || b >= total {
                return Err(Error::Structure(format!("slot {} out of range (term has {total} slots)", a.max(b))));
            }
            if a == b {
                return Err(Error::Structure(format!("slot {a} paired with itself")));
            }
            for s in [a, b] {
                if seen[s] {
                    return Err(Error::Structure(format!("slot {s} appears in two pairs")));
                }
                seen[s] = true;
            }
            if sorts[a].0 != sorts[b].0 {
                return Err(Error::Structure(format!("pair ({a},{b}) joins a tangent and a normal slot")));
            }
            if sorts[a].1 == sorts[b].1 {
                return Err(Error::Structure(format!(
                    "pair ({a},{b}) must join one metric-inverse slot with one other slot"
                )));
            }
            pairs.push((a.min(b), a.max(b)));
        }
        if let Some(free) = seen.iter().position(|s| !s) {
            return Err(Error::Structure(format!("slot {free} is not contracted")));
        }
        pairs.sort_unstable();
        Ok(ContractionTerm { factors, pairing: pairs })
    }

    /// The term with no factors, whose value is 1.
    pub fn empty() -> ContractionTerm {
        ContractionTerm {
            factors: Vec::new(),
            pairing: Vec::new(),
        }
    }

    pub fn factors(&self) -> &[FactorKind] {
        &self.factors
    }

    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    /// Global index of each factor's first slot.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.factors
            .iter()
            .map(|f| {
                let o = acc;
                acc += f.arity();
                o
            })
            .collect()
    }

    pub fn slot_count(&self) -> usize {
        self.factors.iter().map(|f| f.arity()).sum()
    }

    /// `(factor, local slot)` of a global slot.
    pub fn locate(&self, slot: usize) -> (usize, usize) {
        let mut acc = 0;
        for (k, f) in self.factors.iter().enumerate() {
            if slot < acc + f.arity() {
                return (k, slot - acc);
            }
            acc += f.arity();
        }
        panic!("slot {slot} out of range");
    }

    pub fn weight(&self) -> i32 {
        weight(self)
    }

    pub fn uses_normal_slots(&self) -> bool {
        self.factors.iter().any(|f| f.is_normal_valued())
    }

    pub fn canonical(&self) -> ContractionTerm {
        canonical_form(self)
    }
}

/// `Σ` of factor weights; the scaling exponent under `ḡ ↦ t² ḡ`.
pub fn weight(term: &ContractionTerm) -> i32 {
    term.factors.iter().map(|f| f.weight()).sum()
}

/// Every permutation of `0..n`, in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Lexicographically smallest representative of the term's class.
///
/// The class is generated by permuting factors of equal kind and applying
/// the sign-free slot symmetries of each factor.
pub fn canonical_form(term: &ContractionTerm) -> ContractionTerm {
    let offsets = term.offsets();
    // metric inverses become pairs of lower slots (factor, local slot)
    let mut partner = vec![usize::MAX; term.slot_count()];
    for &(a, b) in &term.pairing {
        partner[a] = b;
        partner[b] = a;
    }
    let mut tangent_inv = Vec::new();
    let mut normal_inv = Vec::new();
    let mut lower: Vec<(usize, FactorKind)> = Vec::new();
    for (k, f) in term.factors.iter().enumerate() {
        match f {
            MetricInverseTangent => tangent_inv.push((partner[offsets[k]], partner[offsets[k] + 1])),
            MetricInverseNormal => normal_inv.push((partner[offsets[k]], partner[offsets[k] + 1])),
            _ => lower.push((k, *f)),
        }
    }
    lower.sort_by_key(|&(k, f)| (f, k));

    // groups of equal kind, in canonical kind order
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &(_, f)) in lower.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if lower[g[0]].1 == f => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let nt = tangent_inv.len();
    let nn = normal_inv.len();
    let base = 2 * (nt + nn);
    let mut new_offsets = Vec::with_capacity(lower.len());
    let mut acc = base;
    for &(_, f) in &lower {
        new_offsets.push(acc);
        acc += f.arity();
    }

    // per group: choices of (member order, symmetry of each member)
    let group_choices: Vec<Vec<Vec<(usize, Vec<usize>)>>> = groups
        .iter()
        .map(|g| {
            let kind = lower[g[0]].1;
            let syms = kind.symmetries();
            let mut choices = Vec::new();
            for perm in permutations(g.len()) {
                let mut sym_idx = vec![0usize; g.len()];
                loop {
                    choices.push(
                        perm.iter()
                            .zip(&sym_idx)
                            .map(|(&p, &s)| (g[p], syms[s].clone()))
                            .collect::<Vec<_>>(),
                    );
                    let mut d = 0;
                    while d < sym_idx.len() {
                        sym_idx[d] += 1;
                        if sym_idx[d] < syms.len() {
                            break;
                        }
                        sym_idx[d] = 0;
                        d += 1;
                    }
                    if d == sym_idx.len() {
                        break;
                    }
                }
            }
            choices
        })
        .collect();

    let mut best: Option<(Vec<(usize, usize)>, Vec<(usize, usize)>)> = None;
    let mut counters = vec![0usize; groups.len()];
    let mut relabel = vec![usize::MAX; term.slot_count()];
    loop {
        // position within `lower` order the i-th member of each group lands on
        for (gi, g) in groups.iter().enumerate() {
            let choice = &group_choices[gi][counters[gi]];
            for (slot_pos, (member, sym)) in g.iter().zip(choice) {
                let (old_factor, _) = lower[*member];
                let new_off = new_offsets[*slot_pos];
                let old_off = offsets[old_factor];
                // symmetry sends old local slot s to new local slot sym[s]
                for (s, &t) in sym.iter().enumerate() {
                    relabel[old_off + s] = new_off + t;
                }
            }
        }
        let map_pairs = |inv: &[(usize, usize)]| {
            let mut v: Vec<(usize, usize)> = inv
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (relabel[a], relabel[b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            v.sort_unstable();
            v
        };
        let cand = (map_pairs(&tangent_inv), map_pairs(&normal_inv));
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
        let mut d = 0;
        while d < counters.len() {
            counters[d] += 1;
            if counters[d] < group_choices[d].len() {
                break;
            }
            counters[d] = 0;
            d += 1;
        }
        if d == counters.len() {
            break;
        }
    }
    let (tp, np) = best.expect("at least one labeling");
    let mut factors = vec![MetricInverseTangent; nt];
    factors.extend(std::iter::repeat_n(MetricInverseNormal, nn));
    factors.extend(lower.iter().map(|&(_, f)| f));
    let mut pairing = Vec::with_capacity(tp.len() * 2 + np.len() * 2);
    for (k, (a, b)) in tp.into_iter().chain(np).enumerate() {
        pairing.push((2 * k, a));
        pairing.push((2 * k + 1, b));
    }
    pairing.sort_unstable();
    ContractionTerm { factors, pairing }
}

/// A real linear combination of complete contractions, merged by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSum {
    terms: Vec<(f64, ContractionTerm)>,
}

impl ContractionSum {
    pub fn new(terms: Vec<(f64, ContractionTerm)>) -> ContractionSum {
        let mut merged: BTreeMap<ContractionTerm, f64> = BTreeMap::new();
        for (c, t) in terms {
            *merged.entry(canonical_form(&t)).or_insert(0.0) += c;
        }
        ContractionSum {
            terms: merged
                .into_iter()
                .filter(|(_, c)| c.abs() >= MERGE_TOLERANCE)
                .map(|(t, c)| (c, t))
                .collect(),
        }
    }

    pub fn single(term: ContractionTerm) -> ContractionSum {
        ContractionSum::new(vec![(1.0, term)])
    }

    pub fn terms(&self) -> &[(f64, ContractionTerm)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, other: &ContractionSum) -> ContractionSum {
        ContractionSum::new(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn scaled(&self, c: f64) -> ContractionSum {
        ContractionSum::new(self.terms.iter().map(|(a, t)| (a * c, t.clone())).collect())
    }

    pub fn minus(&self, other: &ContractionSum) -> ContractionSum {
        self.plus(&other.scaled(-1.0))
    }

    /// Common weight of all terms; `None` for the empty sum.
    pub fn weight(&self) -> Result<Option<i32>> {
        let mut w = None;
        for (_, t) in &self.terms {
            let tw = weight(t);
            match w {
                None => w = Some(tw),
                Some(x) if x != tw => return Err(Error::Weight { expected: x, found: tw }),
                _ => {}
            }
        }
        Ok(w)
    }

    pub fn uses_normal_slots(&self) -> bool {
        self.terms.iter().any(|(_, t)| t.uses_normal_slots())
    }

    /// `½ g^{ik} g^{jl} R_{ijkl}`, the Gauss curvature when `m = 2`.
    pub fn gauss_curvature() -> ContractionSum {
        parse_sum("0.5 * g-1(a,c) g-1(b,d) R(a,b,c,d)").expect("built-in")
    }

    /// `|h°|²`.
    pub fn traceless_sq(codim: usize) -> ContractionSum {
        let text = if codim == 1 {
            "g-1(a,c) g-1(b,d) ho(a,b) ho(c,d)"
        } else {
            "g-1(a,c) g-1(b,d) gb-1(p,q) ho(a,b,p) ho(c,d,q)"
        };
        parse_sum(text).expect("built-in")
    }

    /// `|H|² = m⁻² |tr_g(Hg)|²`.
    pub fn mean_sq(m: usize, codim: usize) -> ContractionSum {
        let text = if codim == 1 {
            "g-1(a,b) g-1(c,d) Hg(a,b) Hg(c,d)"
        } else {
            "g-1(a,b) g-1(c,d) gb-1(p,q) Hg(a,b,p) Hg(c,d,q)"
        };
        parse_sum(text).expect("built-in").scaled(1.0 / (m * m) as f64)
    }

    /// `½|h°|² + K`.
    pub fn conformal_willmore(codim: usize) -> ContractionSum {
        ContractionSum::traceless_sq(codim).scaled(0.5).plus(&ContractionSum::gauss_curvature())
    }
}

impl fmt::Display for ContractionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        syntax::write_term(self, f)
    }
}

impl fmt::Display for ContractionSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, t)) in self.terms.iter().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if t.factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag != 1.0 {
                write!(f, "{mag} * {t}")?;
            } else {
                write!(f, "{t}")?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for ContractionSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<ContractionSum> {
        parse_sum(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ContractionTerm {
        parse_term(s).unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&t("g-1(a,c) g-1(b,d) R(a,b,c,d)")), -2);
        assert_eq!(weight(&t("g-1(a,b) g-1(c,d) ho(a,c) ho(b,d)")), -2);
        assert_eq!(weight(&ContractionTerm::empty()), 0);
        assert_eq!(weight(&t("g-1(a,b) gb-1(p,q) Rn(a,b,p,q)")), -2);
    }

    #[test]
    fn riemann_square_patterns_differ() {
        let full = t("g-1(a,e) g-1(b,f) g-1(c,g) g-1(d,h) R(a,b,c,d) R(e,f,g,h)");
        let traced = t("g-1(a,b) g-1(c,e) g-1(d,f) g-1(g,h) R(a,b,c,d) R(g,h,e,f)");
        assert_ne!(canonical_form(&full), canonical_form(&traced));
        assert_eq!(weight(&full), -4);
    }

    #[test]
    fn factor_order_and_slot_swap_do_not_matter() {
        let a = t("g-1(a,b) g-1(c,d) ho(a,c) ho(b,d)");
        let b = t("ho(b,d) g-1(c,d) ho(a,c) g-1(b,a)");
        assert_eq!(canonical_form(&a), canonical_form(&b));
        let c = canonical_form(&a);
        assert_eq!(canonical_form(&c), c);
    }

    #[test]
    fn riemann_pair_swap() {
        let a = t("g-1(a,c) g-1(b,d) R(a,b,c,d)");
        let b = t("g-1(a,c) g-1(b,d) R(c,d,a,b)");
        let c = t("g-1(a,d) g-1(b,c) R(a,b,c,d)");
        assert_eq!(canonical_form(&a), canonical_form(&b));
        assert_ne!(canonical_form(&a), canonical_form(&c));
    }

    #[test]
    fn malformed_pairings_rejected() {
        let g = MetricInverseTangent;
        let h = TracelessH { normal: false };
        assert!(ContractionTerm::new(vec![g, h], vec![(0, 2), (1, 3)]).is_ok());
        assert!(ContractionTerm::new(vec![g, h], vec![(0, 2)]).is_err());
        assert!(ContractionTerm::new(vec![g, h], vec![(0, 0), (1, 3)]).is_err());
        assert!(ContractionTerm::new(vec![g, h], vec![(0, 1), (2, 3)]).is_err());
        assert!(ContractionTerm::new(vec![g, h], vec![(0, 2), (1, 2)]).is_err());
        assert!(ContractionTerm::new(vec![MetricInverseNormal, h], vec![(0, 2), (1, 3)]).is_err());
    }

    #[test]
    fn sums_merge_equivalent_terms() {
        let s = parse_sum("g-1(a,b) g-1(c,d) ho(a,c) ho(b,d) + 2 * ho(x,y) ho(z,w) g-1(x,z) g-1(y,w)").unwrap();
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[0].0, 3.0);
        let z = s.minus(&s);
        assert!(z.is_empty());
        assert_eq!(z.to_string(), "0");
    }
}
