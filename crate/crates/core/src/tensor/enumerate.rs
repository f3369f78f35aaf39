use std::collections::BTreeSet;

use super::{canonical_form, ContractionTerm, FactorKind, Sort};
use crate::error::{Error, Result};

/// Non-metric factors available in codimension `codim`.
fn alphabet(codim: usize) -> Vec<FactorKind> {
    use FactorKind::*;
    if codim == 1 {
        vec![IntrinsicRiemann, TracelessH { normal: false }, MeanHTimesMetric { normal: false }]
    } else {
        vec![
            IntrinsicRiemann,
            NormalCurvature,
            TracelessH { normal: true },
            MeanHTimesMetric { normal: true },
        ]
    }
}

/// Weight a non-metric factor contributes once its lower slots are raised.
fn net_weight(f: FactorKind) -> i32 {
    f.weight() - f.arity() as i32
}

/// Multisets of non-metric factors (as sorted lists) with total net weight `w`.
fn factor_multisets(w: i32, codim: usize) -> Vec<Vec<FactorKind>> {
    fn rec(alpha: &[FactorKind], start: usize, left: i32, cur: &mut Vec<FactorKind>, out: &mut Vec<Vec<FactorKind>>) {
        if left == 0 {
            out.push(cur.clone());
        }
        for (i, &f) in alpha.iter().enumerate().skip(start) {
            let nw = net_weight(f);
            if nw >= 0 || left - nw > 0 {
                continue;
            }
            cur.push(f);
            rec(alpha, i, left - nw, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&alphabet(codim), 0, w, &mut Vec::new(), &mut out);
    out
}

/// All perfect matchings of `items`.
fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    if items.len() % 2 == 1 {
        return Vec::new();
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|&(j, _)| j + 1 != k).map(|(_, &x)| x).collect();
        for mut m in matchings(&rest) {
            m.insert(0, (first, items[k]));
            out.push(m);
        }
    }
    out
}

fn check_args(target_weight: i32, m: usize, codim: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Dimension(format!("enumeration needs m ≥ 2, got {m}")));
    }
    if codim != 1 && codim != 2 {
        return Err(Error::Dimension(format!("codimension must be 1 or 2, got {codim}")));
    }
    let _ = target_weight;
    Ok(())
}

/// Canonical terms of the given weight, sorted and without duplicates.
///
/// Each candidate is a multiset of curvature and second-fundamental-form
/// factors; metric inverses are attached to every perfect matching of their
/// lower slots.
pub fn enumerate_terms(target_weight: i32, m: usize, codim: usize) -> Result<Vec<ContractionTerm>> {
    check_args(target_weight, m, codim)?;
    let mut out = BTreeSet::new();
    if target_weight > 0 {
        return Ok(Vec::new());
    }
    for lower in factor_multisets(target_weight, codim) {
        let mut tangent = Vec::new();
        let mut normal = Vec::new();
        let mut slot = 0;
        for f in &lower {
            for s in f.slots() {
                match s {
                    Sort::Tangent => tangent.push(slot),
                    Sort::Normal => normal.push(slot),
                }
                slot += 1;
            }
        }
        let (nt, nn) = (tangent.len() / 2, normal.len() / 2);
        let inv_slots = 2 * (nt + nn);
        let mut factors = vec![FactorKind::MetricInverseTangent; nt];
        factors.extend(std::iter::repeat_n(FactorKind::MetricInverseNormal, nn));
        factors.extend(lower.iter().copied());
        for mt in matchings(&tangent) {
            for mn in matchings(&normal) {
                let mut pairing = Vec::with_capacity(inv_slots);
                for (k, &(a, b)) in mt.iter().chain(&mn).enumerate() {
                    pairing.push((2 * k, inv_slots + a));
                    pairing.push((2 * k + 1, inv_slots + b));
                }
                let term = ContractionTerm::new(factors.clone(), pairing)?;
                out.insert(canonical_form(&term));
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Independent generator: every perfect matching on all slots of every
/// admissible factor list, filtered by validity and reduced to canonical form.
///
/// Exponential in the slot count; meant for small weights.
pub fn enumerate_terms_bruteforce(target_weight: i32, m: usize, codim: usize) -> Result<Vec<ContractionTerm>> {
    check_args(target_weight, m, codim)?;
    use FactorKind::*;
    let kinds: Vec<FactorKind> = FactorKind::ALL
        .iter()
        .copied()
        .filter(|f| match f {
            MetricInverseNormal | NormalCurvature => codim == 2,
            TracelessH { normal } | MeanHTimesMetric { normal } => *normal == (codim == 2),
            _ => true,
        })
        .collect();
    let non_metric: Vec<FactorKind> = kinds.iter().copied().filter(|f| !f.is_metric_inverse()).collect();
    let mut out = BTreeSet::new();
    if target_weight > 0 {
        return Ok(Vec::new());
    }
    // each non-metric factor has weight < its slot count, so the number of
    // factors is bounded by -target_weight
    let budget = (-target_weight) as usize;
    let mut lists: Vec<Vec<FactorKind>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<FactorKind>> = vec![Vec::new()];
    for _ in 0..budget {
        let mut next = Vec::new();
        for l in &frontier {
            let start = l.last().map_or(0, |last| non_metric.iter().position(|f| f == last).unwrap());
            for f in &non_metric[start..] {
                let mut n = l.clone();
                n.push(*f);
                next.push(n);
            }
        }
        lists.extend(next.iter().cloned());
        frontier = next;
    }
    for lower in lists {
        let t_slots: usize = lower.iter().flat_map(|f| f.slots()).filter(|s| **s == Sort::Tangent).count();
        let n_slots: usize = lower.iter().flat_map(|f| f.slots()).filter(|s| **s == Sort::Normal).count();
        if t_slots % 2 == 1 || n_slots % 2 == 1 {
            continue;
        }
        let mut factors = vec![MetricInverseTangent; t_slots / 2];
        factors.extend(std::iter::repeat_n(MetricInverseNormal, n_slots / 2));
        factors.extend(lower.iter().copied());
        let w: i32 = factors.iter().map(|f| f.weight()).sum();
        if w != target_weight {
            continue;
        }
        let total: usize = factors.iter().map(|f| f.arity()).sum();
        let all: Vec<usize> = (0..total).collect();
        for pairing in matchings(&all) {
            if let Ok(term) = ContractionTerm::new(factors.clone(), pairing) {
                out.insert(canonical_form(&term));
            }
        }
    }
    Ok(out.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(terms: &[ContractionTerm]) -> Vec<String> {
        terms.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn weight_minus_two_surfaces() {
        let e = enumerate_terms(-2, 2, 1).unwrap();
        let r = e.iter().filter(|t| t.factors().contains(&FactorKind::IntrinsicRiemann)).count();
        assert_eq!(r, 3, "{:?}", names(&e));
        assert_eq!(e.len(), 9, "{:?}", names(&e));
        assert_eq!(e, enumerate_terms_bruteforce(-2, 2, 1).unwrap());
    }

    #[test]
    fn weight_minus_one() {
        let e = enumerate_terms(-1, 2, 1).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|t| t.factors().len() == 2));
        assert_eq!(e, enumerate_terms_bruteforce(-1, 2, 1).unwrap());
    }

    #[test]
    fn codim_two_adds_normal_curvature_class() {
        let e1 = enumerate_terms(-2, 2, 1).unwrap();
        let e2 = enumerate_terms(-2, 2, 2).unwrap();
        assert_eq!(e2.len(), e1.len() + 1);
        assert_eq!(
            e2.iter().filter(|t| t.factors().contains(&FactorKind::NormalCurvature)).count(),
            1
        );
        assert_eq!(e2, enumerate_terms_bruteforce(-2, 2, 2).unwrap());
    }

    #[test]
    fn positive_and_zero_weights() {
        assert!(enumerate_terms(3, 2, 1).unwrap().is_empty());
        assert_eq!(enumerate_terms(0, 2, 1).unwrap(), vec![ContractionTerm::empty()]);
        assert!(enumerate_terms(-2, 1, 1).is_err());
    }

    #[test]
    fn weight_minus_three_matches_bruteforce() {
        assert_eq!(enumerate_terms(-3, 2, 1).unwrap(), enumerate_terms_bruteforce(-3, 2, 1).unwrap());
    }
}
