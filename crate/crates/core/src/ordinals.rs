//! Finite ordinals, cardinal profiles and partial functions.
//!
//! Ordinals are natural numbers. A [`CardinalProfile`] splits `[0, lambda)`
//! into consecutive intervals `[mu_i, mu_{i+1})`; the successor cardinal
//! `mu_i^+` is modelled as `mu_i + 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Ordinal = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct CardinalProfile {
    lambda: Ordinal,
    mu: Vec<Ordinal>,
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    lambda: Ordinal,
    kappa: usize,
    mu: Vec<Ordinal>,
}

impl TryFrom<ProfileDoc> for CardinalProfile {
    type Error = Error;

    fn try_from(doc: ProfileDoc) -> Result<Self> {
        let p = CardinalProfile::new(doc.mu)?;
        if p.lambda != doc.lambda || p.kappa() != doc.kappa {
            return Err(Error::InvalidProfile(format!(
                "lambda/kappa ({}, {}) disagree with mu (implies {}, {})",
                doc.lambda,
                doc.kappa,
                p.lambda,
                p.kappa()
            )));
        }
        Ok(p)
    }
}

impl From<CardinalProfile> for ProfileDoc {
    fn from(p: CardinalProfile) -> Self {
        ProfileDoc { lambda: p.lambda, kappa: p.kappa(), mu: p.mu }
    }
}

impl CardinalProfile {
    /// Builds a profile from `<mu_0, ..., mu_kappa>`; `lambda = mu_kappa`.
    pub fn new(mu: Vec<Ordinal>) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::InvalidProfile("mu needs at least two entries".into()));
        }
        if mu[0] != 0 {
            return Err(Error::InvalidProfile("mu_0 must be 0".into()));
        }
        for w in mu.windows(2) {
            if w[1] < w[0] + 2 {
                return Err(Error::InvalidProfile(format!(
                    "need mu_(i+1) >= mu_i + 2, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        let lambda = *mu.last().unwrap();
        Ok(CardinalProfile { lambda, mu })
    }

    /// The degenerate single-interval profile `<0, lambda>`.
    pub fn regular(lambda: Ordinal) -> Result<Self> {
        if lambda < 2 {
            return Err(Error::InvalidProfile("lambda must be >= 2".into()));
        }
        Self::new(vec![0, lambda])
    }

    pub fn lambda(&self) -> Ordinal {
        self.lambda
    }

    pub fn kappa(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn mu(&self, i: usize) -> Ordinal {
        self.mu[i]
    }

    pub fn mu_plus(&self, i: usize) -> Ordinal {
        self.mu[i] + 1
    }

    pub fn mus(&self) -> &[Ordinal] {
        &self.mu
    }

    /// The unique `i` with `mu_i <= alpha < mu_{i+1}`.
    pub fn i_of(&self, alpha: Ordinal) -> Result<usize> {
        if alpha >= self.lambda {
            return Err(Error::OutOfRange { value: alpha, bound: self.lambda });
        }
        Ok(self.mu.partition_point(|&m| m <= alpha) - 1)
    }

    /// Interval `[mu_i, mu_{i+1})` as a range.
    pub fn interval(&self, i: usize) -> std::ops::Range<Ordinal> {
        self.mu[i]..self.mu[i + 1]
    }
}

/// A finite partial function between ordinals.
/// Serializes as a JSON object with string keys, e.g. `{"0":1,"2":5}`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialFn(BTreeMap<Ordinal, Ordinal>);

impl Serialize for PartialFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (x, y) in &self.0 {
            m.serialize_entry(&x.to_string(), y)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for PartialFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // Keys go through strings so buffered (tagged-enum) input works too.
        let raw = BTreeMap::<String, Ordinal>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| k.parse::<Ordinal>().map(|k| (k, v)).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<_, _>>()
            .map(PartialFn)
    }
}

impl PartialFn {
    pub fn new() -> Self {
        PartialFn(BTreeMap::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Ordinal, Ordinal)>>(pairs: I) -> Self {
        PartialFn(pairs.into_iter().collect())
    }

    /// `x -> values[x]` on the initial segment `[0, values.len())`.
    pub fn from_values(values: &[Ordinal]) -> Self {
        PartialFn(values.iter().enumerate().map(|(i, &v)| (i as Ordinal, v)).collect())
    }

    pub fn get(&self, x: Ordinal) -> Option<Ordinal> {
        self.0.get(&x).copied()
    }

    pub fn insert(&mut self, x: Ordinal, y: Ordinal) {
        self.0.insert(x, y);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ordinal, Ordinal)> + '_ {
        self.0.iter().map(|(&x, &y)| (x, y))
    }

    pub fn domain(&self) -> impl Iterator<Item = Ordinal> + '_ {
        self.0.keys().copied()
    }

    pub fn values(&self) -> impl Iterator<Item = Ordinal> + '_ {
        self.0.values().copied()
    }

    pub fn contains_key(&self, x: Ordinal) -> bool {
        self.0.contains_key(&x)
    }

    pub fn domain_set(&self) -> BTreeSet<Ordinal> {
        self.0.keys().copied().collect()
    }

    pub fn as_map(&self) -> &BTreeMap<Ordinal, Ordinal> {
        &self.0
    }

    /// Supremum of the range; 0 for the empty function, else the maximum.
    pub fn sup_rang(&self) -> Ordinal {
        self.0.values().copied().max().unwrap_or(0)
    }

    pub fn restrict(&self, s: &BTreeSet<Ordinal>) -> PartialFn {
        PartialFn(self.0.iter().filter(|(x, _)| s.contains(x)).map(|(&x, &y)| (x, y)).collect())
    }

    pub fn restrict_by(&self, keep: impl Fn(Ordinal) -> bool) -> PartialFn {
        PartialFn(self.0.iter().filter(|(&x, _)| keep(x)).map(|(&x, &y)| (x, y)).collect())
    }

    /// `self ⊆ other` as sets of pairs.
    pub fn is_subset_of(&self, other: &PartialFn) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().all(|(x, y)| other.0.get(x) == Some(y))
    }

    /// Agreement on the common domain.
    pub fn compatible_with(&self, other: &PartialFn) -> bool {
        self.0.iter().all(|(x, y)| other.0.get(x).is_none_or(|z| z == y))
    }

    /// Union of two compatible functions; `None` if they disagree somewhere.
    pub fn union(&self, other: &PartialFn) -> Option<PartialFn> {
        if !self.compatible_with(other) {
            return None;
        }
        let mut out = self.0.clone();
        out.extend(other.0.iter().map(|(&x, &y)| (x, y)));
        Some(PartialFn(out))
    }

    /// Weakly increasing along the domain order.
    pub fn is_weakly_increasing(&self) -> bool {
        let vals: Vec<_> = self.0.values().collect();
        vals.windows(2).all(|w| w[0] <= w[1])
    }

    /// `Some(n)` if the domain is exactly `{0, ..., n-1}`.
    pub fn ordinal_domain(&self) -> Option<Ordinal> {
        let n = self.0.len() as Ordinal;
        match self.0.keys().next_back() {
            None => Some(0),
            Some(&last) if last + 1 == n => Some(n),
            _ => None,
        }
    }

    pub fn is_injective(&self) -> bool {
        let vals: BTreeSet<_> = self.0.values().collect();
        vals.len() == self.0.len()
    }
}

impl fmt::Debug for PartialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, y)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}↦{y}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for PartialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromIterator<(Ordinal, Ordinal)> for PartialFn {
    fn from_iter<I: IntoIterator<Item = (Ordinal, Ordinal)>>(iter: I) -> Self {
        PartialFn(iter.into_iter().collect())
    }
}

/// All subsets of `[0, n)` with at most `max_size` elements, smallest first.
pub fn subsets_up_to(n: Ordinal, max_size: usize) -> Vec<BTreeSet<Ordinal>> {
    let mut out = vec![BTreeSet::new()];
    let mut frontier = vec![BTreeSet::new()];
    for _ in 0..max_size {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.iter().next_back().map_or(0, |m| m + 1);
            for x in start..n {
                let mut t = s.clone();
                t.insert(x);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every function from `dom` (in order) into `values`, as partial functions.
pub fn all_functions(dom: &[Ordinal], values: &[Ordinal]) -> Vec<PartialFn> {
    let mut out = vec![PartialFn::new()];
    for &x in dom {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for f in &out {
            for &v in values {
                let mut g = f.clone();
                g.insert(x, v);
                next.push(g);
            }
        }
        out = next;
    }
    out
}

/// Weakly increasing functions from `dom` (in order) with values in `lo(x)..=hi(x)`.
pub fn weakly_increasing_functions(
    dom: &[Ordinal],
    lo: impl Fn(Ordinal) -> Ordinal,
    hi: impl Fn(Ordinal) -> Ordinal,
) -> Vec<PartialFn> {
    fn go(
        dom: &[Ordinal],
        idx: usize,
        floor: Ordinal,
        cur: &mut PartialFn,
        lo: &dyn Fn(Ordinal) -> Ordinal,
        hi: &dyn Fn(Ordinal) -> Ordinal,
        out: &mut Vec<PartialFn>,
    ) {
        if idx == dom.len() {
            out.push(cur.clone());
            return;
        }
        let x = dom[idx];
        let start = lo(x).max(floor);
        for v in start..=hi(x) {
            cur.insert(x, v);
            go(dom, idx + 1, v, cur, lo, hi, out);
        }
        cur.0.remove(&x);
    }
    let mut out = Vec::new();
    go(dom, 0, 0, &mut PartialFn::new(), &lo, &hi, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p024() -> CardinalProfile {
        CardinalProfile::new(vec![0, 2, 4]).unwrap()
    }

    #[test]
    fn i_of_examples() {
        let p = p024();
        assert_eq!(p.i_of(0).unwrap(), 0);
        assert_eq!(p.i_of(3).unwrap(), 1);
        assert!(matches!(p.i_of(4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn profile_validation() {
        assert!(CardinalProfile::new(vec![1, 3]).is_err());
        assert!(CardinalProfile::new(vec![0, 1]).is_err());
        assert!(CardinalProfile::new(vec![0, 3, 4]).is_err());
        let r = CardinalProfile::regular(5).unwrap();
        assert_eq!(r.kappa(), 1);
        assert_eq!(r.mus(), &[0, 5]);
    }

    #[test]
    fn profile_json_shape() {
        let p = p024();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v, serde_json::json!({"lambda": 4, "kappa": 2, "mu": [0, 2, 4]}));
        let back: CardinalProfile = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let bad = serde_json::json!({"lambda": 5, "kappa": 2, "mu": [0, 2, 4]});
        assert!(serde_json::from_value::<CardinalProfile>(bad).is_err());
    }

    #[test]
    fn sup_rang_examples() {
        assert_eq!(PartialFn::new().sup_rang(), 0);
        assert_eq!(PartialFn::from_pairs([(0, 3)]).sup_rang(), 3);
        assert_eq!(PartialFn::from_pairs([(0, 1), (2, 5)]).sup_rang(), 5);
    }

    #[test]
    fn restrict_examples() {
        let f = PartialFn::from_pairs([(0, 1), (1, 2)]);
        assert_eq!(f.restrict(&[0].into()), PartialFn::from_pairs([(0, 1)]));
        assert_eq!(PartialFn::new().restrict(&[0, 1].into()), PartialFn::new());
        assert_eq!(PartialFn::from_pairs([(0, 1)]).restrict(&BTreeSet::new()), PartialFn::new());
    }

    #[test]
    fn partial_fn_json_is_string_keyed() {
        let f = PartialFn::from_pairs([(0, 1), (2, 5)]);
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"0":1,"2":5}"#);
    }

    #[test]
    fn enumerators() {
        assert_eq!(subsets_up_to(3, 2).len(), 1 + 3 + 3);
        assert_eq!(all_functions(&[0, 1], &[0, 1, 2]).len(), 9);
        // weakly increasing maps {0,1} -> [0,2]: multisets of size 2 from 3 values
        assert_eq!(weakly_increasing_functions(&[0, 1], |_| 0, |_| 2).len(), 6);
    }

    fn arb_fn() -> impl Strategy<Value = PartialFn> {
        proptest::collection::btree_map(0u32..8, 0u32..8, 0..6).prop_map(PartialFn)
    }

    fn arb_set() -> impl Strategy<Value = BTreeSet<u32>> {
        proptest::collection::btree_set(0u32..8, 0..6)
    }

    proptest! {
        #[test]
        fn i_of_total_and_monotone(a in 0u32..12, b in 0u32..12) {
            let p = CardinalProfile::new(vec![0, 3, 7, 12]).unwrap();
            let (ia, ib) = (p.i_of(a).unwrap(), p.i_of(b).unwrap());
            prop_assert!(p.mu(ia) <= a && a < p.mu(ia + 1));
            if a <= b { prop_assert!(ia <= ib); }
        }

        #[test]
        fn restrict_composes(f in arb_fn(), a in arb_set(), b in arb_set()) {
            let both: BTreeSet<_> = a.intersection(&b).copied().collect();
            prop_assert_eq!(f.restrict(&a).restrict(&b), f.restrict(&both));
            prop_assert!(f.restrict(&a).sup_rang() <= f.sup_rang());
        }
    }
}
