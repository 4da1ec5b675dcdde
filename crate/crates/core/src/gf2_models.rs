//! Structure parameters and the GF(2) group models built from them.
//!
//! Sorts and generators are dense indices. Generator `t` of sort `s` has a
//! global id in `offsets[s]..offsets[s+1]`; group elements store supports
//! over the local ids of their sort.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::bitmat::{BitRow, Basis};
use crate::error::{Error, Result};

pub type SortId = usize;
pub type GenId = usize;

/// The relation `T` restricted to one pair of sorts, as local index pairs.
pub trait TRelation: Send + Sync {
    fn pairs(&self, param: &StructureParameter, s1: SortId, s2: SortId) -> Vec<(usize, usize)>;
}

/// `T` given as a set of global generator pairs.
#[derive(Debug, Default, Clone)]
pub struct ExplicitT {
    by_sorts: HashMap<(SortId, SortId), Vec<(usize, usize)>>,
}

impl ExplicitT {
    pub fn new(offsets: &[usize], pairs: impl IntoIterator<Item = (GenId, GenId)>) -> Self {
        let sort_of = |g: GenId| offsets.partition_point(|&o| o <= g) - 1;
        let mut by_sorts: HashMap<(SortId, SortId), Vec<(usize, usize)>> = HashMap::new();
        let uniq: BTreeSet<(GenId, GenId)> = pairs.into_iter().collect();
        for (a, b) in uniq {
            let (sa, sb) = (sort_of(a), sort_of(b));
            by_sorts.entry((sa, sb)).or_default().push((a - offsets[sa], b - offsets[sb]));
        }
        ExplicitT { by_sorts }
    }
}

impl TRelation for ExplicitT {
    fn pairs(&self, _: &StructureParameter, s1: SortId, s2: SortId) -> Vec<(usize, usize)> {
        self.by_sorts.get(&(s1, s2)).cloned().unwrap_or_default()
    }
}

/// `S ⊆ I × I`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SRelation {
    All,
    Pairs(BTreeSet<(SortId, SortId)>),
}

impl SRelation {
    pub fn contains(&self, s1: SortId, s2: SortId) -> bool {
        match self {
            SRelation::All => true,
            SRelation::Pairs(p) => p.contains(&(s1, s2)),
        }
    }
}

pub struct StructureParameter {
    sort_labels: Vec<String>,
    offsets: Vec<usize>,
    gen_labels: Vec<String>,
    s: SRelation,
    t: Arc<dyn TRelation>,
    cache: RwLock<HashMap<(SortId, SortId), Arc<Basis>>>,
}

impl fmt::Debug for StructureParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructureParameter")
            .field("sorts", &self.sort_labels.len())
            .field("generators", &self.gen_labels.len())
            .field("s", &self.s)
            .finish()
    }
}

impl StructureParameter {
    /// `sorts[s] = (label, generator labels)`.
    pub fn new(sorts: Vec<(String, Vec<String>)>, s: SRelation, t: Arc<dyn TRelation>) -> Result<Self> {
        let mut offsets = vec![0];
        let mut sort_labels = Vec::with_capacity(sorts.len());
        let mut gen_labels = Vec::new();
        for (label, gens) in sorts {
            sort_labels.push(label);
            offsets.push(offsets.last().unwrap() + gens.len());
            gen_labels.extend(gens);
        }
        let n = sort_labels.len();
        if let SRelation::Pairs(p) = &s {
            if let Some(&(a, b)) = p.iter().find(|&&(a, b)| a >= n || b >= n) {
                return Err(Error::UnknownSort(a.max(b)));
            }
        }
        Ok(StructureParameter { sort_labels, offsets, gen_labels, s, t, cache: RwLock::new(HashMap::new()) })
    }

    /// Convenience constructor with `T` as global generator pairs.
    pub fn explicit(
        sorts: Vec<(String, Vec<String>)>,
        s: SRelation,
        t_pairs: impl IntoIterator<Item = (GenId, GenId)>,
    ) -> Result<Self> {
        let mut offsets = vec![0];
        for (_, g) in &sorts {
            offsets.push(offsets.last().unwrap() + g.len());
        }
        let t = ExplicitT::new(&offsets, t_pairs);
        StructureParameter::new(sorts, s, Arc::new(t))
    }

    pub fn num_sorts(&self) -> usize {
        self.sort_labels.len()
    }

    pub fn num_generators(&self) -> usize {
        self.gen_labels.len()
    }

    pub fn sort_label(&self, s: SortId) -> &str {
        &self.sort_labels[s]
    }

    pub fn gen_label(&self, g: GenId) -> &str {
        &self.gen_labels[g]
    }

    pub fn gens(&self, s: SortId) -> std::ops::Range<GenId> {
        self.offsets[s]..self.offsets[s + 1]
    }

    pub fn gen_count(&self, s: SortId) -> usize {
        self.offsets[s + 1] - self.offsets[s]
    }

    pub fn offset(&self, s: SortId) -> usize {
        self.offsets[s]
    }

    pub fn sort_of_gen(&self, g: GenId) -> SortId {
        self.offsets.partition_point(|&o| o <= g) - 1
    }

    pub fn s_relation(&self) -> &SRelation {
        &self.s
    }

    pub fn in_s(&self, s1: SortId, s2: SortId) -> bool {
        self.s.contains(s1, s2)
    }

    pub fn t_pairs(&self, s1: SortId, s2: SortId) -> Vec<(usize, usize)> {
        self.t.pairs(self, s1, s2)
    }

    pub fn check_sort(&self, s: SortId) -> Result<()> {
        if s < self.num_sorts() {
            Ok(())
        } else {
            Err(Error::UnknownSort(s))
        }
    }

    /// Reduced basis of the pair subgroup `G_{s1,s2}`, cached.
    pub fn pair_basis(&self, s1: SortId, s2: SortId) -> Arc<Basis> {
        if let Some(b) = self.cache.read().get(&(s1, s2)) {
            return b.clone();
        }
        let (n1, n2) = (self.gen_count(s1), self.gen_count(s2));
        let rows: Vec<BitRow> =
            self.t_pairs(s1, s2).into_iter().map(|(a, b)| BitRow::from_ones(n1 + n2, [a, n1 + b])).collect();
        let basis = Arc::new(Basis::from_rows(n1 + n2, &rows));
        self.cache.write().entry((s1, s2)).or_insert(basis).clone()
    }

    pub fn zero(&self, s: SortId) -> GroupElement {
        GroupElement { sort: s, support: BitRow::zeros(self.gen_count(s)) }
    }

    /// `x_t` for a local generator index.
    pub fn gen(&self, s: SortId, local: usize) -> GroupElement {
        GroupElement { sort: s, support: BitRow::from_ones(self.gen_count(s), [local]) }
    }

    pub fn gen_global(&self, g: GenId) -> GroupElement {
        let s = self.sort_of_gen(g);
        self.gen(s, g - self.offsets[s])
    }

    pub fn element(&self, s: SortId, locals: impl IntoIterator<Item = usize>) -> Result<GroupElement> {
        self.check_sort(s)?;
        let n = self.gen_count(s);
        let locals: Vec<usize> = locals.into_iter().collect();
        if let Some(&bad) = locals.iter().find(|&&l| l >= n) {
            return Err(Error::precondition(format!("sort {s} has {n} generators, got index {bad}")));
        }
        Ok(GroupElement { sort: s, support: BitRow::from_ones(n, locals) })
    }

    /// All `2^|J_s|` elements of a sort.
    pub fn elements(&self, s: SortId, cap: usize) -> Result<Vec<GroupElement>> {
        let n = self.gen_count(s);
        if n >= 63 || 1usize << n > cap {
            return Err(Error::cap(format!("elements of sort {s}"), 1usize.checked_shl(n as u32).unwrap_or(usize::MAX), cap));
        }
        Ok((0u64..1 << n)
            .map(|mask| GroupElement { sort: s, support: BitRow::from_ones(n, (0..n).filter(|&k| mask >> k & 1 == 1)) })
            .collect())
    }

    /// Structural equality (labels, S and T on every pair).
    pub fn same_as(&self, other: &StructureParameter) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        if self.sort_labels != other.sort_labels || self.gen_labels != other.gen_labels || self.offsets != other.offsets {
            return false;
        }
        let n = self.num_sorts();
        (0..n).all(|a| {
            (0..n).all(|b| {
                self.in_s(a, b) == other.in_s(a, b) && {
                    let (mut x, mut y) = (self.t_pairs(a, b), other.t_pairs(a, b));
                    x.sort();
                    y.sort();
                    x == y
                }
            })
        })
    }

    /// JSON dump. `T` is listed only when `with_t` is set since it can be large.
    pub fn dump(&self, with_t: bool) -> serde_json::Value {
        let sorts: Vec<_> = (0..self.num_sorts())
            .map(|s| {
                serde_json::json!({
                    "id": s,
                    "label": self.sort_labels[s],
                    "generators": self.gens(s).map(|g| &self.gen_labels[g]).collect::<Vec<_>>(),
                })
            })
            .collect();
        let s_rel = match &self.s {
            SRelation::All => serde_json::json!("all"),
            SRelation::Pairs(p) => serde_json::json!(p),
        };
        let mut doc = serde_json::json!({ "sorts": sorts, "S": s_rel });
        if with_t {
            let mut t = Vec::new();
            for a in 0..self.num_sorts() {
                for b in 0..self.num_sorts() {
                    for (x, y) in self.t_pairs(a, b) {
                        t.push((self.offsets[a] + x, self.offsets[b] + y));
                    }
                }
            }
            doc["T"] = serde_json::json!(t);
        }
        doc
    }
}

/// An element of `G_s`: a finite set of generators under symmetric difference.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub sort: SortId,
    pub support: BitRow,
}

impl GroupElement {
    pub fn add(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.sort != other.sort {
            return Err(Error::precondition(format!("adding elements of sorts {} and {}", self.sort, other.sort)));
        }
        Ok(GroupElement { sort: self.sort, support: self.support.xor(&other.support) })
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_zero()
    }

    pub fn weight(&self) -> usize {
        self.support.count_ones()
    }

    pub fn locals(&self) -> Vec<usize> {
        self.support.ones().collect()
    }

    /// Canonical id string, e.g. `3:0+2`.
    pub fn key(&self) -> String {
        let locals: Vec<String> = self.support.ones().map(|l| l.to_string()).collect();
        format!("{}:{}", self.sort, locals.join("+"))
    }

    pub fn parse_key(param: &StructureParameter, key: &str) -> Result<GroupElement> {
        let (s, rest) = key.split_once(':').ok_or_else(|| Error::precondition(format!("bad element id `{key}`")))?;
        let s: SortId = s.parse().map_err(|_| Error::precondition(format!("bad sort in `{key}`")))?;
        let locals = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split('+')
                .map(|l| l.parse::<usize>().map_err(|_| Error::precondition(format!("bad generator in `{key}`"))))
                .collect::<Result<Vec<_>>>()?
        };
        param.element(s, locals)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

#[derive(Serialize, Deserialize)]
struct ElementDoc {
    sort: SortId,
    support: Vec<usize>,
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementDoc { sort: self.sort, support: self.locals() }.serialize(s)
    }
}

impl GroupElement {
    /// Rebuilds an element from its JSON form against a parameter.
    pub fn from_json(param: &StructureParameter, v: &serde_json::Value) -> Result<GroupElement> {
        let doc: ElementDoc = serde_json::from_value(v.clone())?;
        param.element(doc.sort, doc.support)
    }
}

/// Is `(a, b)` in the subgroup generated by the `T`-pairs of `(s1, s2)`?
pub fn q_member(param: &StructureParameter, s1: SortId, s2: SortId, a: &GroupElement, b: &GroupElement) -> Result<bool> {
    param.check_sort(s1)?;
    param.check_sort(s2)?;
    if !param.in_s(s1, s2) {
        return Err(Error::NotInS(s1, s2));
    }
    if a.sort != s1 || b.sort != s2 {
        return Ok(false);
    }
    Ok(param.pair_basis(s1, s2).contains(&a.support.concat(&b.support)))
}

/// A model `M_x` with an optional designated constant.
#[derive(Debug, Clone)]
pub struct Model {
    pub param: Arc<StructureParameter>,
    pub constant: Option<GroupElement>,
}

impl Model {
    pub fn new(param: Arc<StructureParameter>, constant: Option<GroupElement>) -> Self {
        Model { param, constant }
    }
}

/// Strategy data behind a rule-based map.
pub trait BaseRule: Send + Sync + fmt::Debug {
    fn covers(&self, s: SortId) -> bool;
    fn base(&self, s: SortId) -> Option<GroupElement>;
    fn describe(&self) -> serde_json::Value;
}

/// Base values computed eagerly, with the data they were computed from.
#[derive(Debug)]
pub struct TabulatedRule {
    pub bases: BTreeMap<SortId, GroupElement>,
    pub descriptor: serde_json::Value,
}

impl BaseRule for TabulatedRule {
    fn covers(&self, s: SortId) -> bool {
        self.bases.contains_key(&s)
    }

    fn base(&self, s: SortId) -> Option<GroupElement> {
        self.bases.get(&s).cloned()
    }

    fn describe(&self) -> serde_json::Value {
        self.descriptor.clone()
    }
}

/// A partial map between two models over the same parameter.
#[derive(Debug, Clone)]
pub enum PartialMap {
    Explicit(BTreeMap<GroupElement, GroupElement>),
    GroupClosed(BTreeMap<SortId, GroupElement>),
    RuleBased(Arc<dyn BaseRule>),
}

impl PartialMap {
    pub fn empty() -> Self {
        PartialMap::GroupClosed(BTreeMap::new())
    }

    /// Base values on every covered sort (explicit maps yield sorts they
    /// contain `0_s` of).
    pub fn bases(&self, param: &StructureParameter) -> BTreeMap<SortId, GroupElement> {
        match self {
            PartialMap::GroupClosed(b) => b.clone(),
            PartialMap::RuleBased(r) => {
                (0..param.num_sorts()).filter(|&s| r.covers(s)).filter_map(|s| r.base(s).map(|c| (s, c))).collect()
            }
            PartialMap::Explicit(m) => m
                .iter()
                .filter(|(a, _)| a.is_zero())
                .map(|(a, b)| (a.sort, b.clone()))
                .collect(),
        }
    }

    /// Group-closed form, when the map has one.
    pub fn to_group_closed(&self, param: &StructureParameter) -> Option<BTreeMap<SortId, GroupElement>> {
        match self {
            PartialMap::Explicit(_) => None,
            _ => Some(self.bases(param)),
        }
    }

    pub fn apply(&self, param: &StructureParameter, a: &GroupElement) -> Option<GroupElement> {
        match self {
            PartialMap::Explicit(m) => m.get(a).cloned(),
            PartialMap::GroupClosed(b) => b.get(&a.sort).and_then(|c| c.add(a).ok()),
            PartialMap::RuleBased(r) => {
                if a.sort < param.num_sorts() && r.covers(a.sort) {
                    r.base(a.sort).and_then(|c| c.add(a).ok())
                } else {
                    None
                }
            }
        }
    }

    /// `a` lies in the domain.
    pub fn covers(&self, param: &StructureParameter, a: &GroupElement) -> bool {
        self.apply(param, a).is_some()
    }

    /// `b` lies in the range.
    pub fn covers_range(&self, param: &StructureParameter, b: &GroupElement) -> bool {
        match self {
            PartialMap::Explicit(m) => m.values().any(|v| v == b),
            // group-closed maps are bijections of each covered sort
            _ => self.apply(param, &param.zero(b.sort)).is_some(),
        }
    }

    /// Every pair of the map; sorts are expanded to all their elements.
    pub fn materialize(&self, param: &StructureParameter, cap: usize) -> Result<BTreeMap<GroupElement, GroupElement>> {
        match self {
            PartialMap::Explicit(m) => Ok(m.clone()),
            _ => {
                let mut out = BTreeMap::new();
                for (s, c) in self.bases(param) {
                    for a in param.elements(s, cap)? {
                        let b = c.add(&a)?;
                        out.insert(a, b);
                        if out.len() > cap {
                            return Err(Error::cap("materialized map", out.len(), cap));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn describe(&self, param: &StructureParameter) -> serde_json::Value {
        match self {
            PartialMap::Explicit(m) => serde_json::json!({
                "pairs": m.iter().map(|(a, b)| serde_json::json!([a, b])).collect::<Vec<_>>()
            }),
            _ => {
                let bases: Vec<_> = self
                    .bases(param)
                    .iter()
                    .map(|(s, c)| serde_json::json!({"sort": s, "c": c}))
                    .collect();
                let mut doc = serde_json::json!({ "bases": bases });
                if let PartialMap::RuleBased(r) = self {
                    doc["rule"] = r.describe();
                }
                doc
            }
        }
    }

    /// Parses `{"bases":[...]}` or `{"pairs":[[a,b],...]}`.
    pub fn from_json(param: &StructureParameter, v: &serde_json::Value) -> Result<PartialMap> {
        if let Some(bases) = v.get("bases").and_then(|b| b.as_array()) {
            let mut out = BTreeMap::new();
            for b in bases {
                let s = b["sort"].as_u64().ok_or_else(|| Error::precondition("base entry without sort"))? as SortId;
                param.check_sort(s)?;
                let c = GroupElement::from_json(param, &b["c"])?;
                out.insert(s, c);
            }
            if let Some(rule) = v.get("rule") {
                return Ok(PartialMap::RuleBased(Arc::new(TabulatedRule { bases: out, descriptor: rule.clone() })));
            }
            return Ok(PartialMap::GroupClosed(out));
        }
        if let Some(pairs) = v.get("pairs").and_then(|p| p.as_array()) {
            let mut out = BTreeMap::new();
            for p in pairs {
                let a = GroupElement::from_json(param, &p[0])?;
                let b = GroupElement::from_json(param, &p[1])?;
                out.insert(a, b);
            }
            return Ok(PartialMap::Explicit(out));
        }
        Err(Error::precondition("map needs `bases` or `pairs`"))
    }
}

/// `f_new ⊇ f_old`.
pub fn map_extends(param: &StructureParameter, f_new: &PartialMap, f_old: &PartialMap, cap: usize) -> Result<bool> {
    match (f_new.to_group_closed(param), f_old.to_group_closed(param)) {
        (Some(n), Some(o)) => Ok(o.iter().all(|(s, c)| n.get(s) == Some(c))),
        _ => {
            let old = f_old.materialize(param, cap)?;
            Ok(old.iter().all(|(a, b)| f_new.apply(param, a).as_ref() == Some(b)))
        }
    }
}

/// The group-closed criterion: bases are sort-correct and every covered
/// `S`-pair of bases lies in the pair subgroup.
pub fn is_partial_auto(param: &StructureParameter, bases: &BTreeMap<SortId, GroupElement>) -> bool {
    first_auto_violation(param, bases).is_none()
}

/// The first violated condition of [`is_partial_auto`], if any.
pub fn first_auto_violation(param: &StructureParameter, bases: &BTreeMap<SortId, GroupElement>) -> Option<String> {
    for (&s, c) in bases {
        if s >= param.num_sorts() || c.sort != s || c.support.len() != param.gen_count(s) {
            return Some(format!("f(0_{s}) must lie in G_{s}"));
        }
    }
    for (&s1, c1) in bases {
        for (&s2, c2) in bases {
            if param.in_s(s1, s2) && !param.pair_basis(s1, s2).contains(&c1.support.concat(&c2.support)) {
                return Some(format!("(f(0_{s1}), f(0_{s2})) must lie in G_{{{s1},{s2}}}"));
            }
        }
    }
    None
}

/// Direct check that an explicit map is a partial isomorphism `M1 -> M2`.
pub fn is_partial_iso_semantic(m1: &Model, m2: &Model, map: &BTreeMap<GroupElement, GroupElement>) -> bool {
    semantic_violation(m1, m2, map).is_none()
}

/// The first violated clause of [`is_partial_iso_semantic`], if any.
pub fn semantic_violation(m1: &Model, m2: &Model, map: &BTreeMap<GroupElement, GroupElement>) -> Option<String> {
    let param = &m1.param;
    let n = param.num_sorts();
    let mut image = BTreeSet::new();
    for (a, b) in map {
        if a.sort >= n || b.sort >= n || a.support.len() != param.gen_count(a.sort) || b.support.len() != param.gen_count(b.sort) {
            return Some("elements must belong to the model".into());
        }
        if a.sort != b.sort {
            return Some(format!("P_{} must be preserved", a.sort));
        }
        if !image.insert(b) {
            return Some("map must be injective".into());
        }
    }
    let entries: Vec<(&GroupElement, &GroupElement)> = map.iter().collect();
    for (i, (a1, b1)) in entries.iter().enumerate() {
        for (a2, b2) in &entries[i..] {
            if a1.sort == a2.sort && b1.support.xor(&b2.support) != a1.support.xor(&a2.support) {
                return Some("translations F_a must be respected".into());
            }
        }
    }
    for (a1, b1) in &entries {
        for (a2, b2) in &entries {
            if param.in_s(a1.sort, a2.sort) {
                let qa = q_member(param, a1.sort, a2.sort, a1, a2).unwrap_or(false);
                let qb = q_member(param, b1.sort, b2.sort, b1, b2).unwrap_or(false);
                if qa != qb {
                    return Some(format!("Q_{{{},{}}} must be preserved and reflected", a1.sort, a2.sort));
                }
            }
        }
    }
    if let (Some(c1), Some(c2)) = (&m1.constant, &m2.constant) {
        if let Some(img) = map.get(c1) {
            if img != c2 {
                return Some("the constant must be mapped to the constant".into());
            }
        }
        if map.iter().any(|(a, b)| b == c2 && a != c1) {
            return Some("the constant must be mapped to the constant".into());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_pair_param() -> StructureParameter {
        // sort 0 has t0, sort 1 has t1; T = {(t0, t1)}; S = {(0, 1)}
        StructureParameter::explicit(
            vec![("a".into(), vec!["t0".into()]), ("b".into(), vec!["t1".into()])],
            SRelation::Pairs([(0, 1)].into()),
            [(0, 1)],
        )
        .unwrap()
    }

    #[test]
    fn q_member_examples() {
        let p = one_pair_param();
        let (x0, x1) = (p.gen(0, 0), p.gen(1, 0));
        assert!(q_member(&p, 0, 1, &x0, &x1).unwrap());
        assert!(!q_member(&p, 0, 1, &x0, &p.zero(1)).unwrap());
        assert!(q_member(&p, 0, 1, &p.zero(0), &p.zero(1)).unwrap());
        assert!(matches!(q_member(&p, 1, 0, &x1, &x0), Err(Error::NotInS(1, 0))));
    }

    #[test]
    fn partial_auto_examples() {
        let p = one_pair_param();
        let zeros: BTreeMap<_, _> = [(0, p.zero(0)), (1, p.zero(1))].into();
        assert!(is_partial_auto(&p, &zeros));
        let wrong: BTreeMap<_, _> = [(0, p.gen(1, 0))].into();
        assert!(!is_partial_auto(&p, &wrong));
        let both: BTreeMap<_, _> = [(0, p.gen(0, 0)), (1, p.gen(1, 0))].into();
        assert!(is_partial_auto(&p, &both));
        let half: BTreeMap<_, _> = [(0, p.gen(0, 0)), (1, p.zero(1))].into();
        assert!(!is_partial_auto(&p, &half));
    }

    #[test]
    fn semantic_examples() {
        let p = Arc::new(
            StructureParameter::explicit(vec![("s".into(), vec!["t".into()])], SRelation::Pairs([(0, 0)].into()), [(0, 0)])
                .unwrap(),
        );
        let m = Model::new(p.clone(), None);
        assert!(is_partial_iso_semantic(&m, &m, &BTreeMap::new()));
        let swap: BTreeMap<_, _> = [(p.zero(0), p.gen(0, 0)), (p.gen(0, 0), p.zero(0))].into();
        assert!(is_partial_iso_semantic(&m, &m, &swap));
        let m1 = Model::new(p.clone(), Some(p.zero(0)));
        let m2 = Model::new(p.clone(), Some(p.gen(0, 0)));
        let id: BTreeMap<_, _> = [(p.zero(0), p.zero(0))].into();
        assert!(!is_partial_iso_semantic(&m1, &m2, &id));
        assert!(is_partial_iso_semantic(&m1, &m2, &swap));
    }

    #[test]
    fn apply_and_extends() {
        let p = one_pair_param();
        let f = PartialMap::GroupClosed([(0, p.gen(0, 0))].into());
        assert_eq!(f.apply(&p, &p.zero(0)), Some(p.gen(0, 0)));
        assert_eq!(f.apply(&p, &p.gen(0, 0)), Some(p.zero(0)));
        assert_eq!(f.apply(&p, &p.zero(1)), None);
        let id = PartialMap::GroupClosed([(0, p.zero(0))].into());
        assert_eq!(id.apply(&p, &p.gen(0, 0)), Some(p.gen(0, 0)));
        assert!(map_extends(&p, &f, &f, 64).unwrap());
        assert!(map_extends(&p, &f, &PartialMap::empty(), 64).unwrap());
        assert!(!map_extends(&p, &PartialMap::empty(), &f, 64).unwrap());
        let ex = PartialMap::Explicit([(p.zero(0), p.gen(0, 0))].into());
        assert!(map_extends(&p, &f, &ex, 64).unwrap());
    }

    #[test]
    fn element_json_and_keys() {
        let p = one_pair_param();
        let x = p.gen(1, 0);
        assert_eq!(serde_json::to_value(&x).unwrap(), serde_json::json!({"sort": 1, "support": [0]}));
        assert_eq!(GroupElement::from_json(&p, &serde_json::to_value(&x).unwrap()).unwrap(), x);
        assert_eq!(GroupElement::parse_key(&p, &x.key()).unwrap(), x);
        assert_eq!(GroupElement::parse_key(&p, &p.zero(0).key()).unwrap(), p.zero(0));
        let f = PartialMap::GroupClosed([(0, p.gen(0, 0))].into());
        let back = PartialMap::from_json(&p, &f.describe(&p)).unwrap();
        assert!(map_extends(&p, &back, &f, 8).unwrap() && map_extends(&p, &f, &back, 8).unwrap());
    }

    fn arb_elem(n: usize) -> impl Strategy<Value = BitRow> {
        proptest::collection::vec(any::<bool>(), n).prop_map(|b| BitRow::from_bools(&b))
    }

    proptest! {
        #[test]
        fn group_laws(a in arb_elem(5), b in arb_elem(5), c in arb_elem(5)) {
            let e = |s: &BitRow| GroupElement { sort: 0, support: s.clone() };
            let (a, b, c) = (e(&a), e(&b), e(&c));
            prop_assert!(a.add(&a).unwrap().is_zero());
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        }
    }
}
