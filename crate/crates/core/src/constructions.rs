//! The four preset structure parameters and their designated constants.
//!
//! `s1`/`s2` use quadruple generators `(u, g, h, ζ)` over a local family;
//! `s3`/`s4` use witnessed generators `(u, Λ, g, h, F, z)` over a tree.
//! In every preset `h` (and a witness `𝐡`) may take the value `λ`: with
//! values capped below `λ` the clause `h(x) > x` would leave no generator
//! for any `u` containing `λ - 1`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::gf2_models::{GroupElement, Model, SRelation, SortId, StructureParameter, TRelation};
use crate::ordinals::{all_functions, subsets_up_to, weakly_increasing_functions, CardinalProfile, Ordinal, PartialFn};
use crate::trees::{LocalFamily, NodeId, Tree, TreeDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    S1,
    S2,
    S3,
    S4,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::S1 => "s1",
            Preset::S2 => "s2",
            Preset::S3 => "s3",
            Preset::S4 => "s4",
        }
    }

    pub fn parse(s: &str) -> Result<Preset> {
        match s {
            "s1" => Ok(Preset::S1),
            "s2" => Ok(Preset::S2),
            "s3" => Ok(Preset::S3),
            "s4" => Ok(Preset::S4),
            _ => Err(Error::Config(format!("unknown preset `{s}`"))),
        }
    }

    /// Uses a cardinal profile rather than a bare `λ`.
    pub fn uses_profile(self) -> bool {
        matches!(self, Preset::S2 | Preset::S4)
    }

    pub fn uses_tree(self) -> bool {
        matches!(self, Preset::S3 | Preset::S4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct Caps {
    pub max_u: usize,
    pub max_lambda_set: usize,
    pub max_fn_size: usize,
    pub max_gens_per_sort: usize,
    pub max_sorts: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_u: 2, max_lambda_set: 1, max_fn_size: 1, max_gens_per_sort: 4096, max_sorts: 20_000 }
    }
}

impl Caps {
    /// Sets a cap from a `KEY=VAL` pair.
    pub fn set(&mut self, key: &str, value: usize) -> Result<()> {
        match key {
            "maxU" | "max_u" | "max-u" => self.max_u = value,
            "maxLambdaSet" | "max_lambda_set" | "max-lambda-set" => self.max_lambda_set = value,
            "maxFnSize" | "max_fn_size" | "max-fn-size" => self.max_fn_size = value,
            "maxGensPerSort" | "max_gens_per_sort" | "max-gens-per-sort" => self.max_gens_per_sort = value,
            "maxSorts" | "max_sorts" | "max-sorts" => self.max_sorts = value,
            _ => return Err(Error::Config(format!("unknown cap `{key}`"))),
        }
        Ok(())
    }
}

/// Deliberate clause deletions used to check that the oracles notice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct Mutations {
    pub skip_h_gt_x: bool,
    pub skip_g_eq_h_eq: bool,
    pub skip_witness_vii: bool,
    pub skip_budget: bool,
}

impl Mutations {
    pub fn any(&self) -> bool {
        self.skip_h_gt_x || self.skip_g_eq_h_eq || self.skip_witness_vii || self.skip_budget
    }
}

/// Accepts or rejects a candidate `(u, Λ)` sort.
pub type Admissibility = fn(&WSort) -> bool;

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    pub caps: Caps,
    pub mutations: Mutations,
    pub mode: Mode,
    pub admissible: Option<Admissibility>,
}

impl BuildOptions {
    pub fn with_caps(caps: Caps) -> Self {
        BuildOptions { caps, ..Default::default() }
    }
}

// ---------------------------------------------------------------------------
// Quadruple presets

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadrupleGen {
    pub u: BTreeSet<Ordinal>,
    pub g: PartialFn,
    pub h: PartialFn,
    pub zeta: PartialFn,
}

impl QuadrupleGen {
    pub fn empty() -> Self {
        QuadrupleGen { u: BTreeSet::new(), g: PartialFn::new(), h: PartialFn::new(), zeta: PartialFn::new() }
    }

    /// Componentwise inclusion, the `T` relation of the quadruple presets.
    pub fn below(&self, other: &QuadrupleGen) -> bool {
        self.u.is_subset(&other.u)
            && self.g.is_subset_of(&other.g)
            && self.h.is_subset_of(&other.h)
            && self.zeta.is_subset_of(&other.zeta)
    }
}

/// Clause data shared by `s1` (no profile) and `s2` (with profile).
#[derive(Debug, Clone)]
pub struct QuadSpec {
    pub lambda: Ordinal,
    pub profile: Option<CardinalProfile>,
    pub family: LocalFamily,
    pub mutations: Mutations,
}

impl QuadSpec {
    pub fn preset(&self) -> Preset {
        if self.profile.is_some() {
            Preset::S2
        } else {
            Preset::S1
        }
    }

    fn g_bounds(&self, x: Ordinal) -> (Ordinal, Ordinal) {
        match &self.profile {
            None => (0, self.lambda.saturating_sub(1)),
            Some(p) => {
                let i = p.i_of(x).unwrap_or(0);
                (p.mu(i), p.mu_plus(i))
            }
        }
    }

    fn h_bounds(&self, x: Ordinal) -> (Ordinal, Ordinal) {
        let (lo, hi) = match &self.profile {
            None => (0, self.lambda),
            Some(p) => {
                let i = p.i_of(x).unwrap_or(0);
                (p.mu(i), p.mu(i + 1))
            }
        };
        if self.mutations.skip_h_gt_x {
            (lo, hi)
        } else {
            (lo.max(x + 1), hi)
        }
    }

    /// The domain `ζ` must have, given `u`, `g` and `h`.
    pub fn zeta_dom(&self, u: &BTreeSet<Ordinal>, g: &PartialFn, h: &PartialFn) -> BTreeSet<Ordinal> {
        let bound = match &self.profile {
            None => g.sup_rang(),
            Some(p) => u
                .iter()
                .filter_map(|&x| {
                    let i = p.i_of(x).ok()?;
                    (h.get(x) == Some(p.mu(i + 1))).then(|| p.mu(i))
                })
                .max()
                .unwrap_or(0),
        };
        u.iter().copied().filter(|&x| x < bound).collect()
    }

    /// All valid quadruples with the given `u`, in canonical order.
    pub fn candidates(&self, u: &BTreeSet<Ordinal>) -> Vec<QuadrupleGen> {
        let dom: Vec<Ordinal> = u.iter().copied().collect();
        if dom.iter().any(|&x| x >= self.lambda) {
            return Vec::new();
        }
        let gs = weakly_increasing_functions(&dom, |x| self.g_bounds(x).0, |x| self.g_bounds(x).1);
        let hs = weakly_increasing_functions(&dom, |x| self.h_bounds(x).0, |x| self.h_bounds(x).1);
        let values: Vec<Ordinal> = (0..self.lambda).collect();
        let mut out = Vec::new();
        for g in &gs {
            for h in &hs {
                if !self.mutations.skip_g_eq_h_eq && !g_eq_h_eq(g, h) {
                    continue;
                }
                let zdom: Vec<Ordinal> = self.zeta_dom(u, g, h).into_iter().collect();
                for zeta in all_functions(&zdom, &values) {
                    if self.family.contains(&zeta) {
                        out.push(QuadrupleGen { u: u.clone(), g: g.clone(), h: h.clone(), zeta });
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// The first clause a quadruple violates, if any.
    pub fn violation(&self, q: &QuadrupleGen) -> Option<&'static str> {
        let u = &q.u;
        if q.g.domain_set() != *u || q.h.domain_set() != *u {
            return Some("(a) g, h are functions on u");
        }
        if u.iter().any(|&x| x >= self.lambda) {
            return Some("u ⊆ λ");
        }
        for &x in u {
            let (glo, ghi) = self.g_bounds(x);
            let (gx, hx) = (q.g.get(x).unwrap(), q.h.get(x).unwrap());
            if gx < glo || gx > ghi {
                return Some("g(x) in range");
            }
            let (hlo, hhi) = match &self.profile {
                None => (0, self.lambda),
                Some(p) => {
                    let i = p.i_of(x).unwrap_or(0);
                    (p.mu(i), p.mu(i + 1))
                }
            };
            if hx < hlo || hx > hhi {
                return Some("h(x) in range");
            }
            if !self.mutations.skip_h_gt_x && hx <= x {
                return Some("h(x) > x");
            }
        }
        if q.zeta.values().any(|y| y >= self.lambda) {
            return Some("ζ into λ");
        }
        if !self.family.contains(&q.zeta) {
            return Some("ζ ∈ 𝓕");
        }
        if !q.g.is_weakly_increasing() || !q.h.is_weakly_increasing() {
            return Some("g, h weakly increasing");
        }
        if !self.mutations.skip_g_eq_h_eq && !g_eq_h_eq(&q.g, &q.h) {
            return Some("g(x) = g(y) ⇒ h(x) = h(y)");
        }
        if q.zeta.domain_set() != self.zeta_dom(u, &q.g, &q.h) {
            return Some("Dom(ζ)");
        }
        None
    }

    /// `π_{w,u}(t)`.
    pub fn proj(&self, w: &BTreeSet<Ordinal>, u: &BTreeSet<Ordinal>, t: &QuadrupleGen) -> Result<QuadrupleGen> {
        if !u.is_subset(w) {
            return Err(Error::precondition("projection needs u ⊆ w"));
        }
        if t.u != *w {
            return Err(Error::precondition("generator does not belong to J_w"));
        }
        let g = t.g.restrict(u);
        let h = t.h.restrict(u);
        let zdom = self.zeta_dom(u, &g, &h);
        let zeta = t.zeta.restrict(&zdom);
        Ok(QuadrupleGen { u: u.clone(), g, h, zeta })
    }
}

fn g_eq_h_eq(g: &PartialFn, h: &PartialFn) -> bool {
    let pts: Vec<(Ordinal, Ordinal)> = g.iter().collect();
    pts.iter().all(|&(x, gx)| pts.iter().all(|&(y, gy)| gx != gy || h.get(x) == h.get(y)))
}

/// `π_{w,u}` of the `s1` preset.
pub fn proj_1(w: &BTreeSet<Ordinal>, u: &BTreeSet<Ordinal>, t: &QuadrupleGen) -> Result<QuadrupleGen> {
    if !u.is_subset(w) || t.u != *w {
        return Err(Error::precondition("projection needs u ⊆ w and t ∈ J_w"));
    }
    let g = t.g.restrict(u);
    let bound = g.sup_rang();
    let zeta = t.zeta.restrict_by(|x| u.contains(&x) && x < bound);
    Ok(QuadrupleGen { u: u.clone(), g, h: t.h.restrict(u), zeta })
}

/// `π_{w,u}` of the `s2` preset.
pub fn proj_2(
    profile: &CardinalProfile,
    w: &BTreeSet<Ordinal>,
    u: &BTreeSet<Ordinal>,
    t: &QuadrupleGen,
) -> Result<QuadrupleGen> {
    if !u.is_subset(w) || t.u != *w {
        return Err(Error::precondition("projection needs u ⊆ w and t ∈ J_w"));
    }
    let v_bound = u
        .iter()
        .filter_map(|&x| {
            let i = profile.i_of(x).ok()?;
            (t.h.get(x) == Some(profile.mu(i + 1))).then(|| profile.mu(i))
        })
        .max()
        .unwrap_or(0);
    let zeta = t.zeta.restrict_by(|x| u.contains(&x) && x < v_bound);
    Ok(QuadrupleGen { u: u.clone(), g: t.g.restrict(u), h: t.h.restrict(u), zeta })
}

#[derive(Debug)]
pub struct QuadData {
    pub spec: QuadSpec,
    pub sorts: Vec<BTreeSet<Ordinal>>,
    pub gens: Vec<Vec<QuadrupleGen>>,
    sort_index: HashMap<BTreeSet<Ordinal>, SortId>,
    gen_index: Vec<HashMap<QuadrupleGen, usize>>,
}

impl QuadData {
    pub fn sort_of(&self, u: &BTreeSet<Ordinal>) -> Option<SortId> {
        self.sort_index.get(u).copied()
    }

    pub fn gen_of(&self, s: SortId, t: &QuadrupleGen) -> Option<usize> {
        self.gen_index.get(s)?.get(t).copied()
    }
}

struct QuadT(Arc<QuadData>);

impl TRelation for QuadT {
    fn pairs(&self, _: &StructureParameter, s1: SortId, s2: SortId) -> Vec<(usize, usize)> {
        let d = &self.0;
        if !d.sorts[s1].is_subset(&d.sorts[s2]) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (i, a) in d.gens[s1].iter().enumerate() {
            for (j, b) in d.gens[s2].iter().enumerate() {
                if a.below(b) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Witness presets

/// A sort `(u, Λ)` of the witness presets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WSort {
    pub u: BTreeSet<Ordinal>,
    pub lambda_set: BTreeSet<PartialFn>,
}

impl WSort {
    pub fn empty() -> Self {
        WSort { u: BTreeSet::new(), lambda_set: BTreeSet::new() }
    }

    /// `Γ(s) = u ∪ ⋃ Dom(f)`.
    pub fn gamma(&self) -> BTreeSet<Ordinal> {
        let mut out = self.u.clone();
        for f in &self.lambda_set {
            out.extend(f.domain());
        }
        out
    }
}

/// `F` as the set of pairs it sends to 1.
pub type FMap = BTreeSet<(PartialFn, PartialFn)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WitnessGen {
    pub u: BTreeSet<Ordinal>,
    pub lambda_set: BTreeSet<PartialFn>,
    pub g: PartialFn,
    pub h: PartialFn,
    pub f: FMap,
    pub z: NodeId,
}

impl WitnessGen {
    pub fn sort(&self) -> WSort {
        WSort { u: self.u.clone(), lambda_set: self.lambda_set.clone() }
    }

    pub fn gen_type(&self) -> GenType {
        (self.g.clone(), self.h.clone(), self.f.clone())
    }
}

/// The `(g, h, F)` part of a witnessed generator.
pub type GenType = (PartialFn, PartialFn, FMap);

/// Clause data shared by `s3` (no profile) and `s4` (with profile).
#[derive(Debug, Clone)]
pub struct WitnessSpec {
    pub lambda: Ordinal,
    pub profile: Option<CardinalProfile>,
    pub tree: Arc<Tree>,
    pub mutations: Mutations,
}

impl WitnessSpec {
    pub fn preset(&self) -> Preset {
        if self.profile.is_some() {
            Preset::S4
        } else {
            Preset::S3
        }
    }

    fn gg_bounds(&self, x: Ordinal) -> (Ordinal, Ordinal) {
        match &self.profile {
            None => (0, self.lambda.saturating_sub(1)),
            Some(p) => {
                let i = p.i_of(x).unwrap_or(0);
                (p.mu(i), p.mu_plus(i))
            }
        }
    }

    fn hh_bounds(&self, x: Ordinal) -> (Ordinal, Ordinal) {
        let (lo, hi) = match &self.profile {
            None => (0, self.lambda),
            Some(p) => {
                let i = p.i_of(x).unwrap_or(0);
                (p.mu(i), p.mu(i + 1))
            }
        };
        if self.mutations.skip_h_gt_x {
            (lo, hi)
        } else {
            (lo.max(x + 1), hi)
        }
    }

    /// Clauses of a witness that do not mention the generator: (i), (iii)-(v)
    /// and, with a profile, (viii)-(ix).
    pub fn structural_violation(&self, gg: &PartialFn, hh: &PartialFn) -> Option<&'static str> {
        if gg.domain_set() != hh.domain_set() {
            return Some("(i) Dom(𝐠) = Dom(𝐡)");
        }
        if gg.iter().any(|(x, y)| x >= self.lambda || y >= self.lambda) || hh.values().any(|y| y > self.lambda) {
            return Some("(i) ranges within λ");
        }
        if !gg.is_weakly_increasing() || !hh.is_weakly_increasing() {
            return Some("(iii) 𝐠, 𝐡 weakly increasing");
        }
        if !self.mutations.skip_h_gt_x && hh.iter().any(|(x, y)| y <= x) {
            return Some("(iv) 𝐡(x) > x");
        }
        if !self.mutations.skip_g_eq_h_eq && !g_eq_h_eq(gg, hh) {
            return Some("(v) 𝐠(x) = 𝐠(y) ⇒ 𝐡(x) = 𝐡(y)");
        }
        if let Some(p) = &self.profile {
            for (x, y) in gg.iter() {
                let i = p.i_of(x).unwrap_or(0);
                if y < p.mu(i) || y > p.mu_plus(i) {
                    return Some("(viii) 𝐠(x) ∈ [μ_i(x), μ_i(x)⁺]");
                }
            }
            for (x, y) in hh.iter() {
                let i = p.i_of(x).unwrap_or(0);
                if y < p.mu(i) || y > p.mu(i + 1) {
                    return Some("(ix) 𝐡(x) ∈ [μ_i(x), μ_i(x)+1]");
                }
            }
        }
        None
    }

    /// `F` induced by a witness: `F(f1, f2) = 1` iff `f1 ⊆ 𝐠` and `f2 ⊆ 𝐡`.
    pub fn f_of(&self, lambda_set: &BTreeSet<PartialFn>, gg: &PartialFn, hh: &PartialFn) -> FMap {
        let mut out = FMap::new();
        for f1 in lambda_set {
            if !f1.is_subset_of(gg) {
                continue;
            }
            for f2 in lambda_set {
                if f2.is_subset_of(hh) {
                    out.insert((f1.clone(), f2.clone()));
                }
            }
        }
        out
    }

    /// The minimal level the node of `(u, Λ, g, h, F, ·)` must have.
    pub fn level(&self, u: &BTreeSet<Ordinal>, g: &PartialFn, h: &PartialFn, f: &FMap) -> Ordinal {
        match &self.profile {
            None => {
                let ys = g.values().chain(f.iter().flat_map(|(f1, _)| f1.values()));
                ys.map(|y| y + 1).max().unwrap_or(0)
            }
            Some(p) => {
                let mut best = 0;
                let mut consider = |x: Ordinal, y: Ordinal| {
                    if let Ok(i) = p.i_of(x) {
                        if y == p.mu(i + 1) {
                            best = best.max(p.mu(i));
                        }
                    }
                };
                for &x in u {
                    if let Some(y) = h.get(x) {
                        consider(x, y);
                    }
                }
                for (_, f2) in f {
                    for (x, y) in f2.iter() {
                        consider(x, y);
                    }
                }
                best
            }
        }
    }

    /// Every `(𝐠, 𝐡)` on exactly `dom` satisfying the structural clauses.
    pub fn witness_pairs(&self, dom: &BTreeSet<Ordinal>) -> Vec<(PartialFn, PartialFn)> {
        let dom: Vec<Ordinal> = dom.iter().copied().collect();
        if dom.iter().any(|&x| x >= self.lambda) {
            return Vec::new();
        }
        let gs = weakly_increasing_functions(&dom, |x| self.gg_bounds(x).0, |x| self.gg_bounds(x).1);
        let hs = weakly_increasing_functions(&dom, |x| self.hh_bounds(x).0, |x| self.hh_bounds(x).1);
        let mut out = Vec::new();
        for g in &gs {
            for h in &hs {
                if self.mutations.skip_g_eq_h_eq || g_eq_h_eq(g, h) {
                    out.push((g.clone(), h.clone()));
                }
            }
        }
        out
    }

    /// The `F`s a witness admits: the induced one, or any when (vii) is skipped.
    fn f_choices(&self, s: &WSort, gg: &PartialFn, hh: &PartialFn) -> Vec<FMap> {
        if !self.mutations.skip_witness_vii {
            return vec![self.f_of(&s.lambda_set, gg, hh)];
        }
        let pairs: Vec<(PartialFn, PartialFn)> = s
            .lambda_set
            .iter()
            .flat_map(|a| s.lambda_set.iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        (0u64..1 << pairs.len())
            .map(|mask| pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| p.clone()).collect())
            .collect()
    }

    /// Realizable `(g, h, F)` for a sort, each with the first witness found.
    pub fn types(&self, s: &WSort) -> BTreeMap<GenType, (PartialFn, PartialFn)> {
        let mut out = BTreeMap::new();
        for (gg, hh) in self.witness_pairs(&s.gamma()) {
            let (g, h) = (gg.restrict(&s.u), hh.restrict(&s.u));
            for f in self.f_choices(s, &gg, &hh) {
                out.entry((g.clone(), h.clone(), f)).or_insert_with(|| (gg.clone(), hh.clone()));
            }
        }
        out
    }

    /// `J_s` in canonical order, each with a stored witness.
    pub fn candidates(&self, s: &WSort) -> Vec<(WitnessGen, (PartialFn, PartialFn))> {
        let mut out = Vec::new();
        for ((g, h, f), wit) in self.types(s) {
            let level = self.level(&s.u, &g, &h, &f);
            for &z in self.tree.at_level(level) {
                let t = WitnessGen {
                    u: s.u.clone(),
                    lambda_set: s.lambda_set.clone(),
                    g: g.clone(),
                    h: h.clone(),
                    f: f.clone(),
                    z,
                };
                out.push((t, wit.clone()));
            }
        }
        out.sort();
        out
    }

    /// The first witness clause `(𝐠, 𝐡)` violates for `t`, if any.
    pub fn witness_violation(&self, gg: &PartialFn, hh: &PartialFn, t: &WitnessGen) -> Option<&'static str> {
        if let Some(c) = self.structural_violation(gg, hh) {
            return Some(c);
        }
        if !t.sort().gamma().is_subset(&gg.domain_set()) {
            return Some("(ii) Γ(s) ⊆ Dom(𝐠)");
        }
        if !t.g.is_subset_of(gg) || !t.h.is_subset_of(hh) {
            return Some("(vi) g ⊆ 𝐠, h ⊆ 𝐡");
        }
        if !self.mutations.skip_witness_vii && t.f != self.f_of(&t.lambda_set, gg, hh) {
            return Some("(vii) F(f1, f2) = 1 iff f1 ⊆ 𝐠 and f2 ⊆ 𝐡");
        }
        None
    }

    pub fn is_witness(&self, gg: &PartialFn, hh: &PartialFn, t: &WitnessGen) -> bool {
        self.witness_violation(gg, hh, t).is_none()
    }

    /// The first clause a generator violates, if any (witness searched on `Γ`).
    pub fn violation(&self, t: &WitnessGen) -> Option<&'static str> {
        if t.g.domain_set() != t.u || t.h.domain_set() != t.u {
            return Some("(a) g, h are functions on u");
        }
        if t.f.iter().any(|(a, b)| !t.lambda_set.contains(a) || !t.lambda_set.contains(b)) {
            return Some("(b) F on Λ²");
        }
        if t.z >= self.tree.len() {
            return Some("(c) z ∈ 𝒯");
        }
        if self.tree.level(t.z) != self.level(&t.u, &t.g, &t.h, &t.f) {
            return Some("(d) level minimality");
        }
        let dom = t.sort().gamma();
        if !self.witness_pairs(&dom).iter().any(|(gg, hh)| self.is_witness(gg, hh, t)) {
            return Some("(e) witness exists");
        }
        None
    }

    /// `t(s, 𝐠, 𝐡, z)`.
    pub fn t_of(&self, s: &WSort, gg: &PartialFn, hh: &PartialFn, z: NodeId) -> Result<WitnessGen> {
        let gamma = s.gamma();
        if !gamma.is_subset(&gg.domain_set()) {
            return Err(Error::precondition("Γ(s) ⊆ Dom(𝐠) fails"));
        }
        let (g_r, h_r) = (gg.restrict(&gamma), hh.restrict(&gamma));
        if let Some(c) = self.structural_violation(&g_r, &h_r) {
            return Err(Error::precondition(format!("witness clause {c} fails")));
        }
        if z >= self.tree.len() {
            return Err(Error::InvalidTree(format!("no node {z}")));
        }
        let (g, h) = (gg.restrict(&s.u), hh.restrict(&s.u));
        let f = self.f_of(&s.lambda_set, gg, hh);
        let level = self.level(&s.u, &g, &h, &f);
        if level > self.tree.level(z) {
            return Err(Error::NoNode { level });
        }
        let zt = self.tree.ancestor_at(z, level).ok_or(Error::NoNode { level })?;
        Ok(WitnessGen { u: s.u.clone(), lambda_set: s.lambda_set.clone(), g, h, f, z: zt })
    }

    /// Type pairs realized by a common witness of the two sorts.
    pub fn common_types(&self, s1: &WSort, s2: &WSort) -> BTreeSet<(GenType, GenType)> {
        let dom: BTreeSet<Ordinal> = s1.gamma().union(&s2.gamma()).copied().collect();
        let mut out = BTreeSet::new();
        for (gg, hh) in self.witness_pairs(&dom) {
            let (g1, h1) = (gg.restrict(&s1.u), hh.restrict(&s1.u));
            let (g2, h2) = (gg.restrict(&s2.u), hh.restrict(&s2.u));
            for f1 in self.f_choices(s1, &gg, &hh) {
                for f2 in self.f_choices(s2, &gg, &hh) {
                    out.insert(((g1.clone(), h1.clone(), f1.clone()), (g2.clone(), h2.clone(), f2)));
                }
            }
        }
        out
    }
}

/// Every `(u, Λ)` within caps, in canonical order.
pub fn sort_pool(lambda: Ordinal, caps: &Caps, admissible: Option<Admissibility>) -> Result<Vec<WSort>> {
    let values: Vec<Ordinal> = (0..lambda).collect();
    let mut fns = Vec::new();
    for dom in subsets_up_to(lambda, caps.max_fn_size) {
        let dom: Vec<Ordinal> = dom.into_iter().collect();
        fns.extend(all_functions(&dom, &values));
    }
    fns.sort();
    let mut lambda_sets = Vec::new();
    for idx in subsets_up_to(fns.len() as Ordinal, caps.max_lambda_set) {
        lambda_sets.push(idx.into_iter().map(|k| fns[k as usize].clone()).collect::<BTreeSet<_>>());
        if lambda_sets.len() > caps.max_sorts {
            return Err(Error::cap("sort pool", lambda_sets.len(), caps.max_sorts));
        }
    }
    let mut out = Vec::new();
    for u in subsets_up_to(lambda, caps.max_u) {
        for l in &lambda_sets {
            let s = WSort { u: u.clone(), lambda_set: l.clone() };
            if admissible.is_none_or(|a| a(&s)) {
                out.push(s);
            }
        }
        if out.len() > caps.max_sorts {
            return Err(Error::cap("sort pool", out.len(), caps.max_sorts));
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug)]
pub struct WitnessData {
    pub spec: WitnessSpec,
    pub sorts: Vec<WSort>,
    pub gens: Vec<Vec<WitnessGen>>,
    pub witnesses: Vec<Vec<(PartialFn, PartialFn)>>,
    sort_index: HashMap<WSort, SortId>,
    gen_index: Vec<HashMap<WitnessGen, usize>>,
}

impl WitnessData {
    pub fn sort_of(&self, s: &WSort) -> Option<SortId> {
        self.sort_index.get(s).copied()
    }

    pub fn gen_of(&self, s: SortId, t: &WitnessGen) -> Option<usize> {
        self.gen_index.get(s)?.get(t).copied()
    }
}

struct WitnessT(Arc<WitnessData>);

impl TRelation for WitnessT {
    fn pairs(&self, _: &StructureParameter, s1: SortId, s2: SortId) -> Vec<(usize, usize)> {
        let d = &self.0;
        let (j1, j2) = (&d.gens[s1], &d.gens[s2]);
        if j1.is_empty() || j2.is_empty() {
            return Vec::new();
        }
        let common = d.spec.common_types(&d.sorts[s1], &d.sorts[s2]);
        let mut out = Vec::new();
        for (i, a) in j1.iter().enumerate() {
            let ta = a.gen_type();
            for (j, b) in j2.iter().enumerate() {
                if d.spec.tree.comparable(a.z, b.z) && common.contains(&(ta.clone(), b.gen_type())) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Built presets

#[derive(Debug, Clone)]
pub enum PresetData {
    Quad(Arc<QuadData>),
    Witness(Arc<WitnessData>),
}

/// A built preset: the parameter, both pointed models and the generator data.
#[derive(Debug, Clone)]
pub struct Construction {
    pub preset: Preset,
    pub param: Arc<StructureParameter>,
    pub m1: Model,
    pub m2: Model,
    pub data: PresetData,
}

impl Construction {
    pub fn lambda(&self) -> Ordinal {
        match &self.data {
            PresetData::Quad(d) => d.spec.lambda,
            PresetData::Witness(d) => d.spec.lambda,
        }
    }

    pub fn profile(&self) -> Option<&CardinalProfile> {
        match &self.data {
            PresetData::Quad(d) => d.spec.profile.as_ref(),
            PresetData::Witness(d) => d.spec.profile.as_ref(),
        }
    }

    pub fn quad(&self) -> Option<&QuadData> {
        match &self.data {
            PresetData::Quad(d) => Some(d),
            PresetData::Witness(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&WitnessData> {
        match &self.data {
            PresetData::Witness(d) => Some(d),
            PresetData::Quad(_) => None,
        }
    }

    pub fn a_star(&self) -> &GroupElement {
        self.m1.constant.as_ref().expect("presets carry constants")
    }

    pub fn b_star(&self) -> &GroupElement {
        self.m2.constant.as_ref().expect("presets carry constants")
    }

    /// The sort holding the constants.
    pub fn base_sort(&self) -> SortId {
        self.a_star().sort
    }

    /// Sort count, total generators and the constants.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "preset": self.preset,
            "lambda": self.lambda(),
            "profile": self.profile(),
            "sorts": self.param.num_sorts(),
            "generators": self.param.num_generators(),
            "aStar": self.a_star(),
            "bStar": self.b_star(),
        })
    }

    /// `π̂_{w,u}` on a group element (quadruple presets only).
    pub fn proj_hat(&self, w: SortId, u: SortId, c: &GroupElement) -> Result<GroupElement> {
        let d = self.quad().ok_or_else(|| Error::precondition("π̂ is defined for the quadruple presets"))?;
        if c.sort != w {
            return Err(Error::precondition("element is not in G_w"));
        }
        let (wu, uu) = (&d.sorts[w], &d.sorts[u]);
        let mut out = self.param.zero(u);
        for l in c.support.ones() {
            let r = d.spec.proj(wu, uu, &d.gens[w][l])?;
            let k = d.gen_of(u, &r).ok_or_else(|| Error::precondition("projection left J_u"))?;
            out.support.flip(k);
        }
        Ok(out)
    }
}

fn check_size(what: impl FnOnce() -> String, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::cap(what(), size, cap))
    } else {
        Ok(())
    }
}

fn build_quad(spec: QuadSpec, opts: &BuildOptions) -> Result<Construction> {
    if spec.family.lambda() != spec.lambda {
        return Err(Error::ParameterMismatch(format!(
            "family is over λ = {} but the preset uses λ = {}",
            spec.family.lambda(),
            spec.lambda
        )));
    }
    if !spec.family.contains(&PartialFn::new()) {
        return Err(Error::InvalidFamily("the empty function must be a member".into()));
    }
    let sorts = subsets_up_to(spec.lambda, opts.caps.max_u);
    check_size(|| "I".into(), sorts.len(), opts.caps.max_sorts)?;
    let gens: Vec<Vec<QuadrupleGen>> = exec::map(opts.mode, &sorts, |u| spec.candidates(u));
    for (u, j) in sorts.iter().zip(&gens) {
        check_size(|| format!("J_{u:?}"), j.len(), opts.caps.max_gens_per_sort)?;
    }
    let sort_index = sorts.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
    let gen_index = gens.iter().map(|j| j.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect()).collect();
    let mut s_pairs = BTreeSet::new();
    for (a, ua) in sorts.iter().enumerate() {
        for (b, ub) in sorts.iter().enumerate() {
            if ua.is_subset(ub) {
                s_pairs.insert((a, b));
            }
        }
    }
    let preset = spec.preset();
    let data = Arc::new(QuadData { spec, sorts, gens, sort_index, gen_index });
    let labels = data
        .sorts
        .iter()
        .zip(&data.gens)
        .map(|(u, j)| (json_label(u), j.iter().map(json_label).collect()))
        .collect();
    let param = Arc::new(StructureParameter::new(labels, SRelation::Pairs(s_pairs), Arc::new(QuadT(data.clone())))?);
    let base = data.sort_of(&BTreeSet::new()).expect("∅ is always a sort");
    let b_gen = data.gen_of(base, &QuadrupleGen::empty()).expect("empty quadruple is valid when ∅ ∈ 𝓕");
    let m1 = Model::new(param.clone(), Some(param.zero(base)));
    let m2 = Model::new(param.clone(), Some(param.gen(base, b_gen)));
    Ok(Construction { preset, param, m1, m2, data: PresetData::Quad(data) })
}

fn json_label<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("labels serialize")
}

pub fn build_s1(lambda: Ordinal, family: &LocalFamily, opts: &BuildOptions) -> Result<Construction> {
    let spec = QuadSpec { lambda, profile: None, family: family.clone(), mutations: opts.mutations };
    build_quad(spec, opts)
}

pub fn build_s2(profile: &CardinalProfile, family: &LocalFamily, opts: &BuildOptions) -> Result<Construction> {
    let spec =
        QuadSpec { lambda: profile.lambda(), profile: Some(profile.clone()), family: family.clone(), mutations: opts.mutations };
    build_quad(spec, opts)
}

fn build_witness(spec: WitnessSpec, opts: &BuildOptions) -> Result<Construction> {
    let root = spec.tree.root()?;
    let sorts = sort_pool(spec.lambda, &opts.caps, opts.admissible)?;
    let found: Vec<Vec<(WitnessGen, (PartialFn, PartialFn))>> = exec::map(opts.mode, &sorts, |s| spec.candidates(s));
    for (s, j) in sorts.iter().zip(&found) {
        check_size(|| format!("J_{}", json_label(s)), j.len(), opts.caps.max_gens_per_sort)?;
    }
    let (gens, witnesses): (Vec<Vec<WitnessGen>>, Vec<Vec<(PartialFn, PartialFn)>>) =
        found.into_iter().map(|j| j.into_iter().unzip()).unzip();
    let sort_index = sorts.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let gen_index = gens.iter().map(|j| j.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect()).collect();
    let preset = spec.preset();
    let data = Arc::new(WitnessData { spec, sorts, gens, witnesses, sort_index, gen_index });
    let tree = data.spec.tree.clone();
    let labels = data
        .sorts
        .iter()
        .zip(&data.gens)
        .map(|(s, j)| {
            let gl = j
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "g": t.g, "h": t.h,
                        "F": t.f.iter().collect::<Vec<_>>(),
                        "z": tree.node(t.z).key,
                    })
                    .to_string()
                })
                .collect();
            (json_label(s), gl)
        })
        .collect();
    let param = Arc::new(StructureParameter::new(labels, SRelation::All, Arc::new(WitnessT(data.clone())))?);
    let base = data.sort_of(&WSort::empty()).expect("(∅, ∅) is always a sort");
    let root_gen = WitnessGen {
        u: BTreeSet::new(),
        lambda_set: BTreeSet::new(),
        g: PartialFn::new(),
        h: PartialFn::new(),
        f: FMap::new(),
        z: root,
    };
    let b_gen = data.gen_of(base, &root_gen).expect("the root generator is valid");
    let m1 = Model::new(param.clone(), Some(param.zero(base)));
    let m2 = Model::new(param.clone(), Some(param.gen(base, b_gen)));
    Ok(Construction { preset, param, m1, m2, data: PresetData::Witness(data) })
}

pub fn build_s3(lambda: Ordinal, tree: &Tree, opts: &BuildOptions) -> Result<Construction> {
    let spec = WitnessSpec { lambda, profile: None, tree: Arc::new(tree.clone()), mutations: opts.mutations };
    build_witness(spec, opts)
}

pub fn build_s4(profile: &CardinalProfile, tree: &Tree, opts: &BuildOptions) -> Result<Construction> {
    let spec = WitnessSpec {
        lambda: profile.lambda(),
        profile: Some(profile.clone()),
        tree: Arc::new(tree.clone()),
        mutations: opts.mutations,
    };
    build_witness(spec, opts)
}

// ---------------------------------------------------------------------------
// Preset configs

/// Either a bare `λ` or a full profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Lambda(Ordinal),
    Profile(CardinalProfile),
}

impl ProfileSpec {
    pub fn lambda(&self) -> Ordinal {
        match self {
            ProfileSpec::Lambda(l) => *l,
            ProfileSpec::Profile(p) => p.lambda(),
        }
    }

    /// The profile, reading a bare `λ` as `<0, λ>`.
    pub fn to_profile(&self) -> Result<CardinalProfile> {
        match self {
            ProfileSpec::Lambda(l) => CardinalProfile::regular(*l),
            ProfileSpec::Profile(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PresetConfig {
    pub preset: Preset,
    pub profile: ProfileSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<LocalFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeDoc>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "is_default")]
    pub mutations: Mutations,
}

fn is_default(m: &Mutations) -> bool {
    !m.any()
}

impl PresetConfig {
    pub fn from_json(text: &str) -> Result<PresetConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// The smallest `s1` instance: `λ = 2`, the family of all functions
    /// into `{0}` and `maxU = 1`.
    pub fn s1_minimal() -> PresetConfig {
        let family = LocalFamily::closure(2, [PartialFn::from_pairs([(0, 0), (1, 0)])]).expect("static family");
        PresetConfig {
            preset: Preset::S1,
            profile: ProfileSpec::Lambda(2),
            family: Some(family),
            tree: None,
            caps: Caps { max_u: 1, ..Caps::default() },
            mutations: Mutations::default(),
        }
    }

    /// The game tree: the family tree for `s1`/`s2`, the given tree otherwise.
    pub fn game_tree(&self) -> Result<Tree> {
        match self.preset {
            Preset::S1 | Preset::S2 => match (&self.tree, &self.family) {
                (Some(t), _) => Tree::from_doc(t),
                (None, Some(f)) => f.family_tree(),
                (None, None) => Err(Error::Config("preset needs a family".into())),
            },
            Preset::S3 | Preset::S4 => {
                Tree::from_doc(self.tree.as_ref().ok_or_else(|| Error::Config("preset needs a tree".into()))?)
            }
        }
    }

    pub fn build(&self, mode: Mode) -> Result<Construction> {
        let opts = BuildOptions { caps: self.caps, mutations: self.mutations, mode, admissible: None };
        match self.preset {
            Preset::S1 => build_s1(self.profile.lambda(), self.family_ref()?, &opts),
            Preset::S2 => build_s2(&self.profile.to_profile()?, self.family_ref()?, &opts),
            Preset::S3 => build_s3(self.profile.lambda(), &self.game_tree()?, &opts),
            Preset::S4 => build_s4(&self.profile.to_profile()?, &self.game_tree()?, &opts),
        }
    }

    fn family_ref(&self) -> Result<&LocalFamily> {
        self.family.as_ref().ok_or_else(|| Error::Config(format!("preset {} needs a family", self.preset.name())))
    }
}
