//! Invariant batteries. Each suite returns named checks with counts and the
//! first counterexample found, shrunk where the instance is a list.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::{build_s1, build_s2, build_s3, build_s4, BuildOptions, Caps, Construction, Mutations, WSort};
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::game::{parse_jsonl, Game, GameVariant, Player};
use crate::gf2_models::{
    is_partial_auto, is_partial_iso_semantic, q_member, GroupElement, Model, PartialMap, SRelation, SortId,
    StructureParameter,
};
use crate::ordinals::{CardinalProfile, Ordinal, PartialFn};
use crate::posets::{
    all_betabars, all_gfuns, all_wfuns, extend_g, h_of, in_w_j, leq_g, leq_g_char, leq_w, leq_w_char, small_profiles,
    union_g, union_w, GFun, WFun,
};
use crate::strategies::{explore, IsoStrategy};
use crate::trees::{permutations, rooted_trees_up_to, LocalFamily, Tree};

use super::{auto_space, iso_exists, oracle, solver};

pub const SUITES: [&str; 6] = ["poset-claims", "lemma17", "projections", "strategy-wins", "fact35", "solver-consistency"];

/// How much of each quantifier range to cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// The ranges the acceptance criteria name.
    #[default]
    Full,
    /// Smaller ranges for unit tests and smoke runs.
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub mode: Mode,
    pub mutations: Mutations,
    pub scale: Scale,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0x5eed, mode: Mode::Parallel, mutations: Mutations::default(), scale: Scale::Full }
    }
}

impl SuiteConfig {
    pub fn quick() -> Self {
        SuiteConfig { scale: Scale::Quick, ..Default::default() }
    }

    fn full(&self) -> bool {
        self.scale == Scale::Full
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckResult {
    pub name: String,
    pub count: u64,
    pub failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.count > 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: String,
    pub scale: Scale,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
    pub elapsed_ms: u64,
}

impl SuiteReport {
    /// Every check ran at least once and never failed.
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(f, "{} {} ({} checks, {:.1} s)", verdict, self.suite, self.checks.len(), self.elapsed_ms as f64 / 1000.0)?;
        for c in &self.checks {
            let tag = if c.passed() { "ok  " } else { "FAIL" };
            writeln!(f, "  {tag} {:<58} {:>9} cases {:>6} failed", c.name, c.count, c.failures)?;
            if let Some(cex) = &c.counterexample {
                writeln!(f, "       counterexample: {cex}")?;
            }
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// Check tallies in first-seen order.
#[derive(Debug, Default)]
struct Tally {
    checks: Vec<CheckResult>,
    notes: Vec<String>,
}

impl Tally {
    fn entry(&mut self, name: &str) -> &mut CheckResult {
        let k = match self.checks.iter().position(|c| c.name == name) {
            Some(k) => k,
            None => {
                self.checks.push(CheckResult { name: name.into(), count: 0, failures: 0, counterexample: None });
                self.checks.len() - 1
            }
        };
        &mut self.checks[k]
    }

    fn check(&mut self, name: &str, ok: bool, cex: impl FnOnce() -> String) {
        let e = self.entry(name);
        e.count += 1;
        if !ok {
            e.failures += 1;
            if e.counterexample.is_none() {
                e.counterexample = Some(cex());
            }
        }
    }

    fn note(&mut self, n: impl Into<String>) {
        let n = n.into();
        if !self.notes.contains(&n) {
            self.notes.push(n);
        }
    }

    fn merge(&mut self, other: Tally) {
        for c in other.checks {
            let e = self.entry(&c.name);
            e.count += c.count;
            e.failures += c.failures;
            if e.counterexample.is_none() {
                e.counterexample = c.counterexample;
            }
        }
        for n in other.notes {
            self.note(n);
        }
    }

    fn merge_all(parts: impl IntoIterator<Item = Tally>) -> Tally {
        let mut t = Tally::default();
        for p in parts {
            t.merge(p);
        }
        t
    }
}

/// Runs one suite by id.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let tally = match name {
        "poset-claims" => poset_claims(cfg)?,
        "lemma17" => lemma17(cfg)?,
        "projections" => projections(cfg)?,
        "strategy-wins" => strategy_wins(cfg)?,
        "fact35" => fact35(cfg)?,
        "solver-consistency" => solver_consistency(cfg)?,
        _ => return Err(Error::UnknownSuite(name.into())),
    };
    Ok(SuiteReport {
        suite: name.into(),
        scale: cfg.scale,
        seed: cfg.seed,
        checks: tally.checks,
        notes: tally.notes,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

// ---------------------------------------------------------------------------
// poset-claims

fn poset_claims(cfg: &SuiteConfig) -> Result<Tally> {
    let (lg, lw) = if cfg.full() { (5, 6) } else { (3, 4) };
    let mut t = g_claims(cfg, lg)?;
    let profiles = small_profiles(lw, 2);
    let parts = exec::map(cfg.mode, &profiles, w_claims);
    t.merge(Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?));
    Ok(t)
}

fn h_checks(t: &mut Tally, prefix: &str, g: &PartialFn, h: &PartialFn) {
    let pts: Vec<(Ordinal, Ordinal)> = g.iter().collect();
    for &(x, gx) in &pts {
        for &(y, gy) in &pts {
            if gx == gy {
                t.check(&format!("{prefix}: equal values give equal h"), h.get(x) == h.get(y), || {
                    format!("g = {g}, h = {h}, x = {x}, y = {y}")
                });
            }
            if x < y {
                t.check(&format!("{prefix}: h is weakly increasing"), h.get(x) <= h.get(y), || {
                    format!("g = {g}, h = {h}, x = {x}, y = {y}")
                });
            }
        }
        t.check(&format!("{prefix}: h(x) > x"), h.get(x).is_some_and(|hx| hx > x), || format!("g = {g}, h = {h}, x = {x}"));
    }
    if pts.is_empty() {
        t.check(&format!("{prefix}: h of the empty function is empty"), h.is_empty(), || format!("h = {h}"));
    }
}

/// Reflexivity, antisymmetry and transitivity of a relation given by its
/// matrix; `ups[a]` lists every `b` with `a ≤ b`.
fn order_checks(t: &mut Tally, prefix: &str, leq: &[Vec<bool>], show: impl Fn(usize) -> String) {
    let n = leq.len();
    let ups: Vec<Vec<usize>> = (0..n).map(|a| (0..n).filter(|&b| leq[a][b]).collect()).collect();
    for a in 0..n {
        t.check(&format!("{prefix}: order is reflexive"), leq[a][a], || show(a));
        for &b in &ups[a] {
            if b != a {
                t.check(&format!("{prefix}: order is antisymmetric"), !leq[b][a], || format!("{} and {}", show(a), show(b)));
            }
            for &c in &ups[b] {
                t.check(&format!("{prefix}: order is transitive"), leq[a][c], || {
                    format!("{} ≤ {} ≤ {}", show(a), show(b), show(c))
                });
            }
        }
    }
}

fn g_claims(cfg: &SuiteConfig, lambda: Ordinal) -> Result<Tally> {
    let mut t = Tally::default();
    let all = all_gfuns(lambda);
    let mut fns: Vec<PartialFn> = all.iter().map(|g| g.g.clone()).collect();
    fns.sort();
    fns.dedup();
    for f in &fns {
        h_checks(&mut t, "G", f, &h_of(f));
    }
    let tight: Vec<GFun> = fns.iter().map(|f| GFun::tight(f.clone())).collect::<Result<_>>()?;
    let rows: Vec<(Vec<bool>, Tally)> = exec::map_range(cfg.mode, tight.len(), |a| {
        let mut t = Tally::default();
        let row = tight
            .iter()
            .map(|b| {
                let (d, c) = (leq_g(&tight[a], b), leq_g_char(&tight[a], b));
                t.check("G: both order definitions agree", d == c, || format!("{} vs {}: by definition {d}", tight[a].g, b.g));
                d
            })
            .collect();
        (row, t)
    });
    let (leq, parts): (Vec<Vec<bool>>, Vec<Tally>) = rows.into_iter().unzip();
    t.merge(Tally::merge_all(parts));
    order_checks(&mut t, "G", &leq, |k| tight[k].g.to_string());

    for g1 in &all {
        for gamma in g1.gamma()..=lambda {
            let r = extend_g(g1, gamma, lambda);
            let ok = r.as_ref().is_ok_and(|g2| {
                g2.alpha == g1.alpha + 1
                    && g2.gamma() == gamma
                    && leq_g(g1, g2)
                    && GFun::new(g2.g.clone(), g2.alpha).is_ok()
            });
            t.check("G: extension to a larger domain one class up", ok, || format!("g1 = {} in G_{}, gamma = {gamma}: {r:?}", g1.g, g1.alpha));
        }
    }

    // chains <g_0, ..., g_(d-1)> with g_k in G_k
    let by_alpha: BTreeMap<Ordinal, Vec<&GFun>> = all.iter().fold(BTreeMap::new(), |mut m, g| {
        m.entry(g.alpha).or_insert_with(Vec::new).push(g);
        m
    });
    let max_len = (lambda as usize).min(4);
    let mut stack: Vec<Vec<GFun>> = vec![vec![GFun::empty()]];
    while let Some(chain) = stack.pop() {
        let d = chain.len() as Ordinal;
        let u = union_g(&chain);
        let ok = u.as_ref().is_ok_and(|u| GFun::new(u.g.clone(), d).is_ok() && chain.iter().all(|c| leq_g(c, u)));
        t.check("G: a chain's union bounds it in the next class", ok, || {
            format!("chain {:?}", chain.iter().map(|c| c.g.to_string()).collect::<Vec<_>>())
        });
        if chain.len() < max_len {
            let last = chain.last().unwrap();
            for &g in by_alpha.get(&d).into_iter().flatten() {
                if leq_g(last, g) {
                    let mut next = chain.clone();
                    next.push(g.clone());
                    stack.push(next);
                }
            }
        }
    }
    Ok(t)
}

fn w_claims(p: &CardinalProfile) -> Result<Tally> {
    let mut t = Tally::default();
    let ws = all_wfuns(p);
    let hs: Vec<PartialFn> = ws.iter().map(|w| w.h(p)).collect();
    let show = |k: usize| format!("{} over {:?}", ws[k].g, p.mus());
    for (w, h) in ws.iter().zip(&hs) {
        h_checks(&mut t, "W", &w.g, h);
        for (x, hx) in h.iter() {
            let i = p.i_of(x)?;
            t.check("W: h stays inside its interval", p.mu(i) <= hx && hx <= p.mu(i + 1), || {
                format!("{} over {:?}: h({x}) = {hx}", w.g, p.mus())
            });
        }
    }
    let n = ws.len();
    let mut leq = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            let d = ws[a].g.is_subset_of(&ws[b].g) && hs[a].is_subset_of(&hs[b]);
            debug_assert_eq!(d, leq_w(p, &ws[a], &ws[b]));
            let c = leq_w_char(p, &ws[a], &ws[b]);
            t.check("W: both order definitions agree", d == c, || format!("{} vs {}: by definition {d}", show(a), show(b)));
            leq[a][b] = d;
        }
    }
    order_checks(&mut t, "W", &leq, show);

    let betas = all_betabars(p);
    let mut literal_fill_misses = 0usize;
    for a in 0..n {
        for j in 0..p.kappa() {
            if !in_w_j(p, &ws[a], j) {
                continue;
            }
            for beta in betas.iter().filter(|b| b.j(p) <= j) {
                let covers = |w: &WFun| (0..p.kappa()).all(|i| w.beta.beta[i] >= beta.beta[i]);
                let exists = (0..n).any(|b| leq[a][b] && in_w_j(p, &ws[b], j) && covers(&ws[b]));
                t.check("W: some bound in W_j covers any admissible domain", exists, || {
                    format!("{}, j = {j}, beta = {:?}", show(a), beta.beta)
                });
                let grows = (0..p.kappa()).all(|i| beta.beta[i] >= ws[a].beta.beta[i]);
                if exists && grows {
                    let r = crate::posets::extend_w(p, &ws[a], j, beta);
                    let ok = r.as_ref().is_ok_and(|e| in_w_j(p, e, j) && leq_w(p, &ws[a], e) && e.beta == *beta);
                    if beta.j(p) == j {
                        t.check("W: the fill construction produces that bound", ok, || {
                            format!("{}, j = {j}, beta = {:?}: {r:?}", show(a), beta.beta)
                        });
                    } else if !ok {
                        // filling an unfinished interval below j with mu_i^+ leaves W_beta
                        literal_fill_misses += 1;
                    }
                }
            }
        }
    }

    if literal_fill_misses > 0 {
        t.note(format!(
            "profile {:?}: {literal_fill_misses} cases with j(beta) < j where filling with mu_i^+ leaves W_beta",
            p.mus()
        ));
    }
    let ups: Vec<Vec<usize>> = (0..n).map(|a| (0..n).filter(|&b| b != a && leq[a][b]).collect()).collect();
    for j in 0..p.kappa() {
        let inside: Vec<bool> = ws.iter().map(|w| in_w_j(p, w, j)).collect();
        let mut chains: Vec<Vec<usize>> = Vec::new();
        for a in (0..n).filter(|&a| inside[a]) {
            chains.push(vec![a]);
            for &b in ups[a].iter().filter(|&&b| inside[b]) {
                chains.push(vec![a, b]);
                for &c in ups[b].iter().filter(|&&c| inside[c]) {
                    chains.push(vec![a, b, c]);
                }
            }
        }
        for ch in chains {
            let top = *ch.last().unwrap();
            let exists = (0..n).any(|b| inside[b] && ch.iter().all(|&a| leq[a][b]));
            let describe = || format!("{:?}, j = {j}", ch.iter().map(|&k| ws[k].g.to_string()).collect::<Vec<_>>());
            t.check("W: an increasing chain in W_j has a bound in W_j", exists && leq[top][top], describe);
            let members: Vec<WFun> = ch.iter().map(|&k| ws[k].clone()).collect();
            let r = union_w(p, &members, j);
            let ok = r.as_ref().is_ok_and(|u| in_w_j(p, u, j) && members.iter().all(|m| leq_w(p, m, u)));
            t.check("W: the chain fill construction produces that bound", ok, || format!("{}: {r:?}", describe()));
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// lemma17

fn params_tiny() -> Vec<StructureParameter> {
    let mut out = Vec::new();
    for gens in 1..=2usize {
        for s_on in [false, true] {
            for code in 0u32..1 << (gens * gens) {
                let t: Vec<(usize, usize)> = (0..gens * gens).filter(|k| code >> k & 1 == 1).map(|k| (k / gens, k % gens)).collect();
                out.push(explicit_param(&[gens], if s_on { vec![(0, 0)] } else { vec![] }, t));
            }
        }
    }
    for s_code in 0u32..16 {
        for t_code in 0u32..16 {
            let s: Vec<(usize, usize)> = (0..4).filter(|k| s_code >> k & 1 == 1).map(|k| (k / 2, k % 2)).collect();
            let t: Vec<(usize, usize)> = (0..4).filter(|k| t_code >> k & 1 == 1).map(|k| (k / 2, k % 2)).collect();
            out.push(explicit_param(&[1, 1], s, t));
        }
    }
    out
}

fn explicit_param(counts: &[usize], s: Vec<(usize, usize)>, t: Vec<(usize, usize)>) -> StructureParameter {
    let labels = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (format!("s{k}"), (0..c).map(|i| format!("t{k}.{i}")).collect()))
        .collect();
    StructureParameter::explicit(labels, SRelation::Pairs(s.into_iter().collect()), t).expect("well formed")
}

/// Random parameter with `sorts` sorts and at most `per_sort` generators each.
fn bounded_parameter(rng: &mut ChaCha8Rng, max_sorts: usize, per_sort: usize, max_total: usize) -> StructureParameter {
    loop {
        let sorts = rng.gen_range(1..=max_sorts);
        let total = rng.gen_range(sorts..=max_total.max(sorts));
        let density = rng.gen_range(0.05..0.5);
        let p = oracle::random_parameter(rng, sorts, total, density);
        if (0..p.num_sorts()).all(|s| p.gen_count(s) <= per_sort) {
            return p;
        }
    }
}

fn all_closed_maps(param: &StructureParameter) -> Result<Vec<BTreeMap<SortId, GroupElement>>> {
    let mut out = vec![BTreeMap::new()];
    for s in 0..param.num_sorts() {
        let elems = param.elements(s, 1 << 10)?;
        let mut next = Vec::with_capacity(out.len() * (elems.len() + 1));
        for b in &out {
            next.push(b.clone());
            for c in &elems {
                let mut b2 = b.clone();
                b2.insert(s, c.clone());
                next.push(b2);
            }
        }
        out = next;
    }
    Ok(out)
}

fn show_bases(b: &[(SortId, GroupElement)]) -> String {
    let parts: Vec<String> = b.iter().map(|(s, c)| format!("c_{s} = {}", c.key())).collect();
    format!("{{{}}}", parts.join(", "))
}

fn lemma17_instance(shared: &Arc<StructureParameter>) -> Result<Tally> {
    let mut t = Tally::default();
    let param: &StructureParameter = shared;
    let model = Model::new(shared.clone(), None);
    let disagrees = |entries: &[(SortId, GroupElement)]| -> bool {
        let bases: BTreeMap<SortId, GroupElement> = entries.iter().cloned().collect();
        let map = PartialMap::GroupClosed(bases.clone()).materialize(param, 1 << 12).expect("tiny");
        is_partial_auto(param, &bases) != oracle::semantic_enum(param, (None, None), &map)
    };
    for bases in all_closed_maps(param)? {
        let map = PartialMap::GroupClosed(bases.clone()).materialize(param, 1 << 12)?;
        let lemma = is_partial_auto(param, &bases);
        let brute = oracle::semantic_enum(param, (None, None), &map);
        t.check("closed maps: pair-subgroup test equals the semantic test", lemma == brute, || {
            let entries: Vec<(SortId, GroupElement)> = bases.clone().into_iter().collect();
            let small = oracle::shrink(entries, disagrees);
            format!("{} with S = {:?}; pair test {lemma}", show_bases(&small), param.s_relation())
        });
        let crate_semantic = is_partial_iso_semantic(&model, &model, &map);
        t.check("closed maps: semantic checker equals enumeration", crate_semantic == brute, || {
            format!("{} with S = {:?}", show_bases(&bases.clone().into_iter().collect::<Vec<_>>()), param.s_relation())
        });
    }
    Ok(t)
}

fn lemma17(cfg: &SuiteConfig) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params: Vec<Arc<StructureParameter>> = params_tiny().into_iter().map(Arc::new).collect();
    let exhaustive = params.len();
    let random = if cfg.full() { 300 } else { 30 };
    for _ in 0..random {
        params.push(Arc::new(bounded_parameter(&mut rng, 3, 3, 9)));
    }
    let parts = exec::map(cfg.mode, &params, lemma17_instance);
    let mut t = Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?);
    t.note(format!(
        "closed maps checked on {exhaustive} parameters enumerated exhaustively (one sort with up to 2 generators, two sorts with 1 each) and {random} seeded random parameters with at most 3 sorts of at most 3 generators"
    ));

    // q_member against the enumerated pair subgroup
    let q_instances = if cfg.full() { 1000 } else { 100 };
    let q_params: Vec<(StructureParameter, u64)> =
        (0..q_instances).map(|_| (bounded_parameter(&mut rng, 4, 6, 12), rng.gen())).collect();
    let parts = exec::map(cfg.mode, &q_params, |(param, seed)| q_member_instance(param, *seed));
    t.merge(Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?));

    let a_instances = if cfg.full() { 300 } else { 40 };
    let a_params: Vec<(Arc<StructureParameter>, u64)> =
        (0..a_instances).map(|_| (Arc::new(bounded_parameter(&mut rng, 4, 5, 10)), rng.gen())).collect();
    let parts = exec::map(cfg.mode, &a_params, |(param, seed)| auto_instance(param, *seed));
    t.merge(Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?));
    t.note(format!("{q_instances} random parameters for membership, {a_instances} for automorphism counts, seed {}", cfg.seed));
    Ok(t)
}

fn random_element(rng: &mut ChaCha8Rng, param: &StructureParameter, s: SortId) -> GroupElement {
    let mut e = param.zero(s);
    for k in 0..param.gen_count(s) {
        if rng.gen_bool(0.5) {
            e.support.flip(k);
        }
    }
    e
}

fn q_member_instance(param: &StructureParameter, seed: u64) -> Result<Tally> {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = param.num_sorts();
    let s_pairs: Vec<(SortId, SortId)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| param.in_s(a, b)).collect();
    for &(s1, s2) in &s_pairs {
        let span: Vec<(u64, u64)> = oracle::pair_span(param, s1, s2).into_iter().collect();
        for k in 0..8 {
            let (a, b) = if k % 2 == 0 {
                // a member of the span, as a positive case
                let &(x, y) = &span[rng.gen_range(0..span.len())];
                (from_mask(param, s1, x), from_mask(param, s2, y))
            } else {
                (random_element(&mut rng, param, s1), random_element(&mut rng, param, s2))
            };
            let fast = q_member(param, s1, s2, &a, &b)?;
            let slow = oracle::q_member_enum(param, s1, s2, &a, &b);
            t.check("pair membership by elimination equals enumeration", fast == slow, || {
                format!("sorts ({s1}, {s2}), a = {}, b = {}, T = {:?}", a.key(), b.key(), param.t_pairs(s1, s2))
            });
        }
    }
    if s_pairs.is_empty() {
        t.entry("pair membership by elimination equals enumeration");
    }
    Ok(t)
}

fn from_mask(param: &StructureParameter, s: SortId, m: u64) -> GroupElement {
    let mut e = param.zero(s);
    for k in 0..param.gen_count(s) {
        if m >> k & 1 == 1 {
            e.support.flip(k);
        }
    }
    e
}

fn auto_instance(shared: &Arc<StructureParameter>, seed: u64) -> Result<Tally> {
    let mut t = Tally::default();
    let param: &StructureParameter = shared;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = auto_space(param, 64)?.dimension;
    let count = oracle::count_automorphisms(param);
    t.check("automorphism space: 2^dimension equals the enumerated count", 1u64 << d == count, || {
        format!("dimension {d}, count {count}, S = {:?}", param.s_relation())
    });
    let s = rng.gen_range(0..param.num_sorts());
    let m1 = Model::new(shared.clone(), Some(random_element(&mut rng, param, s)));
    let m2 = Model::new(shared.clone(), Some(random_element(&mut rng, param, s)));
    let fast = iso_exists(&m1, &m2, 64)?;
    let slow = oracle::iso_exists_enum(&m1, &m2);
    t.check("isomorphism question by elimination equals enumeration", fast == slow, || {
        format!("a* = {:?}, b* = {:?}", m1.constant.as_ref().map(|c| c.key()), m2.constant.as_ref().map(|c| c.key()))
    });
    Ok(t)
}

// ---------------------------------------------------------------------------
// projections

fn all_partial_family(lambda: Ordinal) -> Result<LocalFamily> {
    let dom: Vec<Ordinal> = (0..lambda).collect();
    let vals: Vec<Ordinal> = (0..lambda).collect();
    LocalFamily::closure(lambda, crate::ordinals::all_functions(&dom, &vals))
}

fn path_family(lambda: Ordinal) -> Result<LocalFamily> {
    let parents: Vec<Option<usize>> = (0..lambda as usize).map(|k| k.checked_sub(1)).collect();
    let tree = Tree::from_parents(&parents)?.relabel(&(0..lambda).collect::<Vec<_>>());
    LocalFamily::embed(&tree, lambda)
}

fn quad_configs(cfg: &SuiteConfig) -> Result<Vec<(String, Construction)>> {
    let opts = BuildOptions {
        caps: Caps { max_u: 2, ..Caps::default() },
        mutations: cfg.mutations,
        mode: cfg.mode,
        admissible: None,
    };
    let lambdas: &[Ordinal] = if cfg.full() { &[2, 3] } else { &[2] };
    let mut out = Vec::new();
    for &l in lambdas {
        for (name, fam) in [
            ("trivial", LocalFamily::closure(l, [])?),
            ("all", all_partial_family(l)?),
            ("path", path_family(l)?),
        ] {
            out.push((format!("s1 λ={l} family={name}"), build_s1(l, &fam, &opts)?));
        }
        let p = CardinalProfile::regular(l)?;
        out.push((format!("s2 mu={:?} family=all", p.mus()), build_s2(&p, &all_partial_family(l)?, &opts)?));
    }
    Ok(out)
}

fn projections(cfg: &SuiteConfig) -> Result<Tally> {
    let mut t = Tally::default();
    for (label, c) in quad_configs(cfg)? {
        t.merge(projection_instance(cfg, &label, &c)?);
    }
    Ok(t)
}

fn projection_instance(cfg: &SuiteConfig, label: &str, c: &Construction) -> Result<Tally> {
    let d = c.quad().expect("quadruple preset");
    let param = &c.param;
    let n = d.sorts.len();
    let sort_ids: Vec<SortId> = (0..n).collect();

    let parts = exec::map(cfg.mode, &sort_ids, |&w| -> Result<Tally> {
        let mut t = Tally::default();
        let built: BTreeSet<_> = d.gens[w].iter().cloned().collect();
        let brute = oracle::quad_generators(d.spec.lambda, d.spec.profile.as_ref(), &d.spec.family, &d.sorts[w]);
        t.check("generators equal the brute-force enumeration", built == brute, || {
            let extra: Vec<_> = built.difference(&brute).take(2).collect();
            let missing: Vec<_> = brute.difference(&built).take(2).collect();
            format!("{label}, u = {:?}: extra {extra:?}, missing {missing:?}", d.sorts[w])
        });
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ w as u64);
        for u in (0..n).filter(|&u| d.sorts[u].is_subset(&d.sorts[w])) {
            let (uu, wu) = (&d.sorts[u], &d.sorts[w]);
            let tp: HashSet<(usize, usize)> = param.t_pairs(u, w).into_iter().collect();
            for (j, tw) in d.gens[w].iter().enumerate() {
                let r = d.spec.proj(wu, uu, tw)?;
                let ri = d.gen_of(u, &r);
                t.check("projections land in the smaller sort", ri.is_some(), || {
                    format!("{label}: π_{{{wu:?},{uu:?}}}({tw:?}) = {r:?}")
                });
                for (i, tu) in d.gens[u].iter().enumerate() {
                    let related = tp.contains(&(i, j));
                    t.check("T-related exactly when equal to the projection", related == (*tu == r), || {
                        format!("{label}: r = {tu:?}, t = {tw:?}, related {related}")
                    });
                }
                for v in (0..n).filter(|&v| d.sorts[v].is_subset(wu) && uu.is_subset(&d.sorts[v])) {
                    let via = d.spec.proj(&d.sorts[v], uu, &d.spec.proj(wu, &d.sorts[v], tw)?)?;
                    t.check("projections compose", via == r, || {
                        format!("{label}: {uu:?} ⊆ {:?} ⊆ {wu:?}, t = {tw:?}", d.sorts[v])
                    });
                }
            }
            // the pair subgroup is the graph of the projection homomorphism
            let basis = param.pair_basis(u, w);
            t.check("pair subgroup has the dimension of a graph", basis.rank() == param.gen_count(w), || {
                format!("{label}: rank {} vs |J_w| = {}", basis.rank(), param.gen_count(w))
            });
            for j in 0..param.gen_count(w) {
                let x = param.gen(w, j);
                let img = c.proj_hat(w, u, &x)?;
                t.check("pair subgroup contains the graph", q_member(param, u, w, &img, &x)?, || {
                    format!("{label}: generator {j} of {wu:?}")
                });
            }
            let (gu, gw) = (param.gen_count(u), param.gen_count(w));
            let samples: Vec<GroupElement> = if gw <= 8 {
                param.elements(w, 1 << 8)?
            } else {
                (0..64).map(|_| random_element(&mut rng, param, w)).collect()
            };
            for cw in &samples {
                let img = c.proj_hat(w, u, cw)?;
                t.check("projection never lengthens the reduced form", img.weight() <= cw.weight(), || {
                    format!("{label}: {} ↦ {}", cw.key(), img.key())
                });
                if gu + gw <= 10 {
                    for cu in param.elements(u, 1 << 8)? {
                        let member = q_member(param, u, w, &cu, cw)?;
                        t.check("pair subgroup equals the graph", member == (cu == img), || {
                            format!("{label}: ({}, {})", cu.key(), cw.key())
                        });
                    }
                }
            }
        }
        Ok(t)
    });
    Ok(Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?))
}

// ---------------------------------------------------------------------------
// fact35

fn small_trees(full: bool) -> Result<Vec<(String, Tree)>> {
    let mut out = vec![
        ("path-2".to_string(), Tree::from_parents(&[None, Some(0)])?),
        ("cherry".to_string(), Tree::from_parents(&[None, Some(0), Some(0)])?),
    ];
    if full {
        out.push(("path-3".into(), Tree::from_parents(&[None, Some(0), Some(1)])?));
        out.push(("branching-5".into(), Tree::from_parents(&[None, Some(0), Some(0), Some(1), Some(2)])?));
    }
    Ok(out)
}

fn witness_configs(cfg: &SuiteConfig) -> Result<Vec<(String, Construction)>> {
    let caps = if cfg.full() {
        Caps { max_u: 1, max_lambda_set: 2, max_fn_size: 2, ..Caps::default() }
    } else {
        Caps { max_u: 1, max_lambda_set: 1, max_fn_size: 1, ..Caps::default() }
    };
    let opts = BuildOptions { caps, mutations: cfg.mutations, mode: cfg.mode, admissible: None };
    let lambdas: &[Ordinal] = if cfg.full() { &[2, 3] } else { &[2] };
    let mut out = Vec::new();
    for (name, tree) in small_trees(cfg.full())? {
        for &l in lambdas {
            out.push((format!("s3 λ={l} tree={name}"), build_s3(l, &tree, &opts)?));
            let p = CardinalProfile::regular(l)?;
            out.push((format!("s4 mu={:?} tree={name}", p.mus()), build_s4(&p, &tree, &opts)?));
        }
    }
    Ok(out)
}

fn fact35(cfg: &SuiteConfig) -> Result<Tally> {
    let mut t = Tally::default();
    for (label, c) in witness_configs(cfg)? {
        t.merge(fact35_instance(cfg, &label, &c)?);
    }
    Ok(t)
}

fn fact35_instance(cfg: &SuiteConfig, label: &str, c: &Construction) -> Result<Tally> {
    let d = c.witness().expect("witness preset");
    let spec = &d.spec;
    let tree = &spec.tree;
    let lambda = spec.lambda;
    let profile = spec.profile.as_ref();
    let full: BTreeSet<Ordinal> = (0..lambda).collect();
    let full_pairs = oracle::witness_pairs(lambda, profile, &full);
    let mut by_gamma: HashMap<BTreeSet<Ordinal>, Vec<(PartialFn, PartialFn)>> = HashMap::new();
    for s in &d.sorts {
        by_gamma.entry(s.gamma()).or_insert_with(|| oracle::witness_pairs(lambda, profile, &s.gamma()));
    }
    let nodes: Vec<usize> = (0..tree.len()).collect();
    let sort_ids: Vec<SortId> = (0..d.sorts.len()).collect();

    let parts = exec::map(cfg.mode, &sort_ids, |&s| -> Result<Tally> {
        let mut t = Tally::default();
        let sort: &WSort = &d.sorts[s];
        let built: BTreeSet<_> = d.gens[s].iter().cloned().collect();
        let brute = oracle::witness_generators(lambda, profile, tree, sort);
        t.check("witnessed generators equal the brute-force enumeration", built == brute, || {
            let extra: Vec<_> = built.difference(&brute).take(1).collect();
            let missing: Vec<_> = brute.difference(&built).take(1).collect();
            format!("{label}, s = {sort:?}: extra {extra:?}, missing {missing:?}")
        });
        let gamma = sort.gamma();
        let local = &by_gamma[&gamma];
        for (gg, hh) in local.iter().chain(full_pairs.iter()) {
            for &z in &nodes {
                let matches: Vec<&_> = d.gens[s].iter().filter(|t| spec.is_witness(gg, hh, t) && tree.leq(t.z, z)).collect();
                match spec.t_of(sort, gg, hh, z) {
                    Ok(tt) => {
                        t.check("exactly one generator matches and it is the one returned", matches.len() == 1 && *matches[0] == tt, || {
                            format!("{label}, s = {sort:?}, g = {gg}, h = {hh}, z = {z}: {} matches", matches.len())
                        });
                    }
                    Err(Error::NoNode { .. }) => {
                        t.check("no generator matches below a node that is too low", matches.is_empty(), || {
                            format!("{label}, s = {sort:?}, g = {gg}, h = {hh}, z = {z}")
                        });
                    }
                    Err(e) => {
                        t.check("t is defined for every witness pair", false, || {
                            format!("{label}, s = {sort:?}, g = {gg}, h = {hh}, z = {z}: {e}")
                        });
                    }
                }
            }
        }
        // a witness on everything and its restriction to Γ(s) are compatible
        for (gg, hh) in &full_pairs {
            let (gr, hr) = (gg.restrict(&gamma), hh.restrict(&gamma));
            for &z1 in &nodes {
                for &z2 in nodes.iter().filter(|&&z2| tree.comparable(z1, z2)) {
                    if let (Ok(a), Ok(b)) = (spec.t_of(sort, gg, hh, z1), spec.t_of(sort, &gr, &hr, z2)) {
                        t.check("compatible witnesses at comparable nodes give the same t", a == b, || {
                            format!("{label}, s = {sort:?}, g = {gg}, h = {hh}, z = {z1} / {z2}")
                        });
                    }
                }
            }
        }
        Ok(t)
    });
    Ok(Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?))
}

// ---------------------------------------------------------------------------
// strategy-wins and solver-consistency

/// One strategy configuration: a built preset, its game tree and variant.
pub struct StrategyConfig {
    pub label: String,
    pub construction: Construction,
    pub tree: Arc<Tree>,
    pub variant: GameVariant,
}

/// Injective labelings of `n` nodes by ordinals below `lambda`.
fn injections(n: usize, lambda: Ordinal) -> Vec<Vec<Ordinal>> {
    let mut out = Vec::new();
    for subset in crate::ordinals::subsets_up_to(lambda, n).into_iter().filter(|s| s.len() == n) {
        let vals: Vec<Ordinal> = subset.into_iter().collect();
        for perm in permutations(n) {
            out.push(perm.iter().map(|&k| vals[k as usize]).collect());
        }
    }
    out
}

/// Families from every labeled tree that fits below `lambda`.
fn embedded_families(lambda: Ordinal) -> Result<Vec<(String, LocalFamily)>> {
    let mut out = Vec::new();
    for parents in rooted_trees_up_to(lambda as usize) {
        let tree = Tree::from_parents(&parents)?;
        for labels in injections(parents.len(), lambda) {
            let fam = LocalFamily::embed(&tree.relabel(&labels), lambda)?;
            out.push((format!("parents={parents:?} labels={labels:?}"), fam));
        }
    }
    Ok(out)
}

/// The configurations the strategy and solver suites quantify over.
pub fn strategy_configs(cfg: &SuiteConfig) -> Result<Vec<StrategyConfig>> {
    let full = cfg.full();
    let opts = |caps: Caps| BuildOptions { caps, mutations: cfg.mutations, mode: Mode::Sequential, admissible: None };
    let mut jobs: Vec<Box<dyn Fn() -> Result<StrategyConfig> + Send + Sync>> = Vec::new();

    let lambdas: &[Ordinal] = if full { &[2, 3] } else { &[2] };
    for &l in lambdas {
        for (name, fam) in embedded_families(l)? {
            let o = opts(Caps { max_u: 2, ..Caps::default() });
            jobs.push(Box::new(move || {
                let c = build_s1(l, &fam, &o)?;
                Ok(StrategyConfig {
                    label: format!("s1 λ={l} {name}"),
                    construction: c,
                    tree: Arc::new(fam.family_tree()?),
                    variant: GameVariant::FixedBudget { mu: l },
                })
            }));
        }
    }

    let profile = if full { CardinalProfile::new(vec![0, 2, 4])? } else { CardinalProfile::regular(2)? };
    let fams = if full { embedded_families(profile.lambda())? } else { embedded_families(2)? };
    for (name, fam) in fams {
        let o = opts(Caps { max_u: 2, ..Caps::default() });
        let p = profile.clone();
        jobs.push(Box::new(move || {
            let c = build_s2(&p, &fam, &o)?;
            Ok(StrategyConfig {
                label: format!("s2 mu={:?} {name}", p.mus()),
                construction: c,
                tree: Arc::new(fam.family_tree()?),
                variant: GameVariant::FixedBudget { mu: 1 },
            })
        }));
    }

    let (max_nodes, l3) = if full { (8, 3) } else { (4, 2) };
    for parents in rooted_trees_up_to(max_nodes) {
        let tree = Arc::new(Tree::from_parents(&parents)?);
        let o = opts(Caps { max_u: 1, max_lambda_set: 1, max_fn_size: 1, ..Caps::default() });
        let t3 = tree.clone();
        let p3 = parents.clone();
        jobs.push(Box::new(move || {
            let c = build_s3(l3, &t3, &o)?;
            Ok(StrategyConfig {
                label: format!("s3 λ={l3} parents={p3:?}"),
                construction: c,
                tree: t3.clone(),
                variant: GameVariant::FixedBudget { mu: l3 },
            })
        }));
        let profile = CardinalProfile::regular(l3)?;
        jobs.push(Box::new(move || {
            let c = build_s4(&profile, &tree, &o)?;
            Ok(StrategyConfig {
                label: format!("s4 mu={:?} parents={parents:?}", profile.mus()),
                construction: c,
                tree: tree.clone(),
                variant: GameVariant::Star,
            })
        }));
    }
    exec::map(cfg.mode, &jobs, |job| job()).into_iter().collect()
}

fn strategy_wins(cfg: &SuiteConfig) -> Result<Tally> {
    let configs = strategy_configs(cfg)?;
    let parts = exec::map(cfg.mode, &configs, |sc| -> Result<Tally> {
        let mut t = Tally::default();
        let rep = explore(&sc.construction, sc.tree.clone(), sc.variant, Mode::Sequential)?;
        let group = sc.label.split(' ').next().unwrap_or("");
        t.check(&format!("{group}: ISO wins every exhaustive play"), rep.all_iso(), || {
            format!("{}: {} AIS wins of {}; {:?}", sc.label, rep.ais_wins, rep.plays, rep.failures)
        });
        Ok(t)
    });
    let mut t = Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?);
    t.merge(budget_check(cfg)?);
    t.note(format!(
        "{} configurations; s1/s2 families come from labeled trees with at most lambda nodes, the most that embed injectively",
        configs.len()
    ));
    Ok(t)
}

/// The referee refuses a move set larger than the stage budget.
fn budget_check(cfg: &SuiteConfig) -> Result<Tally> {
    let mut t = Tally::default();
    let fam = path_family(2)?;
    let c = build_s1(2, &fam, &BuildOptions { mutations: cfg.mutations, ..BuildOptions::with_caps(Caps { max_u: 1, ..Caps::default() }) })?;
    let tree = Arc::new(fam.family_tree()?);
    let mut game = Game::new(c.m1.clone(), c.m2.clone(), tree.clone(), GameVariant::FixedBudget { mu: 1 })?;
    if cfg.mutations.skip_budget {
        game = game.without_budget_check();
    }
    let root = game.frontier()[0];
    game.ais_node(root)?;
    let z = game.frontier()[0];
    game.ais_node(z)?;
    let two: Vec<GroupElement> = (0..2).map(|s| c.param.zero(s)).collect();
    let r = game.ais_sets(two, Vec::new());
    t.check("referee rejects move sets over budget", matches!(r, Err(Error::RejectedMove { .. })), || {
        format!("two elements at stage 1 under a budget of 1 gave {r:?}")
    });
    Ok(t)
}

fn solver_consistency(cfg: &SuiteConfig) -> Result<Tally> {
    let configs = strategy_configs(cfg)?;
    let caps = solver::SolveCaps::default();
    let parts = exec::map(cfg.mode, &configs, |sc| -> Result<Tally> {
        let mut t = Tally::default();
        let c = &sc.construction;
        let iso = IsoStrategy::new(c, sc.tree.clone())?;
        let r = solver::solve_game(&c.m1, &c.m2, sc.tree.clone(), sc.variant, &caps, Some(&iso))?;
        let group = sc.label.split(' ').next().unwrap_or("");
        t.check(&format!("{group}: solver finds ISO wins"), r.winner == Player::Iso, || {
            format!("{}: {:?} ({})", sc.label, r.winner, r.move_ordering)
        });
        t.check("certificates replay to the solved winner", replays(&r, c, &sc.tree, sc.variant)?, || sc.label.clone());
        Ok(t)
    });
    let mut t = Tally::merge_all(parts.into_iter().collect::<Result<Vec<_>>>()?);

    // without the hint, on the configurations small enough to solve outright
    let exact_opts = BuildOptions { mutations: cfg.mutations, ..BuildOptions::with_caps(Caps { max_u: 1, ..Caps::default() }) };
    for (name, fam) in embedded_families(2)? {
        let c = build_s1(2, &fam, &exact_opts)?;
        let tree = Arc::new(fam.family_tree()?);
        let v = GameVariant::FixedBudget { mu: 1 };
        let r = solver::solve_game(&c.m1, &c.m2, tree.clone(), v, &caps, None)?;
        t.check("exact solver finds ISO wins on tiny s1 games", r.winner == Player::Iso, || format!("s1 λ=2 {name}"));
        t.check("certificates replay to the solved winner", replays(&r, &c, &tree, v)?, || format!("s1 λ=2 {name}"));
    }

    let (m1, m2, tree) = solver::adversarial_instance();
    let v = GameVariant::FixedBudget { mu: 1 };
    let r = solver::solve_game(&m1, &m2, tree.clone(), v, &caps, None)?;
    t.check("solver finds the AIS win on the mismatched instance", r.winner == Player::Ais, || format!("{:?}", r.winner));
    let parsed = parse_jsonl(&r.certificate)?;
    let g = Game::new(m1, m2, tree, v)?.replay(&parsed.records)?;
    t.check("certificates replay to the solved winner", g.winner() == Some(r.winner), || "adversarial instance".into());
    t.note("verdicts are group-closed-restricted: ISO answers with group-closed maps covering the touched sorts and the constant's sort");
    Ok(t)
}

fn replays(r: &solver::SolveReport, c: &Construction, tree: &Arc<Tree>, v: GameVariant) -> Result<bool> {
    let parsed = parse_jsonl(&r.certificate)?;
    let g = Game::new(c.m1.clone(), c.m2.clone(), tree.clone(), v)?.replay(&parsed.records)?;
    Ok(g.winner() == Some(r.winner) && parsed.winner == Some(r.winner))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[ignore]
    fn time_full_suites() {
        let only = std::env::var("SUITE").ok();
        for name in SUITES.iter().filter(|n| only.as_deref().is_none_or(|o| o == **n)) {
            let r = run_suite(name, &SuiteConfig::default()).unwrap();
            eprintln!("{r}");
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", &SuiteConfig::quick()), Err(Error::UnknownSuite(_))));
    }

    /// Checks that fail at every finite scale; see the poset notes.
    const FINITE_SCALE_FAILURES: [&str; 1] = ["W: some bound in W_j covers any admissible domain"];

    #[test]
    fn quick_suites_pass() {
        for name in SUITES {
            let r = run_suite(name, &SuiteConfig::quick()).unwrap();
            eprintln!("{r}");
            for c in &r.checks {
                assert!(c.passed() || FINITE_SCALE_FAILURES.contains(&c.name.as_str()), "{r}");
            }
        }
    }

    #[test]
    fn injections_count() {
        assert_eq!(injections(2, 3).len(), 6);
        assert_eq!(injections(3, 3).len(), 6);
        assert_eq!(injections(1, 4).len(), 4);
    }

    #[test]
    fn report_text_lists_checks() {
        let r = run_suite("lemma17", &SuiteConfig::quick()).unwrap();
        let text = r.to_string();
        assert!(text.starts_with("PASS lemma17"));
        assert!(text.contains("pair membership by elimination equals enumeration"));
    }
}
