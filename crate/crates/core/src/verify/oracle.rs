//! Brute-force reference implementations.
//!
//! Nothing here uses elimination or the crate's clause checkers: subgroups
//! are closed by enumeration and generator clauses are re-stated directly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;

use crate::constructions::{FMap, QuadrupleGen, WSort, WitnessGen};
use crate::gf2_models::{GroupElement, Model, SRelation, SortId, StructureParameter};
use crate::ordinals::{all_functions, CardinalProfile, Ordinal, PartialFn};
use crate::trees::{LocalFamily, Tree};

pub fn mask(e: &GroupElement) -> u64 {
    e.support.ones().fold(0, |m, k| m | 1 << k)
}

/// The subgroup of `G_{s1} × G_{s2}` generated by the `T`-pairs, listed.
pub fn pair_span(param: &StructureParameter, s1: SortId, s2: SortId) -> HashSet<(u64, u64)> {
    let mut set: HashSet<(u64, u64)> = [(0, 0)].into();
    for (a, b) in param.t_pairs(s1, s2) {
        let g = (1u64 << a, 1u64 << b);
        let more: Vec<(u64, u64)> = set.iter().map(|&(x, y)| (x ^ g.0, y ^ g.1)).collect();
        set.extend(more);
    }
    set
}

pub fn q_member_enum(param: &StructureParameter, s1: SortId, s2: SortId, a: &GroupElement, b: &GroupElement) -> bool {
    pair_span(param, s1, s2).contains(&(mask(a), mask(b)))
}

/// Partial isomorphism check by definition, with `Q` looked up in the
/// enumerated subgroups.
pub fn semantic_enum(
    param: &StructureParameter,
    constants: (Option<&GroupElement>, Option<&GroupElement>),
    map: &BTreeMap<GroupElement, GroupElement>,
) -> bool {
    let mut spans: HashMap<(SortId, SortId), HashSet<(u64, u64)>> = HashMap::new();
    let entries: Vec<(&GroupElement, &GroupElement)> = map.iter().collect();
    let images: HashSet<&GroupElement> = map.values().collect();
    if images.len() != map.len() {
        return false;
    }
    for &(a, b) in &entries {
        if a.sort != b.sort {
            return false;
        }
    }
    for &(a1, b1) in &entries {
        for &(a2, b2) in &entries {
            if a1.sort == a2.sort && mask(a1) ^ mask(a2) != mask(b1) ^ mask(b2) {
                return false;
            }
            if param.in_s(a1.sort, a2.sort) {
                let span = spans.entry((a1.sort, a2.sort)).or_insert_with(|| pair_span(param, a1.sort, a2.sort));
                if span.contains(&(mask(a1), mask(a2))) != span.contains(&(mask(b1), mask(b2))) {
                    return false;
                }
            }
        }
    }
    if let (Some(c1), Some(c2)) = constants {
        for &(a, b) in &entries {
            if (a == c1) != (b == c2) {
                return false;
            }
        }
    }
    true
}

/// Whether translating every sort by its base is an automorphism: every
/// element of each `S`-subgroup must land back in it.
fn translation_is_auto(
    param: &StructureParameter,
    spans: &HashMap<(SortId, SortId), HashSet<(u64, u64)>>,
    bases: &[u64],
) -> bool {
    spans.iter().all(|(&(s1, s2), span)| {
        let (c1, c2) = (bases[s1], bases[s2]);
        let _ = param;
        span.iter().all(|&(x, y)| span.contains(&(x ^ c1, y ^ c2)))
    })
}

fn all_spans(param: &StructureParameter) -> HashMap<(SortId, SortId), HashSet<(u64, u64)>> {
    let n = param.num_sorts();
    let mut out = HashMap::new();
    for s1 in 0..n {
        for s2 in 0..n {
            if param.in_s(s1, s2) {
                out.insert((s1, s2), pair_span(param, s1, s2));
            }
        }
    }
    out
}

fn all_tuples(param: &StructureParameter) -> impl Iterator<Item = Vec<u64>> + '_ {
    let total = param.num_generators();
    assert!(total <= 20, "refusing to enumerate 2^{total} tuples");
    (0u64..1 << total).map(move |code| {
        (0..param.num_sorts())
            .map(|s| (code >> param.offset(s)) & ((1u64 << param.gen_count(s)) - 1))
            .collect()
    })
}

/// Number of base tuples whose translation is an automorphism.
pub fn count_automorphisms(param: &StructureParameter) -> u64 {
    let spans = all_spans(param);
    all_tuples(param).filter(|b| translation_is_auto(param, &spans, b)).count() as u64
}

/// Whether some translation automorphism carries `a*` to `b*`.
pub fn iso_exists_enum(m1: &Model, m2: &Model) -> bool {
    let param = &m1.param;
    let spans = all_spans(param);
    all_tuples(param).any(|b| {
        let fixes = match (&m1.constant, &m2.constant) {
            (None, None) => true,
            (Some(a), Some(c)) => a.sort == c.sort && mask(a) ^ b[a.sort] == mask(c),
            _ => false,
        };
        fixes && translation_is_auto(param, &spans, &b)
    })
}

/// A random parameter with `total` generators spread over `sorts` sorts.
pub fn random_parameter(rng: &mut impl Rng, sorts: usize, total: usize, density: f64) -> StructureParameter {
    let mut counts = vec![1usize; sorts];
    for _ in sorts..total {
        let k = rng.gen_range(0..sorts);
        counts[k] += 1;
    }
    let labels = counts
        .iter()
        .enumerate()
        .map(|(s, &c)| (format!("s{s}"), (0..c).map(|k| format!("t{s}.{k}")).collect()))
        .collect();
    let n: usize = counts.iter().sum();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                pairs.push((a, b));
            }
        }
    }
    let mut s = BTreeSet::new();
    for a in 0..sorts {
        for b in 0..sorts {
            if rng.gen_bool(0.6) {
                s.insert((a, b));
            }
        }
    }
    StructureParameter::explicit(labels, SRelation::Pairs(s), pairs).expect("generated parameter is well formed")
}

fn increasing(f: &PartialFn) -> bool {
    let v: Vec<Ordinal> = f.values().collect();
    (1..v.len()).all(|k| v[k - 1] <= v[k])
}

fn interval_of(p: &CardinalProfile, x: Ordinal) -> usize {
    (0..p.kappa()).find(|&i| p.mu(i) <= x && x < p.mu(i + 1)).expect("x below lambda")
}

/// `J_u` of the quadruple presets, by trying every `(g, h, ζ)`.
pub fn quad_generators(
    lambda: Ordinal,
    profile: Option<&CardinalProfile>,
    family: &LocalFamily,
    u: &BTreeSet<Ordinal>,
) -> BTreeSet<QuadrupleGen> {
    let dom: Vec<Ordinal> = u.iter().copied().collect();
    let vals: Vec<Ordinal> = (0..=lambda).collect();
    let below: Vec<Ordinal> = (0..lambda).collect();
    let fns = all_functions(&dom, &vals);
    let mut out = BTreeSet::new();
    if dom.iter().any(|&x| x >= lambda) {
        return out;
    }
    for g in &fns {
        let g_ok = dom.iter().all(|&x| {
            let y = g.get(x).unwrap();
            match profile {
                None => y < lambda,
                Some(p) => {
                    let i = interval_of(p, x);
                    p.mu(i) <= y && y <= p.mu(i) + 1
                }
            }
        });
        if !g_ok || !increasing(g) {
            continue;
        }
        for h in &fns {
            let h_ok = dom.iter().all(|&x| {
                let y = h.get(x).unwrap();
                y > x
                    && match profile {
                        None => true,
                        Some(p) => {
                            let i = interval_of(p, x);
                            p.mu(i) <= y && y <= p.mu(i + 1)
                        }
                    }
            });
            if !h_ok || !increasing(h) {
                continue;
            }
            if dom.iter().any(|&x| dom.iter().any(|&y| g.get(x) == g.get(y) && h.get(x) != h.get(y))) {
                continue;
            }
            let bound = match profile {
                None => g.values().max().unwrap_or(0),
                Some(p) => dom
                    .iter()
                    .filter(|&&x| h.get(x) == Some(p.mu(interval_of(p, x) + 1)))
                    .map(|&x| p.mu(interval_of(p, x)))
                    .max()
                    .unwrap_or(0),
            };
            let zdom: Vec<Ordinal> = dom.iter().copied().filter(|&x| x < bound).collect();
            for zeta in all_functions(&zdom, &below) {
                if family.contains(&zeta) {
                    out.insert(QuadrupleGen { u: u.clone(), g: g.clone(), h: h.clone(), zeta });
                }
            }
        }
    }
    out
}

/// Witness clauses stated directly, for `(𝐠, 𝐡)` on exactly `dom`.
fn witnesses(lambda: Ordinal, profile: Option<&CardinalProfile>, dom: &BTreeSet<Ordinal>) -> Vec<(PartialFn, PartialFn)> {
    let d: Vec<Ordinal> = dom.iter().copied().collect();
    if d.iter().any(|&x| x >= lambda) {
        return Vec::new();
    }
    let gvals: Vec<Ordinal> = (0..lambda).collect();
    let hvals: Vec<Ordinal> = (0..=lambda).collect();
    let hs = all_functions(&d, &hvals);
    let mut out = Vec::new();
    for gg in all_functions(&d, &gvals) {
        if !increasing(&gg) {
            continue;
        }
        if let Some(p) = profile {
            if d.iter().any(|&x| {
                let (i, y) = (interval_of(p, x), gg.get(x).unwrap());
                y < p.mu(i) || y > p.mu(i) + 1
            }) {
                continue;
            }
        }
        for hh in &hs {
            if !increasing(hh) || d.iter().any(|&x| hh.get(x).unwrap() <= x) {
                continue;
            }
            if d.iter().any(|&x| d.iter().any(|&y| gg.get(x) == gg.get(y) && hh.get(x) != hh.get(y))) {
                continue;
            }
            if let Some(p) = profile {
                if d.iter().any(|&x| {
                    let (i, y) = (interval_of(p, x), hh.get(x).unwrap());
                    y < p.mu(i) || y > p.mu(i + 1)
                }) {
                    continue;
                }
            }
            out.push((gg.clone(), hh.clone()));
        }
    }
    out
}

fn induced_f(s: &WSort, gg: &PartialFn, hh: &PartialFn) -> FMap {
    let mut f = FMap::new();
    for f1 in &s.lambda_set {
        for f2 in &s.lambda_set {
            if f1.is_subset_of(gg) && f2.is_subset_of(hh) {
                f.insert((f1.clone(), f2.clone()));
            }
        }
    }
    f
}

fn min_level(profile: Option<&CardinalProfile>, u: &BTreeSet<Ordinal>, g: &PartialFn, h: &PartialFn, f: &FMap) -> Ordinal {
    match profile {
        None => {
            let mut ys: Vec<Ordinal> = g.values().collect();
            for (f1, _) in f {
                ys.extend(f1.values());
            }
            ys.into_iter().map(|y| y + 1).max().unwrap_or(0)
        }
        Some(p) => {
            let mut pts: Vec<(Ordinal, Ordinal)> = u.iter().filter_map(|&x| h.get(x).map(|y| (x, y))).collect();
            for (_, f2) in f {
                pts.extend(f2.iter());
            }
            pts.into_iter()
                .filter(|&(x, _)| x < p.lambda())
                .filter(|&(x, y)| y == p.mu(interval_of(p, x) + 1))
                .map(|(x, _)| p.mu(interval_of(p, x)))
                .max()
                .unwrap_or(0)
        }
    }
}

/// `J_s` of the witness presets.
pub fn witness_generators(lambda: Ordinal, profile: Option<&CardinalProfile>, tree: &Tree, s: &WSort) -> BTreeSet<WitnessGen> {
    let gamma = s.gamma();
    let mut out = BTreeSet::new();
    for (gg, hh) in witnesses(lambda, profile, &gamma) {
        let (g, h) = (gg.restrict(&s.u), hh.restrict(&s.u));
        let f = induced_f(s, &gg, &hh);
        let level = min_level(profile, &s.u, &g, &h, &f);
        for z in (0..tree.len()).filter(|&z| tree.level(z) == level) {
            out.insert(WitnessGen { u: s.u.clone(), lambda_set: s.lambda_set.clone(), g: g.clone(), h: h.clone(), f: f.clone(), z });
        }
    }
    out
}

/// Every `(𝐠, 𝐡)` on `dom` satisfying the witness clauses, for suites.
pub fn witness_pairs(lambda: Ordinal, profile: Option<&CardinalProfile>, dom: &BTreeSet<Ordinal>) -> Vec<(PartialFn, PartialFn)> {
    witnesses(lambda, profile, dom)
}

/// Greedy deletion: drops items while `fails` keeps holding.
pub fn shrink<T: Clone>(mut items: Vec<T>, fails: impl Fn(&[T]) -> bool) -> Vec<T> {
    let mut k = 0;
    while k < items.len() {
        let mut smaller = items.clone();
        smaller.remove(k);
        if fails(&smaller) {
            items = smaller;
        } else {
            k += 1;
        }
    }
    items
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::auto_space;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn span_of_single_pair() {
        let p = StructureParameter::explicit(
            vec![("a".into(), vec!["t1".into()]), ("b".into(), vec!["t2".into()])],
            SRelation::All,
            [(0, 1)],
        )
        .unwrap();
        let span = pair_span(&p, 0, 1);
        assert_eq!(span, [(0, 0), (1, 1)].into());
    }

    #[test]
    fn shrink_keeps_failure() {
        let out = shrink(vec![1, 2, 3, 4, 5], |xs| xs.contains(&3) && xs.contains(&5));
        assert_eq!(out, vec![3, 5]);
    }

    #[test]
    fn auto_space_matches_count_on_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let sorts = rng.gen_range(1..=3);
            let total = rng.gen_range(sorts..=8);
            let p = random_parameter(&mut rng, sorts, total, 0.15);
            let d = auto_space(&p, 64).unwrap().dimension;
            assert_eq!(1u64 << d, count_automorphisms(&p));
        }
    }
}
