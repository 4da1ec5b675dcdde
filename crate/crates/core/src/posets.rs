//! The function posets that drive ISO's strategies.
//!
//! `G` holds weakly increasing `g : gamma -> alpha` ordered by
//! `g1 ⊆ g2 ∧ h_g1 ⊆ h_g2`. `W` is the interval-wise analogue over a
//! [`CardinalProfile`], with domains `⋃ [mu_i, beta_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinals::{CardinalProfile, Ordinal, PartialFn};

/// A member of `G_alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GFun {
    pub g: PartialFn,
    pub alpha: Ordinal,
}

impl GFun {
    pub fn empty() -> Self {
        GFun { g: PartialFn::new(), alpha: 0 }
    }

    pub fn new(g: PartialFn, alpha: Ordinal) -> Result<Self> {
        if g.ordinal_domain().is_none() {
            return Err(Error::precondition(format!("domain of {g} is not an ordinal")));
        }
        if !g.is_weakly_increasing() {
            return Err(Error::precondition(format!("{g} is not weakly increasing")));
        }
        if g.values().any(|v| v >= alpha) {
            return Err(Error::precondition(format!("{g} has a value >= alpha = {alpha}")));
        }
        Ok(GFun { g, alpha })
    }

    /// Smallest class index containing `g`.
    pub fn tight(g: PartialFn) -> Result<Self> {
        let alpha = g.values().max().map_or(0, |m| m + 1);
        GFun::new(g, alpha)
    }

    pub fn gamma(&self) -> Ordinal {
        self.g.len() as Ordinal
    }

    pub fn h(&self) -> PartialFn {
        h_of(&self.g)
    }
}

/// `h_g(x) = min({y < gamma : g(y) > g(x)} ∪ {gamma})`.
pub fn h_of(g: &PartialFn) -> PartialFn {
    let vals: Vec<Ordinal> = g.values().collect();
    let gamma = vals.len() as Ordinal;
    // Scan right to left, remembering the first position of each strictly larger value.
    let mut out = vec![gamma; vals.len()];
    let mut next_start = gamma;
    for x in (0..vals.len()).rev() {
        if x + 1 < vals.len() && vals[x + 1] > vals[x] {
            next_start = x as Ordinal + 1;
        }
        out[x] = next_start;
    }
    PartialFn::from_values(&out)
}

/// `g1 ≤ g2` by definition: both `g` and `h_g` grow by inclusion.
pub fn leq_g(g1: &GFun, g2: &GFun) -> bool {
    g1.g.is_subset_of(&g2.g) && g1.h().is_subset_of(&g2.h())
}

/// The characterization: `g1 ⊆ g2` and, if the domain grew, `g2(gamma1)`
/// is strictly above every earlier value.
pub fn leq_g_char(g1: &GFun, g2: &GFun) -> bool {
    let (c1, c2) = (g1.gamma(), g2.gamma());
    if c1 > c2 || !g1.g.is_subset_of(&g2.g) {
        return false;
    }
    if c1 < c2 {
        let at = g2.g.get(c1).unwrap();
        return (0..c1).all(|x| g2.g.get(x).unwrap() < at);
    }
    true
}

/// Extends `g1` to domain `gamma`, filling new positions with `g1.alpha`;
/// the result lies in `G_{alpha+1}`.
pub fn extend_g(g1: &GFun, gamma: Ordinal, lambda: Ordinal) -> Result<GFun> {
    if gamma > lambda {
        return Err(Error::OutOfRange { value: gamma, bound: lambda + 1 });
    }
    if gamma < g1.gamma() {
        return Err(Error::precondition(format!("gamma {gamma} below current domain {}", g1.gamma())));
    }
    let mut g = g1.g.clone();
    for x in g1.gamma()..gamma {
        g.insert(x, g1.alpha);
    }
    GFun::new(g, g1.alpha + 1)
}

/// Union of a `≤`-increasing chain.
pub fn union_g(chain: &[GFun]) -> Result<GFun> {
    for w in chain.windows(2) {
        if !leq_g(&w[0], &w[1]) {
            return Err(Error::NotAChain(format!("{} then {}", w[0].g, w[1].g)));
        }
    }
    let mut g = PartialFn::new();
    let mut alpha = 0;
    for c in chain {
        g = g.union(&c.g).ok_or_else(|| Error::NotAChain("incompatible members".into()))?;
        alpha = alpha.max(c.alpha);
    }
    GFun::new(g, alpha)
}

/// A sequence `<beta_i : i < kappa>` with `mu_i <= beta_i <= mu_{i+1}` whose
/// full intervals form an initial segment of length `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BetaBar {
    pub beta: Vec<Ordinal>,
}

impl BetaBar {
    pub fn new(profile: &CardinalProfile, beta: Vec<Ordinal>) -> Result<Self> {
        if beta.len() != profile.kappa() {
            return Err(Error::precondition(format!("beta has {} entries, kappa = {}", beta.len(), profile.kappa())));
        }
        for (i, &b) in beta.iter().enumerate() {
            if b < profile.mu(i) || b > profile.mu(i + 1) {
                return Err(Error::precondition(format!("beta_{i} = {b} outside [mu_{i}, mu_{}]", i + 1)));
            }
        }
        let bb = BetaBar { beta };
        let j = bb.j(profile);
        if (j..profile.kappa()).any(|i| bb.beta[i] == profile.mu(i + 1)) {
            return Err(Error::precondition("full intervals must form an initial segment"));
        }
        Ok(bb)
    }

    /// `beta_i = mu_i` everywhere.
    pub fn bottom(profile: &CardinalProfile) -> Self {
        BetaBar { beta: (0..profile.kappa()).map(|i| profile.mu(i)).collect() }
    }

    /// Number of leading full intervals.
    pub fn j(&self, profile: &CardinalProfile) -> usize {
        self.beta.iter().enumerate().take_while(|(i, &b)| b == profile.mu(i + 1)).count()
    }

    pub fn contains(&self, profile: &CardinalProfile, x: Ordinal) -> bool {
        profile.i_of(x).is_ok_and(|i| x < self.beta[i])
    }
}

/// A member of `W_betabar`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WFun {
    pub g: PartialFn,
    pub beta: BetaBar,
}

impl WFun {
    pub fn empty(profile: &CardinalProfile) -> Self {
        WFun { g: PartialFn::new(), beta: BetaBar::bottom(profile) }
    }

    pub fn new(profile: &CardinalProfile, g: PartialFn, beta: BetaBar) -> Result<Self> {
        let j = beta.j(profile);
        let expected: Vec<Ordinal> =
            (0..profile.kappa()).flat_map(|i| profile.mu(i)..beta.beta[i]).collect();
        if g.domain().collect::<Vec<_>>() != expected {
            return Err(Error::precondition(format!("domain of {g} is not the union of [mu_i, beta_i)")));
        }
        if !g.is_weakly_increasing() {
            return Err(Error::precondition(format!("{g} is not weakly increasing")));
        }
        for (x, y) in g.iter() {
            let i = profile.i_of(x)?;
            if y < profile.mu(i) || y > profile.mu_plus(i) {
                return Err(Error::precondition(format!("g({x}) = {y} outside [mu_{i}, mu_{i}^+]")));
            }
            if y == profile.mu_plus(i) && i >= j {
                return Err(Error::precondition(format!("g({x}) = mu_{i}^+ but j = {j}")));
            }
        }
        Ok(WFun { g, beta })
    }

    /// Recovers `betabar` from the domain.
    pub fn from_fn(profile: &CardinalProfile, g: PartialFn) -> Result<Self> {
        let beta = (0..profile.kappa())
            .map(|i| {
                let iv = profile.interval(i);
                g.domain().filter(|x| iv.contains(x)).max().map_or(profile.mu(i), |m| m + 1)
            })
            .collect();
        let beta = BetaBar::new(profile, beta)?;
        WFun::new(profile, g, beta)
    }

    pub fn j(&self, profile: &CardinalProfile) -> usize {
        self.beta.j(profile)
    }

    pub fn h(&self, profile: &CardinalProfile) -> PartialFn {
        w_h_of(profile, &self.g, &self.beta)
    }
}

/// `h_g(x) = min({y in [mu_i, beta_i) : g(y) > g(x)} ∪ {beta_i})` for `x` in interval `i`.
pub fn w_h_of(profile: &CardinalProfile, g: &PartialFn, beta: &BetaBar) -> PartialFn {
    let mut out = PartialFn::new();
    for i in 0..profile.kappa() {
        let part = g.restrict_by(|x| profile.mu(i) <= x && x < beta.beta[i]);
        for (x, gx) in part.iter() {
            let y = part.iter().find(|&(y, gy)| y > x && gy > gx).map_or(beta.beta[i], |(y, _)| y);
            out.insert(x, y);
        }
    }
    out
}

pub fn leq_w(profile: &CardinalProfile, g1: &WFun, g2: &WFun) -> bool {
    g1.g.is_subset_of(&g2.g) && g1.h(profile).is_subset_of(&g2.h(profile))
}

/// The interval-wise characterization of `≤` on `W`.
pub fn leq_w_char(profile: &CardinalProfile, g1: &WFun, g2: &WFun) -> bool {
    if !g1.g.is_subset_of(&g2.g) {
        return false;
    }
    (0..profile.kappa()).all(|i| {
        let (b1, b2) = (g1.beta.beta[i], g2.beta.beta[i]);
        if b1 < b2 {
            let at = g2.g.get(b1).unwrap();
            (profile.mu(i)..b1).all(|x| g2.g.get(x).unwrap() < at)
        } else {
            true
        }
    })
}

/// `g ∈ W_j`, i.e. `j(betabar) <= j`.
pub fn in_w_j(profile: &CardinalProfile, g: &WFun, j: usize) -> bool {
    g.j(profile) <= j
}

/// Extends `g1` to the domain of `beta`.
///
/// New positions in interval `i` get `mu_i^+` when `i < j`, otherwise one
/// above the largest existing value there (`mu_i` if there is none).
pub fn extend_w(profile: &CardinalProfile, g1: &WFun, j: usize, beta: &BetaBar) -> Result<WFun> {
    if !in_w_j(profile, g1, j) {
        return Err(Error::precondition(format!("g1 is not in W_{j}")));
    }
    if (0..profile.kappa()).any(|i| g1.beta.beta[i] > beta.beta[i]) {
        return Err(Error::precondition("target domain does not contain Dom(g1)"));
    }
    let mut g = g1.g.clone();
    for i in 0..profile.kappa() {
        let iv = profile.interval(i);
        let gamma = g1.g.iter().filter(|(x, _)| iv.contains(x)).map(|(_, y)| y).max().map_or(profile.mu(i), |m| m + 1);
        let fill = if i < j { profile.mu_plus(i) } else { gamma };
        for x in profile.mu(i)..beta.beta[i] {
            if !g.contains_key(x) {
                g.insert(x, fill);
            }
        }
    }
    let g2 = WFun::new(profile, g, beta.clone())
        .map_err(|e| Error::precondition(format!("no room to extend at this scale: {e}")))?;
    debug_assert!(leq_w(profile, g1, &g2));
    Ok(g2)
}

/// Upper bound of a finite `≤`-increasing chain inside `W_j`.
///
/// Intervals `i < j` are filled up to `mu_{i+1}` with `mu_i^+`; the others
/// keep the union's domain, whose least strict upper bound is `beta_i`.
pub fn union_w(profile: &CardinalProfile, chain: &[WFun], j: usize) -> Result<WFun> {
    for w in chain.windows(2) {
        if !leq_w(profile, &w[0], &w[1]) {
            return Err(Error::NotAChain(format!("{} then {}", w[0].g, w[1].g)));
        }
    }
    if let Some(c) = chain.iter().find(|c| !in_w_j(profile, c, j)) {
        return Err(Error::precondition(format!("{} is not in W_{j}", c.g)));
    }
    let mut union = PartialFn::new();
    for c in chain {
        union = union.union(&c.g).ok_or_else(|| Error::NotAChain("incompatible members".into()))?;
    }
    let mut g = union.clone();
    let mut beta = Vec::with_capacity(profile.kappa());
    for i in 0..profile.kappa() {
        let iv = profile.interval(i);
        let dom_sup = union.domain().filter(|x| iv.contains(x)).max().map_or(profile.mu(i), |m| m + 1);
        let rng_sup = union.iter().filter(|(x, _)| iv.contains(x)).map(|(_, y)| y).max().unwrap_or(profile.mu(i));
        let (b, fill) = if i < j { (profile.mu(i + 1), profile.mu_plus(i)) } else { (dom_sup, rng_sup + 1) };
        for x in profile.mu(i)..b {
            if !g.contains_key(x) {
                g.insert(x, fill);
            }
        }
        beta.push(b);
    }
    let beta = BetaBar::new(profile, beta)?;
    WFun::new(profile, g, beta)
}

/// Every member of `G_alpha` for `alpha <= lambda`, domain `<= lambda`.
pub fn all_gfuns(lambda: Ordinal) -> Vec<GFun> {
    let mut out = Vec::new();
    for alpha in 0..=lambda {
        for gamma in 0..=lambda {
            if gamma > 0 && alpha == 0 {
                continue;
            }
            let dom: Vec<Ordinal> = (0..gamma).collect();
            for g in crate::ordinals::weakly_increasing_functions(&dom, |_| 0, |_| alpha.saturating_sub(1)) {
                out.push(GFun { g, alpha });
            }
        }
    }
    out
}

pub fn all_betabars(profile: &CardinalProfile) -> Vec<BetaBar> {
    let mut out = vec![Vec::new()];
    for i in 0..profile.kappa() {
        out = out
            .into_iter()
            .flat_map(|b: Vec<Ordinal>| {
                (profile.mu(i)..=profile.mu(i + 1)).map(move |v| {
                    let mut b = b.clone();
                    b.push(v);
                    b
                })
            })
            .collect();
    }
    out.into_iter().filter_map(|b| BetaBar::new(profile, b).ok()).collect()
}

pub fn all_wfuns(profile: &CardinalProfile) -> Vec<WFun> {
    let mut out = Vec::new();
    for beta in all_betabars(profile) {
        let dom: Vec<Ordinal> = (0..profile.kappa()).flat_map(|i| profile.mu(i)..beta.beta[i]).collect();
        let lo = |x: Ordinal| profile.mu(profile.i_of(x).unwrap());
        let hi = |x: Ordinal| profile.mu_plus(profile.i_of(x).unwrap());
        for g in crate::ordinals::weakly_increasing_functions(&dom, lo, hi) {
            if let Ok(w) = WFun::new(profile, g, beta.clone()) {
                out.push(w);
            }
        }
    }
    out
}

/// Profiles with `lambda <= max_lambda` and `kappa <= max_kappa`.
pub fn small_profiles(max_lambda: Ordinal, max_kappa: usize) -> Vec<CardinalProfile> {
    let mut out = Vec::new();
    let mut stack = vec![vec![0]];
    while let Some(mu) = stack.pop() {
        let last = *mu.last().unwrap();
        if mu.len() > 1 {
            out.push(CardinalProfile::new(mu.clone()).unwrap());
        }
        if mu.len() <= max_kappa {
            for next in last + 2..=max_lambda {
                let mut m = mu.clone();
                m.push(next);
                stack.push(m);
            }
        }
    }
    out.sort_by(|a, b| a.mus().cmp(b.mus()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(vals: &[u32], alpha: u32) -> GFun {
        GFun::new(PartialFn::from_values(vals), alpha).unwrap()
    }

    fn p024() -> CardinalProfile {
        CardinalProfile::new(vec![0, 2, 4]).unwrap()
    }

    #[test]
    fn h_of_examples() {
        assert_eq!(h_of(&PartialFn::from_values(&[0, 0, 1])), PartialFn::from_values(&[2, 2, 3]));
        assert_eq!(h_of(&PartialFn::new()), PartialFn::new());
        assert_eq!(h_of(&PartialFn::from_values(&[5])), PartialFn::from_values(&[1]));
    }

    #[test]
    fn leq_g_examples() {
        assert!(leq_g(&gf(&[0], 1), &gf(&[0, 1], 2)));
        assert!(!leq_g(&gf(&[0], 1), &gf(&[0, 0], 1)));
        let g = gf(&[0, 0, 1], 2);
        assert!(leq_g(&g, &g));
    }

    #[test]
    fn extend_g_examples() {
        let e = extend_g(&gf(&[0, 1], 2), 4, 5).unwrap();
        assert_eq!(e.g, PartialFn::from_values(&[0, 1, 2, 2]));
        assert_eq!(e.alpha, 3);
        assert!(leq_g(&gf(&[0, 1], 2), &e));
        assert_eq!(extend_g(&GFun::empty(), 0, 3).unwrap().g, PartialFn::new());
        assert_eq!(extend_g(&GFun::empty(), 2, 3).unwrap().g, PartialFn::from_values(&[0, 0]));
        assert!(extend_g(&GFun::empty(), 4, 3).is_err());
    }

    #[test]
    fn union_g_examples() {
        assert_eq!(union_g(&[GFun::empty()]).unwrap().g, PartialFn::new());
        let chain = [gf(&[0], 1), gf(&[0, 1], 2)];
        assert_eq!(union_g(&chain).unwrap().g, PartialFn::from_values(&[0, 1]));
        let chain = [GFun::empty(), gf(&[0], 1), gf(&[0, 1], 2)];
        assert_eq!(union_g(&chain).unwrap().g, PartialFn::from_values(&[0, 1]));
        assert!(matches!(union_g(&[gf(&[0], 1), gf(&[0, 0], 1)]), Err(Error::NotAChain(_))));
    }

    #[test]
    fn w_h_examples() {
        let p = p024();
        let b = BetaBar::new(&p, vec![2, 2]).unwrap();
        assert_eq!(w_h_of(&p, &PartialFn::from_values(&[0, 0]), &b), PartialFn::from_values(&[2, 2]));
        assert_eq!(w_h_of(&p, &PartialFn::new(), &BetaBar::bottom(&p)), PartialFn::new());
        assert_eq!(w_h_of(&p, &PartialFn::from_values(&[0, 1]), &b), PartialFn::from_values(&[1, 2]));
    }

    #[test]
    fn leq_w_examples() {
        let p = p024();
        let g1 = WFun::from_fn(&p, PartialFn::from_values(&[0])).unwrap();
        let g2 = WFun::from_fn(&p, PartialFn::from_values(&[0, 1])).unwrap();
        let g3 = WFun::from_fn(&p, PartialFn::from_values(&[0, 0])).unwrap();
        assert!(leq_w(&p, &g1, &g1));
        assert!(leq_w(&p, &g1, &g2) && leq_w_char(&p, &g1, &g2));
        assert!(!leq_w(&p, &g1, &g3) && !leq_w_char(&p, &g1, &g3));
    }

    #[test]
    fn extend_w_examples() {
        let p = p024();
        let empty = WFun::empty(&p);
        assert_eq!(extend_w(&p, &empty, 0, &BetaBar::bottom(&p)).unwrap().g, PartialFn::new());
        let full = BetaBar::new(&p, vec![2, 4]).unwrap();
        let e = extend_w(&p, &empty, 1, &full).unwrap();
        assert_eq!(e.g, PartialFn::from_values(&[1, 1, 2, 2]));
        assert!(leq_w(&p, &empty, &e));
        let g1 = WFun::from_fn(&p, PartialFn::from_values(&[0])).unwrap();
        let e = extend_w(&p, &g1, 1, &full).unwrap();
        assert_eq!(e.g.get(0), Some(0));
        assert!(leq_w(&p, &g1, &e));
    }

    #[test]
    fn union_w_examples() {
        let p = p024();
        let u = union_w(&p, &[WFun::empty(&p)], 1).unwrap();
        assert_eq!(u.g, PartialFn::from_values(&[1, 1]));
        let g = WFun::from_fn(&p, PartialFn::from_pairs([(0, 0), (2, 2)])).unwrap();
        let u = union_w(&p, std::slice::from_ref(&g), 1).unwrap();
        assert!(leq_w(&p, &g, &u));
        let g0 = WFun::from_fn(&p, PartialFn::from_values(&[0])).unwrap();
        let g1 = WFun::from_fn(&p, PartialFn::from_values(&[0, 1])).unwrap();
        let u = union_w(&p, &[g0.clone(), g1.clone()], 1).unwrap();
        assert!(g1.g.is_subset_of(&u.g) && leq_w(&p, &g0, &u) && leq_w(&p, &g1, &u));
    }

    #[test]
    fn literal_offset_reading_leaves_interval() {
        // Reading the bound as "largest domain point + mu_i" overshoots.
        let p = CardinalProfile::new(vec![0, 3, 6]).unwrap();
        let dom_max_in_interval_1 = 3;
        let literal = dom_max_in_interval_1 + p.mu(1);
        assert!(literal >= p.mu(2));
        let g = WFun::from_fn(&p, PartialFn::from_pairs([(0, 1), (1, 1), (2, 1), (3, 3)])).unwrap();
        let u = union_w(&p, std::slice::from_ref(&g), 1).unwrap();
        assert_eq!(u.beta.beta[1], 4);
        assert!(leq_w(&p, &g, &u));
    }

    #[test]
    fn small_profile_enumeration() {
        let ps = small_profiles(6, 2);
        assert!(ps.iter().all(|p| p.lambda() <= 6 && p.kappa() <= 2));
        assert!(ps.contains(&p024()));
        assert!(ps.contains(&CardinalProfile::regular(2).unwrap()));
    }

    #[test]
    fn enumerations_are_well_formed() {
        for g in all_gfuns(4) {
            assert!(GFun::new(g.g.clone(), g.alpha).is_ok());
        }
        let p = p024();
        let ws = all_wfuns(&p);
        assert!(!ws.is_empty());
        for w in ws {
            assert!(WFun::new(&p, w.g.clone(), w.beta.clone()).is_ok());
        }
    }
}
