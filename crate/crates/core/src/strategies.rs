//! ISO's strategies for the four presets and AIS agents to play against them.
//!
//! Each ISO strategy keeps a function `g_α` that only grows, reads the
//! current tree node and answers with a group-closed map whose base values
//! are generators built from `g_α`, `h_{g_α}` and the node.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bitmat::BitRow;
use crate::constructions::{Construction, Preset, PresetData, QuadrupleGen};
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::game::{Game, GameVariant, MoveKind, Phase, Player, TraceRecord};
use crate::gf2_models::{GroupElement, PartialMap, SortId, TabulatedRule};
use crate::ordinals::{CardinalProfile, Ordinal, PartialFn};
use crate::posets::{extend_g, extend_w, h_of, leq_g, leq_w, BetaBar, GFun, WFun};
use crate::trees::{NodeId, Tree};

/// The growing function of a strategy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GState {
    G(GFun),
    W(WFun),
}

impl GState {
    pub fn g(&self) -> &PartialFn {
        match self {
            GState::G(g) => &g.g,
            GState::W(w) => &w.g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IsoState {
    pub g: GState,
    /// `ζ` values fixed by ISO ahead of the tree (s2 only).
    pub commitments: PartialFn,
}

#[derive(Debug, Clone)]
pub struct IsoStrategy {
    construction: Construction,
    tree: Arc<Tree>,
    state: IsoState,
}

impl IsoStrategy {
    /// The strategy matching the construction's preset.
    pub fn new(construction: &Construction, tree: Arc<Tree>) -> Result<Self> {
        Self::for_preset(construction.preset, construction, tree)
    }

    pub fn for_preset(preset: Preset, construction: &Construction, tree: Arc<Tree>) -> Result<Self> {
        if preset != construction.preset {
            return Err(Error::Config(format!(
                "strategy {} cannot play on preset {}",
                preset.name(),
                construction.preset.name()
            )));
        }
        match &construction.data {
            PresetData::Quad(_) => {
                if (0..tree.len()).any(|n| tree.payload_fn(n).is_none()) {
                    return Err(Error::Config("s1/s2 strategies need a family tree".into()));
                }
            }
            PresetData::Witness(d) => {
                if *d.spec.tree != *tree {
                    return Err(Error::Config("the game tree must be the construction's tree".into()));
                }
            }
        }
        let g = match construction.profile() {
            Some(p) if preset.uses_profile() => GState::W(WFun::empty(p)),
            _ => GState::G(GFun::empty()),
        };
        Ok(IsoStrategy { construction: construction.clone(), tree, state: IsoState { g, commitments: PartialFn::new() } })
    }

    pub fn preset(&self) -> Preset {
        self.construction.preset
    }

    pub fn state(&self) -> &IsoState {
        &self.state
    }

    /// The same strategy resumed from `state`.
    pub fn with_state(&self, state: IsoState) -> Self {
        IsoStrategy { state, ..self.clone() }
    }

    /// Strategy configuration for trace headers.
    pub fn header(&self) -> Value {
        json!({ "iso": self.preset().name(), "gamma-rule": "pinned-v1", "beta-rule": "pinned-v1" })
    }

    fn lambda(&self) -> Ordinal {
        self.construction.lambda()
    }

    fn profile(&self) -> Result<&CardinalProfile> {
        self.construction.profile().ok_or_else(|| Error::Config("preset needs a profile".into()))
    }

    /// Points that must enter `Dom(g)` for a sort to be covered.
    pub fn demand(&self, s: SortId) -> BTreeSet<Ordinal> {
        match &self.construction.data {
            PresetData::Quad(d) => d.sorts[s].clone(),
            PresetData::Witness(d) => d.sorts[s].gamma(),
        }
    }

    /// One touched set of at most `k` sorts for each distinct union of
    /// demands. The strategy's reply and its coverage depend on nothing else.
    pub fn demand_classes(&self, k: usize) -> Vec<BTreeSet<SortId>> {
        let n = self.construction.param.num_sorts();
        let demands: Vec<BTreeSet<Ordinal>> = (0..n).map(|s| self.demand(s)).collect();
        let mut classes: BTreeMap<BTreeSet<Ordinal>, BTreeSet<SortId>> = BTreeMap::new();
        classes.insert(BTreeSet::new(), BTreeSet::new());
        let mut layer: Vec<(BTreeSet<Ordinal>, BTreeSet<SortId>)> = vec![(BTreeSet::new(), BTreeSet::new())];
        for _ in 0..k.min(n) {
            let mut next = Vec::new();
            for (d, rep) in &layer {
                for (s, ds) in demands.iter().enumerate() {
                    let u: BTreeSet<Ordinal> = d.union(ds).copied().collect();
                    if !classes.contains_key(&u) {
                        let mut r = rep.clone();
                        r.insert(s);
                        classes.insert(u.clone(), r.clone());
                        next.push((u, r));
                    }
                }
            }
            layer = next;
        }
        classes.into_values().collect()
    }

    /// The next function for a stage in which AIS touched `touched`.
    pub fn advance(&self, stage: Ordinal, touched: &BTreeSet<SortId>) -> Result<GState> {
        let lambda = self.lambda();
        let demand: BTreeSet<Ordinal> = touched.iter().flat_map(|&s| self.demand(s)).collect();
        match &self.state.g {
            GState::G(cur) => {
                let need = demand.iter().next_back().map_or(0, |m| m + 1);
                let gamma = lambda.min((cur.gamma() + 1).max(need));
                let tight = GFun::tight(cur.g.clone())?;
                let next = extend_g(&tight, gamma, lambda)?;
                if next.alpha > stage.max(1) {
                    return Err(Error::precondition(format!("g_α left G_{stage}")));
                }
                debug_assert!(leq_g(cur, &next));
                Ok(GState::G(next))
            }
            GState::W(cur) => {
                let p = self.profile()?;
                let ia = p.i_of(stage.min(lambda - 1))?;
                let mut beta: Vec<Ordinal> = (0..p.kappa())
                    .map(|i| {
                        if i <= ia {
                            return p.mu(i + 1);
                        }
                        let iv = p.interval(i);
                        let need = demand.iter().filter(|x| iv.contains(x)).max().map_or(p.mu(i), |m| m + 1);
                        cur.beta.beta[i].max(need)
                    })
                    .collect();
                // a forced full interval pulls every earlier one up with it
                if let Some(k) = (0..p.kappa()).rev().find(|&i| beta[i] == p.mu(i + 1)) {
                    for (i, b) in beta.iter_mut().enumerate().take(k) {
                        *b = p.mu(i + 1);
                    }
                }
                let beta = BetaBar::new(p, beta)?;
                let j = (ia + 1).max(cur.j(p));
                let next = extend_w(p, cur, j, &beta)?;
                debug_assert!(leq_w(p, cur, &next));
                Ok(GState::W(next))
            }
        }
    }

    fn h_of_state(&self, g: &GState) -> Result<PartialFn> {
        Ok(match g {
            GState::G(g) => h_of(&g.g),
            GState::W(w) => w.h(self.profile()?),
        })
    }

    /// Base values for every covered sort under `g`, at node `z`.
    pub fn map_for(&self, g: &GState, z: NodeId, stage: Ordinal) -> Result<(PartialMap, PartialFn)> {
        let gf = g.g();
        let h = self.h_of_state(g)?;
        let dom = gf.domain_set();
        let param = &self.construction.param;
        let mut bases = BTreeMap::new();
        let mut commitments = self.state.commitments.clone();
        match &self.construction.data {
            PresetData::Quad(d) => {
                let zeta = self
                    .tree
                    .payload_fn(z)
                    .ok_or_else(|| Error::Config("s1/s2 strategies need a family tree".into()))?;
                if gf.values().any(|y| y >= stage.max(1)) && d.spec.profile.is_none() {
                    return Err(Error::precondition("Rang(g_α) ⊄ Dom(ζ_α)"));
                }
                let covered: Vec<SortId> = (0..d.sorts.len()).filter(|&s| d.sorts[s].is_subset(&dom)).collect();
                let parts: Vec<(SortId, PartialFn, PartialFn, BTreeSet<Ordinal>)> = covered
                    .iter()
                    .map(|&s| {
                        let u = &d.sorts[s];
                        let (gu, hu) = (gf.restrict(u), h.restrict(u));
                        let v = d.spec.zeta_dom(u, &gu, &hu);
                        (s, gu, hu, v)
                    })
                    .collect();
                let zeta_full = if d.spec.profile.is_some() {
                    let needs: Vec<&BTreeSet<Ordinal>> = parts.iter().map(|p| &p.3).collect();
                    commit_zeta(&d.spec.family, zeta, &mut commitments, &needs, d.spec.lambda)?
                } else {
                    zeta.clone()
                };
                for (s, gu, hu, v) in parts {
                    let t = QuadrupleGen { u: d.sorts[s].clone(), g: gu, h: hu, zeta: zeta_full.restrict(&v) };
                    let k = d.gen_of(s, &t).ok_or_else(|| {
                        Error::precondition(format!("strategy generator {} is not in J_u", serde_json::to_string(&t).unwrap()))
                    })?;
                    bases.insert(s, param.gen(s, k));
                }
            }
            PresetData::Witness(d) => {
                for (s, sort) in d.sorts.iter().enumerate() {
                    if !sort.gamma().is_subset(&dom) {
                        continue;
                    }
                    let t = match d.spec.t_of(sort, gf, &h, z) {
                        Ok(t) => t,
                        Err(Error::NoNode { level }) => {
                            return Err(Error::StrategyStuck(format!(
                                "sort {s} needs a node at level {level} below the current node"
                            )))
                        }
                        Err(e) => return Err(e),
                    };
                    let k = d
                        .gen_of(s, &t)
                        .ok_or_else(|| Error::precondition(format!("t(s, 𝐠, 𝐡, z) for sort {s} is not in J_s")))?;
                    bases.insert(s, param.gen(s, k));
                }
            }
        }
        let descriptor = json!({
            "g": gf, "h": h,
            "node": self.tree.node(z).key,
            "commitments": commitments,
        });
        Ok((PartialMap::RuleBased(Arc::new(TabulatedRule { bases, descriptor })), commitments))
    }

    /// ISO's reply in a game awaiting it. The strategy state advances only
    /// on success.
    pub fn iso_next(&mut self, game: &Game) -> Result<PartialMap> {
        if game.phase() != &Phase::AwaitingIso {
            return Err(Error::precondition("game is not awaiting ISO"));
        }
        let z = *game.chain().last().expect("a node was chosen");
        let touched = touched_sorts(game);
        let next = self.advance(game.stage(), &touched)?;
        let (map, commitments) = self.map_for(&next, z, game.stage())?;
        self.state = IsoState { g: next, commitments };
        Ok(map)
    }
}

/// Sorts met by the current `A1 ∪ A2`.
pub fn touched_sorts(game: &Game) -> BTreeSet<SortId> {
    game.sets().map(|(a1, a2)| a1.iter().chain(a2).map(|a| a.sort).collect()).unwrap_or_default()
}

/// `ζ` on the union of `needs`: committed values first, then the node,
/// then the least values that keep every restriction to a need in the
/// family.
fn commit_zeta(
    family: &crate::trees::LocalFamily,
    zeta: &PartialFn,
    commitments: &mut PartialFn,
    needs: &[&BTreeSet<Ordinal>],
    lambda: Ordinal,
) -> Result<PartialFn> {
    let need: BTreeSet<Ordinal> = needs.iter().flat_map(|v| v.iter().copied()).collect();
    let mut known = PartialFn::new();
    let mut open = Vec::new();
    for &x in &need {
        match commitments.get(x).or_else(|| zeta.get(x)) {
            Some(y) => known.insert(x, y),
            None => open.push(x),
        }
    }
    let fits = |cand: &PartialFn| needs.iter().all(|v| family.contains(&cand.restrict(v)));
    if open.is_empty() {
        if fits(&known) {
            return Ok(known);
        }
        return Err(Error::StrategyStuck(format!("committed ζ {known} left the family")));
    }
    let total = (lambda as u64).checked_pow(open.len() as u32).unwrap_or(u64::MAX);
    for code in 0..total {
        let mut cand = known.clone();
        let mut rest = code;
        for &x in open.iter().rev() {
            cand.insert(x, (rest % lambda as u64) as Ordinal);
            rest /= lambda as u64;
        }
        if fits(&cand) {
            for &x in &open {
                commitments.insert(x, cand.get(x).unwrap());
            }
            return Ok(cand);
        }
    }
    Err(Error::StrategyStuck("no ζ values beyond the node keep ζ in the family".into()))
}

// ---------------------------------------------------------------------------
// AIS agents

pub trait AisAgent {
    /// The next node, or `None` to declare stuck.
    fn node(&mut self, game: &Game) -> Result<Option<NodeId>>;
    fn sets(&mut self, game: &Game) -> Result<(Vec<GroupElement>, Vec<GroupElement>)>;
    /// Scripted agents turn rejections into errors.
    fn strict(&self) -> bool {
        false
    }
}

/// Uniform random AIS, deterministic per seed.
pub struct RandomAis {
    rng: ChaCha8Rng,
    pool_cap: usize,
}

impl RandomAis {
    pub fn new(seed: u64) -> Self {
        RandomAis { rng: ChaCha8Rng::seed_from_u64(seed), pool_cap: 1 << 20 }
    }

    /// Bounds how many elements of a sort are eligible.
    pub fn with_pool_cap(mut self, cap: usize) -> Self {
        self.pool_cap = cap.max(1);
        self
    }

    fn element(&mut self, game: &Game) -> GroupElement {
        let param = &game.m1().param;
        let s = self.rng.gen_range(0..param.num_sorts());
        let n = param.gen_count(s);
        let size = 1usize.checked_shl(n as u32).unwrap_or(usize::MAX).min(self.pool_cap);
        let idx = self.rng.gen_range(0..size);
        let bits: Vec<bool> = (0..n).map(|k| k < usize::BITS as usize && idx >> k & 1 == 1).collect();
        GroupElement { sort: s, support: BitRow::from_bools(&bits) }
    }
}

impl AisAgent for RandomAis {
    fn node(&mut self, game: &Game) -> Result<Option<NodeId>> {
        let f = game.frontier();
        if f.is_empty() {
            return Ok(None);
        }
        Ok(Some(f[self.rng.gen_range(0..f.len())]))
    }

    fn sets(&mut self, game: &Game) -> Result<(Vec<GroupElement>, Vec<GroupElement>)> {
        let budget = game.budget();
        let k = self.rng.gen_range(0..=budget.min(8));
        let (mut a1, mut a2) = (Vec::new(), Vec::new());
        for _ in 0..k {
            let e = self.element(game);
            if self.rng.gen_bool(0.5) {
                a1.push(e);
            } else {
                a2.push(e);
            }
        }
        Ok((a1, a2))
    }
}

/// Replays the AIS moves of a recorded trace.
pub struct ScriptedAis {
    moves: Vec<TraceRecord>,
    pos: usize,
}

impl ScriptedAis {
    pub fn new(records: &[TraceRecord]) -> Self {
        let moves = records
            .iter()
            .filter(|r| r.rejected.is_none() && matches!(r.kind, MoveKind::Node | MoveKind::Sets))
            .cloned()
            .collect();
        ScriptedAis { moves, pos: 0 }
    }

    fn next(&mut self, kind: MoveKind) -> Result<Option<&TraceRecord>> {
        let Some(r) = self.moves.get(self.pos) else { return Ok(None) };
        if r.kind != kind {
            return Err(Error::Scripted(format!("script has a {:?} move where a {kind:?} move is due", r.kind)));
        }
        self.pos += 1;
        Ok(Some(r))
    }
}

impl AisAgent for ScriptedAis {
    fn node(&mut self, game: &Game) -> Result<Option<NodeId>> {
        let tree = game.tree().clone();
        let Some(r) = self.next(MoveKind::Node)? else { return Ok(None) };
        let key = r.payload["node"].as_str().ok_or_else(|| Error::Scripted("node move without key".into()))?;
        tree.find(key).map(Some).ok_or_else(|| Error::Scripted(format!("unknown node `{key}`")))
    }

    fn sets(&mut self, game: &Game) -> Result<(Vec<GroupElement>, Vec<GroupElement>)> {
        let param = game.m1().param.clone();
        let Some(r) = self.next(MoveKind::Sets)? else { return Err(Error::Scripted("script ended before sets".into())) };
        let parse = |v: &Value| -> Result<Vec<GroupElement>> {
            v.as_array().map_or(Ok(Vec::new()), |xs| xs.iter().map(|x| GroupElement::from_json(&param, x)).collect())
        };
        Ok((parse(&r.payload["a1"])?, parse(&r.payload["a2"])?))
    }

    fn strict(&self) -> bool {
        true
    }
}

/// Runs a game to completion.
pub fn play(mut game: Game, iso: &mut IsoStrategy, ais: &mut dyn AisAgent, move_limit: usize) -> Result<Game> {
    let mut moves = 0;
    loop {
        if game.is_finished() {
            game.settle();
            return Ok(game);
        }
        moves += 1;
        if moves > move_limit {
            return Err(Error::MoveLimit(move_limit));
        }
        let strict = ais.strict();
        match game.phase().clone() {
            Phase::AwaitingNode => match ais.node(&game)? {
                None => game.ais_stuck()?,
                Some(z) => {
                    if let Err(e) = game.ais_node(z) {
                        if strict {
                            return Err(Error::Scripted(e.to_string()));
                        }
                    }
                }
            },
            Phase::AwaitingSets => {
                let (a1, a2) = ais.sets(&game)?;
                if let Err(e) = game.ais_sets(a1, a2) {
                    if strict {
                        return Err(Error::Scripted(e.to_string()));
                    }
                }
            }
            Phase::AwaitingIso => match iso.iso_next(&game) {
                Ok(f) => {
                    if let Err(Error::RejectedMove { clause }) = game.iso_reply(f) {
                        game.iso_stuck(&format!("referee rejected the strategy's map: {clause}"))?;
                    }
                }
                Err(Error::StrategyStuck(m)) => game.iso_stuck(&m)?,
                Err(e) => return Err(e),
            },
            Phase::Finished { .. } => unreachable!(),
        }
    }
}

// ---------------------------------------------------------------------------
// Exhaustive AIS

/// Outcome counts of an exhaustive exploration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExploreReport {
    /// Finished plays reached through distinct positions.
    pub plays: u64,
    pub iso_wins: u64,
    pub ais_wins: u64,
    /// Distinct positions after ISO's reply.
    pub positions: u64,
    pub max_stage: Ordinal,
    /// Clauses the referee cited against ISO, and strategy-stuck reasons.
    pub failures: Vec<String>,
}

impl ExploreReport {
    pub fn merge(&mut self, other: ExploreReport) {
        self.plays += other.plays;
        self.iso_wins += other.iso_wins;
        self.ais_wins += other.ais_wins;
        self.positions += other.positions;
        self.max_stage = self.max_stage.max(other.max_stage);
        for f in other.failures {
            if self.failures.len() < 16 && !self.failures.contains(&f) {
                self.failures.push(f);
            }
        }
    }

    pub fn all_iso(&self) -> bool {
        self.ais_wins == 0 && self.plays > 0
    }
}

/// Plays ISO's strategy against every AIS line.
///
/// ISO's maps are group-closed, so only the sorts AIS touches matter, and
/// each touched sort is represented by its zero in `A1`. Touched sets are
/// further grouped by the union of their demands on `Dom(g)`, which is all
/// the strategy reads. Positions repeating a `(stage, node, strategy state)`
/// triple are explored once.
pub fn explore(construction: &Construction, tree: Arc<Tree>, variant: GameVariant, mode: Mode) -> Result<ExploreReport> {
    let game = Game::new(construction.m1.clone(), construction.m2.clone(), tree.clone(), variant)?;
    let iso = IsoStrategy::new(construction, tree)?;
    let mut root = game;
    let frontier = root.frontier();
    if frontier.is_empty() {
        return Ok(ExploreReport { plays: 1, iso_wins: 1, ..Default::default() });
    }
    // branch over the root choices in parallel; each branch keeps its own table
    let reports: Vec<Result<ExploreReport>> = exec::map(mode, &frontier, |&z| {
        let mut g = root.clone();
        g.ais_node(z)?;
        let mut seen = HashSet::new();
        let mut rep = ExploreReport::default();
        explore_node(&g, &iso, &mut seen, &mut rep)?;
        Ok(rep)
    });
    root.settle();
    let mut out = ExploreReport::default();
    for r in reports {
        out.merge(r?);
    }
    Ok(out)
}

fn explore_node(
    game: &Game,
    iso: &IsoStrategy,
    seen: &mut HashSet<(Ordinal, NodeId, IsoState)>,
    rep: &mut ExploreReport,
) -> Result<()> {
    rep.max_stage = rep.max_stage.max(game.stage());
    let frontier = game.frontier();
    if frontier.is_empty() {
        rep.plays += 1;
        rep.iso_wins += 1;
        return Ok(());
    }
    let param = &game.m1().param;
    let n = param.num_sorts();
    for z in frontier {
        let mut g1 = game.clone();
        g1.ais_node(z)?;
        let budget = g1.budget().min(n);
        let mut local: HashMap<GState, ()> = HashMap::new();
        for touched in iso.demand_classes(budget) {
            let next = match iso.advance(g1.stage(), &touched) {
                Ok(s) => s,
                Err(e) => {
                    record_failure(rep, format!("advance: {e}"));
                    continue;
                }
            };
            if local.insert(next.clone(), ()).is_some() {
                continue;
            }
            let mut g2 = g1.clone();
            let a1: Vec<GroupElement> = touched.iter().map(|&s| param.zero(s)).collect();
            g2.ais_sets(a1, Vec::new())?;
            let mut iso2 = iso.clone();
            match iso2.map_for(&next, z, g2.stage()) {
                Ok((map, commitments)) => {
                    if let Err(Error::RejectedMove { clause }) = g2.iso_reply(map) {
                        record_failure(rep, format!("stage {}: referee rejected ISO: {clause}", g2.stage()));
                        continue;
                    }
                    iso2.state = IsoState { g: next, commitments };
                }
                Err(Error::StrategyStuck(m)) => {
                    record_failure(rep, format!("stage {}: ISO stuck: {m}", g2.stage()));
                    continue;
                }
                Err(e) => return Err(e),
            }
            if !seen.insert((g2.stage(), z, iso2.state.clone())) {
                continue;
            }
            rep.positions += 1;
            explore_node(&g2, &iso2, seen, rep)?;
        }
    }
    Ok(())
}

fn record_failure(rep: &mut ExploreReport, msg: String) {
    rep.plays += 1;
    rep.ais_wins += 1;
    if rep.failures.len() < 16 && !rep.failures.contains(&msg) {
        rep.failures.push(msg);
    }
}

/// Winner of a finished game, for summaries.
pub fn winner_name(g: &Game) -> &'static str {
    match g.winner() {
        Some(Player::Iso) => "iso",
        Some(Player::Ais) => "ais",
        None => "none",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_s1, build_s2, build_s3, build_s4, BuildOptions, Caps};
    use crate::game::parse_jsonl;
    use crate::trees::LocalFamily;

    fn s1_setup() -> (Construction, Arc<Tree>) {
        let fam = LocalFamily::closure(2, [PartialFn::from_pairs([(0, 0), (1, 1)]), PartialFn::from_pairs([(0, 1)])]).unwrap();
        let c = build_s1(2, &fam, &BuildOptions::with_caps(Caps { max_u: 2, ..Caps::default() })).unwrap();
        (c, Arc::new(fam.family_tree().unwrap()))
    }

    #[test]
    fn s1_first_reply_maps_constant() {
        let (c, t) = s1_setup();
        let mut game = Game::new(c.m1.clone(), c.m2.clone(), t.clone(), GameVariant::FixedBudget { mu: 2 }).unwrap();
        let mut iso = IsoStrategy::new(&c, t).unwrap();
        game.ais_node(0).unwrap();
        game.ais_node(game.frontier()[0]).unwrap();
        game.ais_sets(vec![], vec![]).unwrap();
        let f = iso.iso_next(&game).unwrap();
        assert_eq!(f.apply(&c.param, c.a_star()), Some(c.b_star().clone()));
        game.iso_reply(f).unwrap();
    }

    #[test]
    fn s1_touched_sort_is_covered() {
        let (c, t) = s1_setup();
        let d = c.quad().unwrap();
        let s = d.sort_of(&[1].into()).unwrap();
        let mut game = Game::new(c.m1.clone(), c.m2.clone(), t.clone(), GameVariant::FixedBudget { mu: 2 }).unwrap();
        let mut iso = IsoStrategy::new(&c, t).unwrap();
        game.ais_node(0).unwrap();
        game.ais_node(game.frontier()[0]).unwrap();
        game.ais_sets(vec![c.param.gen(s, 0)], vec![]).unwrap();
        let f = iso.iso_next(&game).unwrap();
        assert!(f.covers(&c.param, &c.param.zero(s)));
        game.iso_reply(f).unwrap();
    }

    #[test]
    fn s1_random_plays_iso_wins() {
        let (c, t) = s1_setup();
        for seed in 0..20 {
            let game = Game::new(c.m1.clone(), c.m2.clone(), t.clone(), GameVariant::FixedBudget { mu: 2 }).unwrap();
            let mut iso = IsoStrategy::new(&c, t.clone()).unwrap();
            let g = play(game, &mut iso, &mut RandomAis::new(seed), 100).unwrap();
            assert_eq!(g.winner(), Some(Player::Iso), "seed {seed}");
        }
    }

    #[test]
    fn random_is_deterministic_and_scripts_replay() {
        let (c, t) = s1_setup();
        let run = |ais: &mut dyn AisAgent| {
            let game = Game::new(c.m1.clone(), c.m2.clone(), t.clone(), GameVariant::FixedBudget { mu: 2 }).unwrap();
            let mut iso = IsoStrategy::new(&c, t.clone()).unwrap();
            play(game, &mut iso, ais, 100).unwrap().to_jsonl(json!({}))
        };
        let a = run(&mut RandomAis::new(7));
        assert_eq!(a, run(&mut RandomAis::new(7)));
        let parsed = parse_jsonl(&a).unwrap();
        assert_eq!(run(&mut ScriptedAis::new(&parsed.records)), a);
    }

    #[test]
    fn single_root_tree_ais_stuck() {
        let fam = LocalFamily::explicit(2, [PartialFn::new()]).unwrap();
        let c = build_s1(2, &fam, &BuildOptions::with_caps(Caps { max_u: 1, ..Caps::default() })).unwrap();
        let t = Arc::new(fam.family_tree().unwrap());
        let game = Game::new(c.m1.clone(), c.m2.clone(), t.clone(), GameVariant::Star).unwrap();
        let mut iso = IsoStrategy::new(&c, t).unwrap();
        let g = play(game, &mut iso, &mut RandomAis::new(0), 10).unwrap();
        assert_eq!(g.winner(), Some(Player::Iso));
        assert_eq!(g.stage(), 1);
    }

    #[test]
    fn s1_exhaustive() {
        let (c, t) = s1_setup();
        let r = explore(&c, t, GameVariant::FixedBudget { mu: 2 }, Mode::Sequential).unwrap();
        assert!(r.all_iso(), "{r:?}");
    }

    #[test]
    fn s2_exhaustive_one() {
        let p = CardinalProfile::new(vec![0, 2, 4]).unwrap();
        let fam = LocalFamily::closure(4, [PartialFn::from_pairs([(0, 0), (1, 1), (2, 0)])]).unwrap();
        let c = build_s2(&p, &fam, &BuildOptions::with_caps(Caps { max_u: 2, ..Caps::default() })).unwrap();
        let t = Arc::new(fam.family_tree().unwrap());
        let r = explore(&c, t, GameVariant::FixedBudget { mu: 1 }, Mode::Sequential).unwrap();
        assert!(r.all_iso(), "{r:?}");
    }

    #[test]
    fn s3_root_base() {
        let tree = Tree::from_parents(&[None, Some(0), Some(1)]).unwrap();
        let c = build_s3(2, &tree, &BuildOptions::with_caps(Caps { max_u: 1, ..Caps::default() })).unwrap();
        let t = Arc::new(tree);
        let mut game = Game::new(c.m1.clone(), c.m2.clone(), t.clone(), GameVariant::FixedBudget { mu: 2 }).unwrap();
        let mut iso = IsoStrategy::new(&c, t.clone()).unwrap();
        game.ais_node(0).unwrap();
        game.ais_node(1).unwrap();
        game.ais_sets(vec![], vec![]).unwrap();
        let f = iso.iso_next(&game).unwrap();
        assert_eq!(f.bases(&c.param).get(&c.base_sort()), Some(c.b_star()));
        game.iso_reply(f).unwrap();
        let r = explore(&c, t, GameVariant::FixedBudget { mu: 2 }, Mode::Sequential).unwrap();
        assert!(r.all_iso(), "{r:?}");
    }

    #[test]
    fn s4_regular_profile_star() {
        let p = CardinalProfile::regular(2).unwrap();
        let tree = Tree::from_parents(&[None, Some(0), Some(0), Some(1)]).unwrap();
        let c = build_s4(&p, &tree, &BuildOptions::with_caps(Caps { max_u: 1, ..Caps::default() })).unwrap();
        let r = explore(&c, Arc::new(tree), GameVariant::Star, Mode::Sequential).unwrap();
        assert!(r.all_iso(), "{r:?}");
    }

    #[test]
    fn preset_mismatch_is_config_error() {
        let (c, t) = s1_setup();
        assert!(matches!(IsoStrategy::for_preset(Preset::S3, &c, t), Err(Error::Config(_))));
    }
}
