//! Backward induction over tiny games.
//!
//! ISO's replies are group-closed maps covering exactly the sorts touched so
//! far plus the constant's sort. Under that restriction a position is
//! `(stage, node, bases)`, and two monotonicity facts keep the search small:
//! ISO winning from some bases also wins from any restriction of them, so
//! AIS only needs its largest touched sets, drawn from uncovered sorts.
//!
//! An optional ISO strategy orders ISO's candidates. Positions reached by
//! following it are memoized by the strategy state, and AIS's touched sets
//! are grouped by the demand they place on the strategy; a class is won only
//! if every sort inside its demand is covered.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bitmat::{Affine, BitRow};
use crate::error::{Error, Result};
use crate::game::{Game, GameVariant, Player};
use crate::gf2_models::{first_auto_violation, GroupElement, Model, PartialMap, SortId, StructureParameter};
use crate::ordinals::{subsets_up_to, Ordinal};
use crate::strategies::{GState, IsoState, IsoStrategy};
use crate::trees::{NodeId, Tree};
use crate::verify::Layout;

type Bases = BTreeMap<SortId, GroupElement>;

/// Elements AIS draws from; only their sorts matter to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementPool {
    /// `0_s` and every `x_t`, for each sort.
    #[default]
    Default,
    /// `0_s` for each sort.
    Zeros,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SolveCaps {
    /// Most candidate replies ISO may need to try at one position.
    pub max_elements: usize,
    pub max_depth: usize,
    pub element_pool: ElementPool,
    pub max_positions: usize,
}

impl Default for SolveCaps {
    fn default() -> Self {
        SolveCaps { max_elements: 1 << 12, max_depth: 16, element_pool: ElementPool::Default, max_positions: 1 << 22 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub winner: Player,
    pub restriction: String,
    pub pool: String,
    pub move_ordering: String,
    pub positions: usize,
    /// A principal line of play as a JSON-lines trace.
    pub certificate: String,
}

struct Solver<'a> {
    param: &'a StructureParameter,
    m1: &'a Model,
    m2: &'a Model,
    tree: Arc<Tree>,
    variant: GameVariant,
    caps: &'a SolveCaps,
    constant: Option<(SortId, GroupElement)>,
    exact: HashMap<String, bool>,
    ais_best: HashMap<String, (NodeId, Vec<SortId>)>,
    iso_best: HashMap<String, Bases>,
    hinted: HashMap<(Ordinal, NodeId, IsoState), bool>,
    positions: usize,
}

fn key_of(stage: Ordinal, top: Option<NodeId>, b: &Bases) -> String {
    let mut k = format!("{stage}|{top:?}|");
    for c in b.values() {
        k.push_str(&c.key());
        k.push(';');
    }
    k
}

fn sized_subsets(pool: &[SortId], k: usize) -> Vec<Vec<SortId>> {
    let k = k.min(pool.len());
    subsets_up_to(pool.len() as Ordinal, k)
        .into_iter()
        .filter(|s| s.len() == k)
        .map(|s| s.into_iter().map(|i| pool[i as usize]).collect())
        .collect()
}

impl<'a> Solver<'a> {
    fn tick(&mut self) -> Result<()> {
        self.positions += 1;
        if self.positions > self.caps.max_positions {
            return Err(Error::cap("solver positions", self.positions, self.caps.max_positions));
        }
        Ok(())
    }

    /// Replies extending `b` that cover `b`'s sorts, `touched` and the constant.
    fn replies(&self, b: &Bases, touched: &[SortId]) -> Result<Option<(Layout, Affine)>> {
        let mut sorts: Vec<SortId> = b.keys().copied().collect();
        sorts.extend(touched);
        if let Some((k, _)) = &self.constant {
            sorts.push(*k);
        }
        let layout = Layout::new(self.param, sorts);
        let mut rows = layout.auto_rows(self.param);
        let mut rhs = vec![false; rows.len()];
        for (&s, c) in b {
            let (r, v) = layout.pin_rows(s, c);
            rows.extend(r);
            rhs.extend(v);
        }
        if let Some((k, c)) = &self.constant {
            let (r, v) = layout.pin_rows(*k, c);
            rows.extend(r);
            rhs.extend(v);
        }
        Ok(Affine::solve(&rows, &rhs, layout.width).map(|a| (layout, a)))
    }

    fn nth(&self, layout: &Layout, sol: &Affine, mask: u64) -> Bases {
        let mut x: BitRow = sol.particular().clone();
        for (k, r) in sol.basis().rows().enumerate() {
            if mask >> k & 1 == 1 {
                x.xor_assign(r);
            }
        }
        layout.decode(self.param, &x)
    }

    fn ais_exact(&mut self, stage: Ordinal, top: Option<NodeId>, b: &Bases) -> Result<bool> {
        let key = key_of(stage, top, b);
        if let Some(&v) = self.exact.get(&key) {
            return Ok(v);
        }
        self.tick()?;
        let frontier = self.tree.successors_at_level(top, stage);
        if frontier.is_empty() {
            self.exact.insert(key, true);
            return Ok(true);
        }
        if stage as usize > self.caps.max_depth {
            return Err(Error::cap("solver depth", stage as usize, self.caps.max_depth));
        }
        for z in frontier {
            if stage == 0 {
                if !self.ais_exact(1, Some(z), b)? {
                    self.ais_best.insert(key.clone(), (z, Vec::new()));
                    self.exact.insert(key, false);
                    return Ok(false);
                }
                continue;
            }
            let uncovered: Vec<SortId> = (0..self.param.num_sorts()).filter(|s| !b.contains_key(s)).collect();
            for n in sized_subsets(&uncovered, self.variant.budget(stage)) {
                if !self.iso_exact(stage, z, b, &n, &key)? {
                    self.ais_best.insert(key.clone(), (z, n));
                    self.exact.insert(key, false);
                    return Ok(false);
                }
            }
        }
        self.exact.insert(key, true);
        Ok(true)
    }

    fn iso_exact(&mut self, stage: Ordinal, z: NodeId, b: &Bases, n: &[SortId], ais_key: &str) -> Result<bool> {
        let Some((layout, sol)) = self.replies(b, n)? else { return Ok(false) };
        let total = 1u128 << sol.dim().min(100);
        let tries = total.min(self.caps.max_elements as u128) as u64;
        for mask in 0..tries {
            let c = self.nth(&layout, &sol, mask);
            if self.ais_exact(stage + 1, Some(z), &c)? {
                self.iso_best.insert(format!("{ais_key}#{n:?}"), c);
                return Ok(true);
            }
        }
        if total > tries as u128 {
            return Err(Error::cap("ISO replies at one position", total.min(usize::MAX as u128) as usize, self.caps.max_elements));
        }
        Ok(false)
    }

    /// Whether `iso`, resumed at `stage` below `top`, wins against every
    /// touched set of full size.
    fn hint_wins(&mut self, stage: Ordinal, top: NodeId, iso: &IsoStrategy, prev: &Bases) -> Result<bool> {
        let key = (stage, top, iso.state().clone());
        if let Some(&v) = self.hinted.get(&key) {
            return Ok(v);
        }
        self.tick()?;
        let frontier = self.tree.successors_at_level(Some(top), stage);
        let mut verdict = true;
        'outer: for z in frontier {
            if stage as usize > self.caps.max_depth {
                return Err(Error::cap("solver depth", stage as usize, self.caps.max_depth));
            }
            let mut seen: HashSet<GState> = HashSet::new();
            for touched in iso.demand_classes(self.variant.budget(stage)) {
                match self.hint_step(stage, z, iso, prev, &touched, &mut seen)? {
                    Some(true) | None => {}
                    Some(false) => {
                        verdict = false;
                        break 'outer;
                    }
                }
            }
        }
        self.hinted.insert(key, verdict);
        Ok(verdict)
    }

    /// `None` when the strategy's state repeats one already explored here.
    fn hint_step(
        &mut self,
        stage: Ordinal,
        z: NodeId,
        iso: &IsoStrategy,
        prev: &Bases,
        touched: &BTreeSet<SortId>,
        seen: &mut HashSet<GState>,
    ) -> Result<Option<bool>> {
        let next = match iso.advance(stage, touched) {
            Ok(s) => s,
            Err(Error::StrategyStuck(_) | Error::Precondition(_)) => return Ok(Some(false)),
            Err(e) => return Err(e),
        };
        if !seen.insert(next.clone()) {
            return Ok(None);
        }
        let (map, commitments) = match iso.map_for(&next, z, stage) {
            Ok(m) => m,
            Err(Error::StrategyStuck(_) | Error::Precondition(_)) => return Ok(Some(false)),
            Err(e) => return Err(e),
        };
        let bases = map.bases(self.param);
        // every sort whose demand falls inside the touched demand must be
        // covered, so the verdict holds for all touched sets in the class
        let demand: BTreeSet<Ordinal> = touched.iter().flat_map(|&s| iso.demand(s)).collect();
        let legal = first_auto_violation(self.param, &bases).is_none()
            && prev.iter().all(|(s, c)| bases.get(s) == Some(c))
            && (0..self.param.num_sorts()).filter(|&s| iso.demand(s).is_subset(&demand)).all(|s| bases.contains_key(&s))
            && self.constant.as_ref().is_none_or(|(k, c)| bases.get(k) == Some(c));
        if !legal {
            return Ok(Some(false));
        }
        let iso2 = iso.with_state(IsoState { g: next, commitments });
        self.hint_wins(stage + 1, z, &iso2, &bases).map(Some)
    }

    fn restricted(&self, full: &Bases, sorts: &BTreeSet<SortId>) -> Bases {
        full.iter().filter(|(s, _)| sorts.contains(s)).map(|(s, c)| (*s, c.clone())).collect()
    }

    fn pool_element(&self, s: SortId) -> GroupElement {
        match self.caps.element_pool {
            ElementPool::Default if self.param.gen_count(s) > 0 => self.param.gen(s, 0),
            _ => self.param.zero(s),
        }
    }

    fn new_game(&self) -> Result<Game> {
        Game::new(self.m1.clone(), self.m2.clone(), self.tree.clone(), self.variant)
    }

    /// A line where AIS plays its first options and ISO follows `iso`.
    fn hinted_line(&self, iso: &IsoStrategy) -> Result<Game> {
        let mut game = self.new_game()?;
        let mut iso = iso.clone();
        let all: Vec<SortId> = (0..self.param.num_sorts()).collect();
        let mut covered: BTreeSet<SortId> = self.constant.iter().map(|(k, _)| *k).collect();
        while !game.is_finished() {
            let z = game.frontier()[0];
            game.ais_node(z)?;
            if game.stage() == 1 && game.chain().len() == 1 {
                continue;
            }
            let n: Vec<SortId> = all.iter().copied().take(game.budget()).collect();
            game.ais_sets(n.iter().map(|&s| self.pool_element(s)).collect(), Vec::new())?;
            covered.extend(n);
            let map = iso.iso_next(&game)?;
            let bases = self.restricted(&map.bases(self.param), &covered);
            game.iso_reply(PartialMap::GroupClosed(bases))?;
        }
        game.settle();
        Ok(game)
    }

    /// A line following the recorded best moves of the exact search.
    fn exact_line(&self) -> Result<Game> {
        let mut game = self.new_game()?;
        let mut b = Bases::new();
        let mut top = None;
        while !game.is_finished() {
            let stage = game.stage();
            let key = key_of(stage, top, &b);
            let (z, n) = match self.ais_best.get(&key) {
                Some((z, n)) => (*z, n.clone()),
                None => {
                    let z = game.frontier()[0];
                    let uncovered: Vec<SortId> = (0..self.param.num_sorts()).filter(|s| !b.contains_key(s)).collect();
                    let n = if stage == 0 {
                        Vec::new()
                    } else {
                        uncovered.iter().copied().take(self.variant.budget(stage)).collect()
                    };
                    (z, n)
                }
            };
            game.ais_node(z)?;
            top = Some(z);
            if stage == 0 {
                continue;
            }
            game.ais_sets(n.iter().map(|&s| self.pool_element(s)).collect(), Vec::new())?;
            let reply = match self.iso_best.get(&format!("{key}#{n:?}")) {
                Some(c) => Some(c.clone()),
                None => self.replies(&b, &n)?.map(|(layout, sol)| self.nth(&layout, &sol, 0)),
            };
            match reply {
                Some(c) => {
                    game.iso_reply(PartialMap::GroupClosed(c.clone()))?;
                    b = c;
                }
                None => {
                    game.iso_stuck("no group-closed extension satisfies the constraints")?;
                }
            }
        }
        game.settle();
        Ok(game)
    }
}

/// Solves the game exactly under the group-closed restriction.
pub fn solve_game(
    m1: &Model,
    m2: &Model,
    tree: Arc<Tree>,
    variant: GameVariant,
    caps: &SolveCaps,
    hint: Option<&IsoStrategy>,
) -> Result<SolveReport> {
    if !m1.param.same_as(&m2.param) {
        return Err(Error::ParameterMismatch("the models are built over different parameters".into()));
    }
    if tree.depth() as usize > caps.max_depth + 1 {
        return Err(Error::cap("tree depth", tree.depth() as usize, caps.max_depth + 1));
    }
    let constant = match (&m1.constant, &m2.constant) {
        (Some(a), Some(b)) if a.sort == b.sort => Some((a.sort, a.add(b)?)),
        (None, None) => None,
        _ => return Err(Error::ParameterMismatch("constants must be present in both models, in one sort".into())),
    };
    let mut solver = Solver {
        param: &m1.param,
        m1,
        m2,
        tree: tree.clone(),
        variant,
        caps,
        constant,
        exact: HashMap::new(),
        ais_best: HashMap::new(),
        iso_best: HashMap::new(),
        hinted: HashMap::new(),
        positions: 0,
    };
    let mut ordering = "affine-enumeration";
    let mut hint_won = false;
    if let Some(iso) = hint {
        let mut all = true;
        for &r in tree.at_level(0) {
            if !solver.hint_wins(1, r, iso, &Bases::new())? {
                all = false;
                break;
            }
        }
        if all {
            hint_won = true;
            ordering = "strategy-hint";
        }
    }
    let (winner, line) = if hint_won {
        (Player::Iso, solver.hinted_line(hint.expect("hint present"))?)
    } else {
        let iso_wins = solver.ais_exact(0, None, &Bases::new())?;
        (if iso_wins { Player::Iso } else { Player::Ais }, solver.exact_line()?)
    };
    if line.winner() != Some(winner) {
        return Err(Error::precondition("certificate line disagrees with the solved value"));
    }
    let pool = match caps.element_pool {
        ElementPool::Default => "{0_s, x_t} per sort",
        ElementPool::Zeros => "{0_s} per sort",
    };
    let header = json!({
        "solver": { "restriction": "group-closed-restricted", "pool": pool, "moveOrdering": ordering },
        "variant": variant,
    });
    Ok(SolveReport {
        winner,
        restriction: "group-closed-restricted".into(),
        pool: pool.into(),
        move_ordering: ordering.into(),
        positions: solver.positions,
        certificate: line.to_jsonl(header),
    })
}

/// The predicate-mismatch instance: one sort `{0, x}`, `S = {(s, s)}`, no
/// `T`-pairs, so `Q(a, a)` holds of `a* = 0` but not of `b* = x`, on a
/// two-level tree.
pub fn adversarial_instance() -> (Model, Model, Arc<Tree>) {
    use crate::gf2_models::SRelation;
    let param = Arc::new(
        StructureParameter::explicit(
            vec![("s".into(), vec!["x".into()])],
            SRelation::Pairs([(0, 0)].into()),
            std::iter::empty(),
        )
        .expect("well formed"),
    );
    let m1 = Model::new(param.clone(), Some(param.zero(0)));
    let m2 = Model::new(param.clone(), Some(param.gen(0, 0)));
    let tree = Arc::new(Tree::from_parents(&[None, Some(0)]).expect("a path"));
    (m1, m2, tree)
}
