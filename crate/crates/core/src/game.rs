//! Referee for the tree-approximated EF game between ISO and AIS.
//!
//! Stage 0: AIS picks a root node and `f_0 = ∅` is installed. Each later
//! stage is node, then sets, then ISO's map. The first player without a
//! legal move loses.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gf2_models::{first_auto_violation, map_extends, semantic_violation, GroupElement, Model, PartialMap};
use crate::ordinals::Ordinal;
use crate::trees::{NodeId, Tree};

/// Default bound on the number of pairs an explicit check may expand.
pub const MATERIALIZE_CAP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GameVariant {
    /// `|A1 ∪ A2| < 1 + μ` at every stage.
    FixedBudget { mu: Ordinal },
    /// `|A1 ∪ A2| < 1 + α` at stage `α`.
    Star,
}

impl GameVariant {
    /// The largest legal `|A1 ∪ A2|` at a stage.
    pub fn budget(self, stage: Ordinal) -> usize {
        match self {
            GameVariant::FixedBudget { mu } => mu as usize,
            GameVariant::Star => stage as usize,
        }
    }

    fn bound_name(self) -> &'static str {
        match self {
            GameVariant::FixedBudget { .. } => "|A1 ∪ A2| < 1+μ",
            GameVariant::Star => "|A1 ∪ A2| < 1+α",
        }
    }
}

impl fmt::Display for GameVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameVariant::FixedBudget { mu: 1 } => write!(f, "one"),
            GameVariant::FixedBudget { mu } => write!(f, "mu:{mu}"),
            GameVariant::Star => write!(f, "star"),
        }
    }
}

impl FromStr for GameVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(GameVariant::FixedBudget { mu: 1 }),
            "star" => Ok(GameVariant::Star),
            _ => {
                let mu = s
                    .strip_prefix("mu:")
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (expected mu:N, one or star)")))?;
                Ok(GameVariant::FixedBudget { mu })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Iso,
    Ais,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "phase")]
pub enum Phase {
    AwaitingNode,
    AwaitingSets,
    AwaitingIso,
    Finished { winner: Player, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Node,
    Sets,
    Iso,
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: Ordinal,
    #[serde(rename = "move")]
    pub kind: MoveKind,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Game {
    m1: Model,
    m2: Model,
    tree: Arc<Tree>,
    variant: GameVariant,
    check_budget: bool,
    stage: Ordinal,
    chain: Vec<NodeId>,
    maps: Vec<PartialMap>,
    sets: Option<(Vec<GroupElement>, Vec<GroupElement>)>,
    phase: Phase,
    trace: Vec<TraceRecord>,
}

impl Game {
    pub fn new(m1: Model, m2: Model, tree: Arc<Tree>, variant: GameVariant) -> Result<Game> {
        if !Arc::ptr_eq(&m1.param, &m2.param) && !m1.param.same_as(&m2.param) {
            return Err(Error::ParameterMismatch("M1 and M2 must share a structure parameter".into()));
        }
        for c in [&m1.constant, &m2.constant].into_iter().flatten() {
            check_element(&m1, c)?;
        }
        if m1.constant.is_some() != m2.constant.is_some() {
            return Err(Error::ParameterMismatch("both models need a constant or neither".into()));
        }
        Ok(Game {
            m1,
            m2,
            tree,
            variant,
            check_budget: true,
            stage: 0,
            chain: Vec::new(),
            maps: Vec::new(),
            sets: None,
            phase: Phase::AwaitingNode,
            trace: Vec::new(),
        })
    }

    /// Turns off the budget check (a mutation for oracle testing).
    pub fn without_budget_check(mut self) -> Game {
        self.check_budget = false;
        self
    }

    pub fn m1(&self) -> &Model {
        &self.m1
    }

    pub fn m2(&self) -> &Model {
        &self.m2
    }

    pub fn tree(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn variant(&self) -> GameVariant {
        self.variant
    }

    pub fn stage(&self) -> Ordinal {
        self.stage
    }

    pub fn chain(&self) -> &[NodeId] {
        &self.chain
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn sets(&self) -> Option<&(Vec<GroupElement>, Vec<GroupElement>)> {
        self.sets.as_ref()
    }

    /// The current map `f_β`; empty before stage 0 is played.
    pub fn current_map(&self) -> PartialMap {
        self.maps.last().cloned().unwrap_or_else(PartialMap::empty)
    }

    pub fn maps(&self) -> &[PartialMap] {
        &self.maps
    }

    pub fn winner(&self) -> Option<Player> {
        match &self.phase {
            Phase::Finished { winner, .. } => Some(*winner),
            _ => None,
        }
    }

    pub fn budget(&self) -> usize {
        self.variant.budget(self.stage)
    }

    /// Nodes AIS may pick now.
    pub fn frontier(&self) -> Vec<NodeId> {
        if self.phase != Phase::AwaitingNode {
            return Vec::new();
        }
        self.tree.successors_at_level(self.chain.last().copied(), self.stage)
    }

    /// The phase, with an empty frontier read as a win for ISO.
    pub fn status(&self) -> Phase {
        if self.phase == Phase::AwaitingNode && self.frontier().is_empty() {
            Phase::Finished { winner: Player::Iso, reason: self.no_node_reason() }
        } else {
            self.phase.clone()
        }
    }

    /// Records the outcome [`Game::status`] reports.
    pub fn settle(&mut self) -> &Phase {
        let st = self.status();
        if st != self.phase {
            self.phase = st;
        }
        &self.phase
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.status(), Phase::Finished { .. })
    }

    fn no_node_reason(&self) -> String {
        format!("AIS has no node at level {}", self.stage)
    }

    fn reject(&mut self, kind: MoveKind, payload: Value, clause: impl Into<String>) -> Error {
        let clause = clause.into();
        self.trace.push(TraceRecord { stage: self.stage, kind, payload, rejected: Some(clause.clone()) });
        Error::rejected(clause)
    }

    fn expect_phase(&self, want: &Phase, kind: MoveKind) -> Result<()> {
        if let Phase::Finished { .. } = self.phase {
            return Err(Error::rejected("game is over"));
        }
        if &self.phase != want {
            return Err(Error::rejected(format!("{kind:?} move out of turn")));
        }
        Ok(())
    }

    /// AIS picks the node of the current stage. With an empty frontier the
    /// game ends for ISO instead.
    pub fn ais_node(&mut self, z: NodeId) -> Result<()> {
        self.expect_phase(&Phase::AwaitingNode, MoveKind::Node)?;
        if self.frontier().is_empty() {
            self.phase = Phase::Finished { winner: Player::Iso, reason: self.no_node_reason() };
            return Ok(());
        }
        let payload = json!({ "node": self.tree.nodes().get(z).map(|n| n.key.clone()) });
        if z >= self.tree.len() {
            return Err(self.reject(MoveKind::Node, payload, "node must belong to 𝒯"));
        }
        if self.tree.level(z) != self.stage {
            return Err(self.reject(MoveKind::Node, payload, "z_α must have level α"));
        }
        if let Some(&top) = self.chain.last() {
            if !self.tree.leq(top, z) || top == z {
                return Err(self.reject(MoveKind::Node, payload, "z_α >𝒯 z_β for β < α"));
            }
        }
        self.trace.push(TraceRecord { stage: self.stage, kind: MoveKind::Node, payload, rejected: None });
        self.chain.push(z);
        if self.stage == 0 {
            self.maps.push(PartialMap::empty());
            self.stage = 1;
        } else {
            self.phase = Phase::AwaitingSets;
        }
        self.debug_revalidate();
        Ok(())
    }

    /// AIS declares it cannot move; ISO wins.
    pub fn ais_stuck(&mut self) -> Result<()> {
        self.expect_phase(&Phase::AwaitingNode, MoveKind::Stuck)?;
        self.trace.push(TraceRecord { stage: self.stage, kind: MoveKind::Stuck, payload: json!({"player": "ais"}), rejected: None });
        self.phase = Phase::Finished { winner: Player::Iso, reason: self.no_node_reason() };
        Ok(())
    }

    pub fn ais_sets(&mut self, a1: Vec<GroupElement>, a2: Vec<GroupElement>) -> Result<()> {
        self.expect_phase(&Phase::AwaitingSets, MoveKind::Sets)?;
        let payload = json!({ "a1": a1, "a2": a2 });
        for a in a1.iter().chain(&a2) {
            if let Err(e) = check_element(&self.m1, a) {
                return Err(self.reject(MoveKind::Sets, payload, e.to_string()));
            }
        }
        let union: BTreeSet<&GroupElement> = a1.iter().chain(&a2).collect();
        if self.check_budget && union.len() > self.budget() {
            return Err(self.reject(MoveKind::Sets, payload, self.variant.bound_name()));
        }
        self.trace.push(TraceRecord { stage: self.stage, kind: MoveKind::Sets, payload, rejected: None });
        self.sets = Some((a1, a2));
        self.phase = Phase::AwaitingIso;
        Ok(())
    }

    /// The first clause `f` violates as ISO's reply, if any.
    pub fn iso_violation(&self, f: &PartialMap) -> Option<String> {
        let param = &self.m1.param;
        let prev = self.current_map();
        match map_extends(param, f, &prev, MATERIALIZE_CAP) {
            Ok(true) => {}
            Ok(false) => return Some("f_β ⊆ f_α".into()),
            Err(e) => return Some(e.to_string()),
        }
        match f.to_group_closed(param) {
            Some(bases) => {
                if let Some(v) = first_auto_violation(param, &bases) {
                    return Some(format!("partial automorphism: {v}"));
                }
                if let (Some(a), Some(b)) = (&self.m1.constant, &self.m2.constant) {
                    if let Some(c) = bases.get(&a.sort) {
                        if c.add(a).ok().as_ref() != Some(b) {
                            return Some("f_α(a*) = b*".into());
                        }
                    }
                }
            }
            None => {
                let PartialMap::Explicit(m) = f else { unreachable!() };
                if let Some(v) = semantic_violation(&self.m1, &self.m2, m) {
                    return Some(format!("partial isomorphism: {v}"));
                }
            }
        }
        if let Some((a1, a2)) = &self.sets {
            if a1.iter().any(|a| !f.covers(param, a)) {
                return Some("A1 ⊆ Dom(f_α)".into());
            }
            if a2.iter().any(|b| !f.covers_range(param, b)) {
                return Some("A2 ⊆ Rang(f_α)".into());
            }
        }
        None
    }

    pub fn iso_reply(&mut self, f: PartialMap) -> Result<()> {
        self.expect_phase(&Phase::AwaitingIso, MoveKind::Iso)?;
        let payload = f.describe(&self.m1.param);
        if let Some(v) = self.iso_violation(&f) {
            return Err(self.reject(MoveKind::Iso, payload, v));
        }
        self.trace.push(TraceRecord { stage: self.stage, kind: MoveKind::Iso, payload, rejected: None });
        self.maps.push(f);
        self.sets = None;
        self.stage += 1;
        self.phase = Phase::AwaitingNode;
        self.debug_revalidate();
        Ok(())
    }

    /// ISO resigns; AIS wins.
    pub fn iso_stuck(&mut self, reason: &str) -> Result<()> {
        self.expect_phase(&Phase::AwaitingIso, MoveKind::Stuck)?;
        self.trace.push(TraceRecord {
            stage: self.stage,
            kind: MoveKind::Stuck,
            payload: json!({"player": "iso", "reason": reason}),
            rejected: None,
        });
        self.phase = Phase::Finished { winner: Player::Ais, reason: format!("ISO is stuck: {reason}") };
        Ok(())
    }

    #[cfg(debug_assertions)]
    fn debug_revalidate(&self) {
        for (b, w) in self.chain.windows(2).enumerate() {
            debug_assert!(self.tree.leq(w[0], w[1]) && w[0] != w[1], "chain broken at {b}");
        }
        for (b, &z) in self.chain.iter().enumerate() {
            debug_assert_eq!(self.tree.level(z), b as Ordinal);
        }
        for w in self.maps.windows(2) {
            debug_assert!(map_extends(&self.m1.param, &w[1], &w[0], MATERIALIZE_CAP).unwrap_or(true));
        }
    }

    #[cfg(not(debug_assertions))]
    fn debug_revalidate(&self) {}

    /// Replays recorded moves, checking that every accept/reject decision
    /// comes out the same, then settles the outcome.
    pub fn replay(mut self, records: &[TraceRecord]) -> Result<Game> {
        for (k, r) in records.iter().enumerate() {
            let outcome = self.apply_record(r);
            match (&r.rejected, outcome) {
                (None, Ok(())) => {}
                (Some(want), Err(Error::RejectedMove { clause })) if *want == clause => {}
                (want, got) => {
                    return Err(Error::Scripted(format!(
                        "record {k} diverged: expected {}, got {}",
                        want.as_deref().unwrap_or("acceptance"),
                        match got {
                            Ok(()) => "acceptance".to_string(),
                            Err(e) => e.to_string(),
                        }
                    )))
                }
            }
        }
        self.settle();
        Ok(self)
    }

    fn apply_record(&mut self, r: &TraceRecord) -> Result<()> {
        let param = self.m1.param.clone();
        match r.kind {
            MoveKind::Node => {
                let key = r.payload["node"].as_str().ok_or_else(|| Error::Scripted("node record without key".into()))?;
                let z = self.tree.find(key).ok_or_else(|| Error::Scripted(format!("unknown node `{key}`")))?;
                self.ais_node(z)
            }
            MoveKind::Sets => {
                let parse = |v: &Value| -> Result<Vec<GroupElement>> {
                    v.as_array()
                        .map(|xs| xs.iter().map(|x| GroupElement::from_json(&param, x)).collect())
                        .unwrap_or_else(|| Ok(Vec::new()))
                };
                let (a1, a2) = (parse(&r.payload["a1"])?, parse(&r.payload["a2"])?);
                self.ais_sets(a1, a2)
            }
            MoveKind::Iso => self.iso_reply(PartialMap::from_json(&param, &r.payload)?),
            MoveKind::Stuck => match r.payload["player"].as_str() {
                Some("ais") => self.ais_stuck(),
                _ => self.iso_stuck(r.payload["reason"].as_str().unwrap_or("")),
            },
        }
    }

    /// JSON-lines trace: a header, every record, then the outcome.
    pub fn to_jsonl(&self, header: Value) -> String {
        let mut out = serde_json::to_string(&json!({ "header": header })).unwrap();
        out.push('\n');
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r).unwrap());
            out.push('\n');
        }
        if let Phase::Finished { winner, reason } = self.status() {
            out.push_str(&serde_json::to_string(&json!({ "winner": winner, "reason": reason })).unwrap());
            out.push('\n');
        }
        out
    }
}

/// A parsed JSON-lines trace.
#[derive(Debug, Clone, Default)]
pub struct ParsedTrace {
    pub header: Value,
    pub records: Vec<TraceRecord>,
    pub winner: Option<Player>,
}

pub fn parse_jsonl(text: &str) -> Result<ParsedTrace> {
    let mut out = ParsedTrace::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line)?;
        if let Some(h) = v.get("header") {
            out.header = h.clone();
        } else if let Some(w) = v.get("winner") {
            out.winner = Some(serde_json::from_value(w.clone())?);
        } else {
            out.records.push(serde_json::from_value(v)?);
        }
    }
    Ok(out)
}

fn check_element(m: &Model, a: &GroupElement) -> Result<()> {
    m.param.check_sort(a.sort)?;
    if a.support.len() != m.param.gen_count(a.sort) {
        return Err(Error::precondition(format!("element {a:?} has the wrong width")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_s1, BuildOptions, Caps, Construction};
    use crate::ordinals::PartialFn;
    use crate::trees::LocalFamily;

    fn s1() -> (Construction, Arc<Tree>) {
        let fam = LocalFamily::closure(2, [PartialFn::from_pairs([(0, 0), (1, 0)])]).unwrap();
        let c = build_s1(2, &fam, &BuildOptions::with_caps(Caps { max_u: 1, ..Caps::default() })).unwrap();
        (c, Arc::new(fam.family_tree().unwrap()))
    }

    fn game(v: GameVariant) -> (Construction, Game) {
        let (c, t) = s1();
        let g = Game::new(c.m1.clone(), c.m2.clone(), t, v).unwrap();
        (c, g)
    }

    #[test]
    fn variants_parse() {
        assert_eq!("one".parse::<GameVariant>().unwrap(), GameVariant::FixedBudget { mu: 1 });
        assert_eq!("mu:3".parse::<GameVariant>().unwrap(), GameVariant::FixedBudget { mu: 3 });
        assert_eq!("star".parse::<GameVariant>().unwrap(), GameVariant::Star);
        assert!("mu:x".parse::<GameVariant>().is_err());
        assert_eq!(GameVariant::FixedBudget { mu: 4 }.to_string(), "mu:4");
    }

    #[test]
    fn stage_zero_and_levels() {
        let (_, mut g) = game(GameVariant::FixedBudget { mu: 2 });
        assert_eq!(g.stage(), 0);
        assert!(matches!(g.ais_node(1), Err(Error::RejectedMove { .. })));
        g.ais_node(0).unwrap();
        assert_eq!(g.stage(), 1);
        assert_eq!(g.phase(), &Phase::AwaitingNode);
        assert!(matches!(g.ais_node(0), Err(Error::RejectedMove { .. })));
        assert_eq!(g.trace().iter().filter(|r| r.rejected.is_some()).count(), 2);
    }

    #[test]
    fn budgets() {
        let (c, mut g) = game(GameVariant::FixedBudget { mu: 1 });
        g.ais_node(0).unwrap();
        g.ais_node(g.frontier()[0]).unwrap();
        let two = vec![c.param.zero(0), c.param.zero(1)];
        assert_eq!(g.ais_sets(two.clone(), vec![]), Err(Error::rejected("|A1 ∪ A2| < 1+μ")));
        g.ais_sets(vec![c.param.zero(0)], vec![c.param.zero(0)]).unwrap();

        let (_, mut s) = game(GameVariant::Star);
        s.ais_node(0).unwrap();
        s.ais_node(s.frontier()[0]).unwrap();
        assert_eq!(s.ais_sets(two.clone(), vec![]), Err(Error::rejected("|A1 ∪ A2| < 1+α")));
        s.ais_sets(vec![], vec![]).unwrap();

        let (_, mut m) = game(GameVariant::FixedBudget { mu: 2 });
        m.ais_node(0).unwrap();
        m.ais_node(m.frontier()[0]).unwrap();
        m.ais_sets(two, vec![]).unwrap();
    }

    #[test]
    fn iso_checks() {
        let (c, mut g) = game(GameVariant::FixedBudget { mu: 2 });
        g.ais_node(0).unwrap();
        g.ais_node(g.frontier()[0]).unwrap();
        g.ais_sets(vec![c.a_star().clone()], vec![]).unwrap();
        assert_eq!(g.iso_violation(&PartialMap::empty()), Some("A1 ⊆ Dom(f_α)".into()));
        let wrong = PartialMap::GroupClosed([(0, c.param.zero(0))].into());
        assert_eq!(g.iso_violation(&wrong), Some("f_α(a*) = b*".into()));
        let right = PartialMap::GroupClosed([(0, c.b_star().clone())].into());
        g.iso_reply(right).unwrap();
        assert_eq!(g.stage(), 2);
        g.ais_node(g.frontier()[0]).unwrap();
        g.ais_sets(vec![], vec![]).unwrap();
        assert_eq!(g.iso_violation(&PartialMap::empty()), Some("f_β ⊆ f_α".into()));
        g.iso_reply(g.current_map()).unwrap();
        assert_eq!(g.status(), Phase::Finished { winner: Player::Iso, reason: "AIS has no node at level 3".into() });
    }

    #[test]
    fn iso_stuck_and_empty_tree() {
        let (c, mut g) = game(GameVariant::Star);
        g.ais_node(0).unwrap();
        g.ais_node(g.frontier()[0]).unwrap();
        g.ais_sets(vec![], vec![]).unwrap();
        g.iso_stuck("test").unwrap();
        assert_eq!(g.winner(), Some(Player::Ais));
        let one = Arc::new(Tree::from_parents(&[None]).unwrap());
        let mut h = Game::new(c.m1.clone(), c.m2.clone(), one, GameVariant::Star).unwrap();
        h.ais_node(0).unwrap();
        h.ais_node(0).unwrap();
        assert_eq!(h.winner(), Some(Player::Iso));
    }

    #[test]
    fn replay_is_deterministic() {
        let (c, mut g) = game(GameVariant::FixedBudget { mu: 2 });
        let fresh = g.clone();
        g.ais_node(0).unwrap();
        let _ = g.ais_node(0);
        g.ais_node(g.frontier()[0]).unwrap();
        g.ais_sets(vec![c.a_star().clone()], vec![c.param.gen(1, 0)]).unwrap();
        let _ = g.iso_reply(PartialMap::empty());
        let bases = [(0, c.b_star().clone()), (1, c.param.zero(1))].into();
        let _ = g.iso_reply(PartialMap::GroupClosed(bases));
        let text = g.to_jsonl(json!({"preset": "s1"}));
        let parsed = parse_jsonl(&text).unwrap();
        let again = fresh.replay(&parsed.records).unwrap();
        assert_eq!(again.to_jsonl(json!({"preset": "s1"})), text);
    }
}
