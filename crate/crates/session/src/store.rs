//! Sessions: a history tree of immutable game snapshots per id.
//!
//! Every accepted move adds a snapshot whose version is its index in the
//! session's history. Moves name the version they apply to; a move against
//! any other version either repeats an existing child (and returns it) or
//! is refused as a conflict.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use efgame::constructions::{Construction, Preset, PresetConfig};
use efgame::game::{Game, GameVariant, Phase};
use efgame::gf2_models::{GroupElement, PartialMap, StructureParameter};
use efgame::strategies::IsoStrategy;
use efgame::trees::Tree;
use efgame::{Error as CoreError, Mode};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::presets;

pub const PAGE_SIZE: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown version {0}")]
    UnknownVersion(u64),
    #[error("version {given} is stale; the session is at {current}")]
    Conflict { given: u64, current: u64 },
    #[error("move rejected: {clause}")]
    Rejected { clause: String },
    #[error("{0}")]
    BadRequest(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    CapOverflow(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown-session",
            ApiError::UnknownVersion(_) => "unknown-version",
            ApiError::Conflict { .. } => "conflict",
            ApiError::Rejected { .. } => "rejected",
            ApiError::BadRequest(_) => "bad-request",
            ApiError::Config(_) => "invalid-config",
            ApiError::CapOverflow(_) => "cap-overflow",
        }
    }

    pub fn body(&self) -> Value {
        let mut v = json!({ "error": self.code(), "message": self.to_string() });
        if let ApiError::Rejected { clause } = self {
            v["clause"] = json!(clause);
        }
        v
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::RejectedMove { clause } => ApiError::Rejected { clause },
            CoreError::SizeCap { .. } => ApiError::CapOverflow(e.to_string()),
            CoreError::Config(_)
            | CoreError::InvalidProfile(_)
            | CoreError::InvalidFamily(_)
            | CoreError::InvalidTree(_) => ApiError::Config(e.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        }
    }
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

/// `POST /sessions`: a named preset or an explicit config.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateRequest {
    pub preset: Option<String>,
    pub config: Option<PresetConfig>,
    pub variant: Option<String>,
    /// Which strategy plays ISO; the config's preset by default.
    pub iso: Option<Preset>,
    #[serde(default)]
    pub manual_iso: bool,
}

/// `POST /sessions/{id}/ais-move`. A node, sets, or both in that order; in
/// manual mode `iso` carries ISO's map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MoveRequest {
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso: Option<Value>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stuck: bool,
}

impl MoveRequest {
    fn action(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("plain data");
        v.as_object_mut().expect("object").remove("version");
        v
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateQuery {
    #[serde(default)]
    pub frontier_page: usize,
    #[serde(default)]
    pub elements_page: usize,
    #[serde(default)]
    pub sort: usize,
}

struct Snapshot {
    parent: Option<u64>,
    action: Value,
    game: Game,
    iso: Option<IsoStrategy>,
    /// ISO's reply made with this move, if any.
    reply: Option<Value>,
}

pub struct Session {
    id: String,
    label: String,
    preset: Preset,
    variant: GameVariant,
    manual_iso: bool,
    param: Arc<StructureParameter>,
    history: Vec<Arc<Snapshot>>,
    children: Vec<Vec<u64>>,
    head: u64,
}

impl Session {
    fn new(id: String, label: String, req: &CreateRequest, config: &PresetConfig, variant: GameVariant) -> ApiResult<Self> {
        let construction: Construction = config.build(Mode::default())?;
        let tree = Arc::new(config.game_tree()?);
        let iso_preset = req.iso.unwrap_or(config.preset);
        let iso =
            if req.manual_iso { None } else { Some(IsoStrategy::for_preset(iso_preset, &construction, tree.clone())?) };
        let game = Game::new(construction.m1.clone(), construction.m2.clone(), tree, variant)?;
        let root = Snapshot { parent: None, action: Value::Null, game, iso, reply: None };
        Ok(Session {
            id,
            label,
            preset: config.preset,
            variant,
            manual_iso: req.manual_iso,
            param: construction.param.clone(),
            history: vec![Arc::new(root)],
            children: vec![Vec::new()],
            head: 0,
        })
    }

    fn snapshot(&self, v: u64) -> ApiResult<&Arc<Snapshot>> {
        self.history.get(v as usize).ok_or(ApiError::UnknownVersion(v))
    }

    fn element(&self, v: &Value) -> ApiResult<GroupElement> {
        let e = match v {
            Value::String(key) => GroupElement::parse_key(&self.param, key)?,
            other => GroupElement::from_json(&self.param, other)?,
        };
        self.param.check_sort(e.sort)?;
        Ok(e)
    }

    /// Applies a move to the snapshot it names, without touching history.
    fn apply(&self, base: &Snapshot, req: &MoveRequest) -> ApiResult<Snapshot> {
        let mut game = base.game.clone();
        let mut iso = base.iso.clone();
        let mut reply = None;
        if !req.stuck && req.node.is_none() && req.a1.is_none() && req.a2.is_none() && req.iso.is_none() {
            return Err(ApiError::BadRequest("a move needs a node, sets, an ISO map or `stuck`".into()));
        }
        if req.stuck {
            game.ais_stuck()?;
        }
        if let Some(key) = &req.node {
            let z = game.tree().find(key).ok_or_else(|| ApiError::BadRequest(format!("unknown node `{key}`")))?;
            game.ais_node(z)?;
        }
        if req.a1.is_some() || req.a2.is_some() {
            let parse = |xs: &Option<Vec<Value>>| -> ApiResult<Vec<GroupElement>> {
                xs.iter().flatten().map(|x| self.element(x)).collect()
            };
            game.ais_sets(parse(&req.a1)?, parse(&req.a2)?)?;
        }
        if let Some(map) = &req.iso {
            if !self.manual_iso {
                return Err(ApiError::BadRequest("ISO moves are only accepted in manual mode".into()));
            }
            game.iso_reply(PartialMap::from_json(&self.param, map)?)?;
        } else if game.phase() == &Phase::AwaitingIso {
            if let Some(strategy) = iso.as_mut() {
                match strategy.iso_next(&game) {
                    Ok(f) => {
                        let described = f.describe(&self.param);
                        match game.iso_reply(f) {
                            Ok(()) => reply = Some(described),
                            Err(CoreError::RejectedMove { clause }) => {
                                game.iso_stuck(&format!("referee rejected the strategy's map: {clause}"))?
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                    Err(CoreError::StrategyStuck(m)) => game.iso_stuck(&m)?,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        game.settle();
        Ok(Snapshot { parent: None, action: req.action(), game, iso, reply })
    }

    fn post_move(&mut self, req: &MoveRequest) -> ApiResult<Value> {
        self.snapshot(req.version)?;
        if req.version != self.head {
            let action = req.action();
            let same = self.children[req.version as usize].iter().find(|&&c| self.history[c as usize].action == action);
            return match same {
                Some(&c) => Ok(self.move_response(c)),
                None => Err(ApiError::Conflict { given: req.version, current: self.head }),
            };
        }
        let mut next = self.apply(&self.history[self.head as usize].clone(), req)?;
        next.parent = Some(self.head);
        let v = self.history.len() as u64;
        self.history.push(Arc::new(next));
        self.children.push(Vec::new());
        self.children[self.head as usize].push(v);
        self.head = v;
        Ok(self.move_response(v))
    }

    fn move_response(&self, v: u64) -> Value {
        let s = &self.history[v as usize];
        json!({
            "version": v,
            "stage": s.game.stage(),
            "phase": s.game.status(),
            "iso": s.reply,
        })
    }

    fn goto(&mut self, v: u64) -> ApiResult<Value> {
        self.snapshot(v)?;
        self.head = v;
        Ok(json!({ "id": self.id, "version": v }))
    }
}

/// All live sessions. Moves lock one session; state reads clone the head
/// snapshot under the lock and render outside it.
#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    next: AtomicU64,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh_id(&self) -> String {
        format!("g{}", self.next.fetch_add(1, Ordering::Relaxed) + 1)
    }

    fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions.read().get(id).cloned().ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    pub fn presets(&self) -> ApiResult<Value> {
        Ok(json!({ "presets": presets::presets()? }))
    }

    pub fn create(&self, req: &CreateRequest) -> ApiResult<Value> {
        let (label, config, default_variant) = match (&req.preset, &req.config) {
            (Some(name), None) => {
                let p = presets::find(name)?.ok_or_else(|| ApiError::Config(format!("unknown preset `{name}`")))?;
                (p.name.to_string(), p.config, p.variant)
            }
            (None, Some(c)) => {
                let mu = c.profile.lambda();
                (c.preset.name().to_string(), c.clone(), GameVariant::FixedBudget { mu }.to_string())
            }
            _ => return Err(ApiError::Config("give exactly one of `preset` and `config`".into())),
        };
        let variant: GameVariant = req.variant.as_deref().unwrap_or(&default_variant).parse()?;
        let id = self.fresh_id();
        let session = Session::new(id.clone(), label, req, &config, variant)?;
        let body = json!({ "id": id, "version": 0, "stage": 0 });
        self.sessions.write().insert(id, Arc::new(Mutex::new(session)));
        Ok(body)
    }

    pub fn post_move(&self, id: &str, req: &MoveRequest) -> ApiResult<Value> {
        self.get(id)?.lock().post_move(req)
    }

    /// Moves the head back to `version`; later snapshots stay in the tree.
    pub fn undo(&self, id: &str, version: u64) -> ApiResult<Value> {
        self.get(id)?.lock().goto(version)
    }

    /// A new session sharing this one's history, headed at `version`.
    pub fn branch(&self, id: &str, version: u64) -> ApiResult<Value> {
        let src = self.get(id)?;
        let src = src.lock();
        src.snapshot(version)?;
        let new_id = self.fresh_id();
        let copy = Session {
            id: new_id.clone(),
            label: src.label.clone(),
            preset: src.preset,
            variant: src.variant,
            manual_iso: src.manual_iso,
            param: src.param.clone(),
            history: src.history.clone(),
            children: src.children.clone(),
            head: version,
        };
        drop(src);
        self.sessions.write().insert(new_id.clone(), Arc::new(Mutex::new(copy)));
        Ok(json!({ "id": new_id, "branchOf": id, "version": version }))
    }

    pub fn state(&self, id: &str, q: &StateQuery) -> ApiResult<Value> {
        let (head, snap, meta) = {
            let s = self.get(id)?;
            let s = s.lock();
            let meta = json!({
                "id": s.id,
                "preset": s.label,
                "variant": s.variant.to_string(),
                "manualIso": s.manual_iso,
                "history": history_view(&s),
            });
            (s.head, s.history[s.head as usize].clone(), (meta, s.param.clone()))
        };
        let (mut doc, param) = meta;
        render(&mut doc, head, &snap, &param, q)?;
        Ok(doc)
    }
}

fn history_view(s: &Session) -> Value {
    let nodes: Vec<Value> = s
        .history
        .iter()
        .enumerate()
        .map(|(v, snap)| json!({ "version": v, "parent": snap.parent, "action": snap.action, "stage": snap.game.stage() }))
        .collect();
    let leaves: Vec<usize> = (0..s.history.len()).filter(|&v| s.children[v].is_empty()).collect();
    json!({ "head": s.head, "nodes": nodes, "leaves": leaves })
}

fn page<T: Clone>(items: &[T], n: usize) -> Vec<T> {
    items.iter().skip(n * PAGE_SIZE).take(PAGE_SIZE).cloned().collect()
}

fn element_view(param: &StructureParameter, e: &GroupElement) -> Value {
    let gens: Vec<&str> = e.locals().into_iter().map(|l| param.gen_label(param.offset(e.sort) + l)).collect();
    json!({ "id": e.key(), "sort": e.sort, "support": gens })
}

fn render(doc: &mut Value, head: u64, snap: &Snapshot, param: &StructureParameter, q: &StateQuery) -> ApiResult<()> {
    let game = &snap.game;
    let tree: &Tree = game.tree();
    let node_view = |z: usize| {
        let n = tree.node(z);
        json!({ "key": n.key, "level": n.level, "payload": n.payload })
    };
    let frontier: Vec<Value> = game.frontier().into_iter().map(node_view).collect();
    let chain: Vec<Value> = game.chain().iter().map(|&z| node_view(z)).collect();

    param.check_sort(q.sort)?;
    let width = param.gen_count(q.sort);
    let total: u128 = 1u128.checked_shl(width as u32).unwrap_or(u128::MAX);
    let start = (q.elements_page * PAGE_SIZE) as u128;
    let elements: Vec<Value> = (start..total.min(start + PAGE_SIZE as u128))
        .map(|idx| {
            let locals = (0..width).filter(|&k| k < 128 && idx >> k & 1 == 1);
            element_view(param, &param.element(q.sort, locals).expect("in range"))
        })
        .collect();

    let map: Vec<Value> = game
        .current_map()
        .bases(param)
        .iter()
        .map(|(&s, c)| json!({ "sort": s, "sortLabel": param.sort_label(s), "base": element_view(param, c) }))
        .collect();
    let constants = json!({
        "a": game.m1().constant.as_ref().map(|c| element_view(param, c)),
        "b": game.m2().constant.as_ref().map(|c| element_view(param, c)),
    });
    let extra = json!({
        "version": head,
        "stage": game.stage(),
        "phase": game.status(),
        "winner": game.winner(),
        "budget": { "max": game.budget(), "rule": game.variant().to_string() },
        "chain": chain,
        "frontier": { "page": q.frontier_page, "pageSize": PAGE_SIZE, "total": frontier.len(), "items": page(&frontier, q.frontier_page) },
        "elements": {
            "sort": q.sort, "sortLabel": param.sort_label(q.sort), "page": q.elements_page, "pageSize": PAGE_SIZE,
            "total": total.to_string(), "items": elements,
        },
        "map": map,
        "constants": constants,
        "lastIsoReply": snap.reply,
        "trace": game.trace(),
    });
    let obj = doc.as_object_mut().expect("object");
    for (k, v) in extra.as_object().expect("object") {
        obj.insert(k.clone(), v.clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1(store: &SessionStore) -> String {
        let r = store.create(&CreateRequest { preset: Some("s1-minimal".into()), ..Default::default() }).unwrap();
        r["id"].as_str().unwrap().to_string()
    }

    fn mv(version: u64, node: Option<&str>, a1: &[&str]) -> MoveRequest {
        MoveRequest {
            version,
            node: node.map(String::from),
            a1: (!a1.is_empty()).then(|| a1.iter().map(|k| json!(k)).collect()),
            ..Default::default()
        }
    }

    #[test]
    fn fresh_session_starts_at_the_root() {
        let store = SessionStore::new();
        let id = s1(&store);
        let st = store.state(&id, &StateQuery::default()).unwrap();
        assert_eq!(st["stage"], 0);
        assert_eq!(st["frontier"]["total"], 1);
        assert_eq!(st["frontier"]["items"][0]["level"], 0);
    }

    #[test]
    fn one_stage_maps_the_base_sort_to_b_star() {
        let store = SessionStore::new();
        let id = s1(&store);
        store.post_move(&id, &mv(0, Some("{}"), &[])).unwrap();
        let r = store.post_move(&id, &mv(1, Some("{\"0\":0}"), &["0:"])).unwrap();
        assert!(r["iso"].is_object());
        let st = store.state(&id, &StateQuery::default()).unwrap();
        let b = st["constants"]["b"]["id"].clone();
        let base = st["map"].as_array().unwrap().iter().find(|m| m["sort"] == 0).unwrap();
        assert_eq!(base["base"]["id"], b);
    }

    #[test]
    fn over_budget_sets_are_rejected_without_state_change() {
        let store = SessionStore::new();
        let id = store
            .create(&CreateRequest { preset: Some("s1-minimal".into()), variant: Some("one".into()), ..Default::default() })
            .unwrap()["id"]
            .as_str()
            .unwrap()
            .to_string();
        store.post_move(&id, &mv(0, Some("{}"), &[])).unwrap();
        store.post_move(&id, &mv(1, Some("{\"0\":0}"), &[])).unwrap();
        let err = store.post_move(&id, &mv(2, None, &["0:", "1:"])).unwrap_err();
        assert_eq!(err.body()["clause"], "|A1 ∪ A2| < 1+μ");
        assert_eq!(store.state(&id, &StateQuery::default()).unwrap()["version"], 2);
    }

    #[test]
    fn stale_versions_conflict_and_repeats_are_idempotent() {
        let store = SessionStore::new();
        let id = s1(&store);
        let first = store.post_move(&id, &mv(0, Some("{}"), &[])).unwrap();
        let again = store.post_move(&id, &mv(0, Some("{}"), &[])).unwrap();
        assert_eq!(first, again);
        let err = store.post_move(&id, &mv(0, None, &["0:"])).unwrap_err();
        assert!(matches!(err, ApiError::Conflict { given: 0, current: 1 }));
        assert!(matches!(store.post_move(&id, &mv(9, Some("{}"), &[])), Err(ApiError::UnknownVersion(9))));
    }

    #[test]
    fn undo_then_diverge_leaves_two_leaves() {
        let store = SessionStore::new();
        let id = s1(&store);
        store.post_move(&id, &mv(0, Some("{}"), &[])).unwrap();
        store.post_move(&id, &mv(1, Some("{\"0\":0}"), &["0:"])).unwrap();
        store.undo(&id, 1).unwrap();
        store.post_move(&id, &mv(1, Some("{\"0\":0}"), &["1:"])).unwrap();
        let st = store.state(&id, &StateQuery::default()).unwrap();
        assert_eq!(st["history"]["leaves"].as_array().unwrap().len(), 2);
        store.undo(&id, 0).unwrap();
        assert_eq!(store.state(&id, &StateQuery::default()).unwrap()["stage"], 0);
        assert!(matches!(store.undo(&id, 42), Err(ApiError::UnknownVersion(42))));
    }

    #[test]
    fn branches_and_sessions_are_independent() {
        let store = SessionStore::new();
        let a = s1(&store);
        let b = s1(&store);
        store.post_move(&a, &mv(0, Some("{}"), &[])).unwrap();
        assert_eq!(store.state(&b, &StateQuery::default()).unwrap()["version"], 0);
        let br = store.branch(&a, 0).unwrap();
        let c = br["id"].as_str().unwrap();
        store.post_move(c, &mv(0, Some("{}"), &[])).unwrap();
        store.post_move(&a, &mv(1, Some("{\"0\":0}"), &[])).unwrap();
        assert_eq!(store.state(c, &StateQuery::default()).unwrap()["version"], 2);
        assert_eq!(store.state(&a, &StateQuery::default()).unwrap()["version"], 2);
        assert_eq!(store.state(&a, &StateQuery::default()).unwrap()["phase"]["phase"], "awaiting-sets");
    }

    #[test]
    fn paging_beyond_the_end_is_empty() {
        let store = SessionStore::new();
        let id = s1(&store);
        let st = store.state(&id, &StateQuery { frontier_page: 5, elements_page: 1000, sort: 0 }).unwrap();
        assert!(st["frontier"]["items"].as_array().unwrap().is_empty());
        assert!(st["elements"]["items"].as_array().unwrap().is_empty());
    }

    #[test]
    fn served_states_equal_replay_of_their_trace() {
        let store = SessionStore::new();
        let id = store.create(&CreateRequest { preset: Some("s3-cherry".into()), ..Default::default() }).unwrap()["id"]
            .as_str()
            .unwrap()
            .to_string();
        let mut version = 0;
        loop {
            let st = store.state(&id, &StateQuery::default()).unwrap();
            if st["winner"].is_string() {
                break;
            }
            let node = st["frontier"]["items"][0]["key"].as_str().unwrap().to_string();
            let sets: Vec<&str> = if st["stage"] == 0 { vec![] } else { vec!["0:"] };
            version = store.post_move(&id, &mv(version, Some(&node), &sets)).unwrap()["version"].as_u64().unwrap();
        }
        let session = store.get(&id).unwrap();
        let s = session.lock();
        let head = &s.history[s.head as usize].game;
        let fresh = Game::new(head.m1().clone(), head.m2().clone(), head.tree().clone(), head.variant()).unwrap();
        let replayed = fresh.replay(head.trace()).unwrap();
        assert_eq!(replayed.to_jsonl(Value::Null), head.to_jsonl(Value::Null));
        assert_eq!(head.winner(), Some(efgame::game::Player::Iso));
    }

    #[test]
    fn manual_iso_accepts_maps_over_the_move_endpoint() {
        let store = SessionStore::new();
        let id = store
            .create(&CreateRequest { preset: Some("s1-minimal".into()), manual_iso: true, ..Default::default() })
            .unwrap()["id"]
            .as_str()
            .unwrap()
            .to_string();
        store.post_move(&id, &mv(0, Some("{}"), &[])).unwrap();
        store.post_move(&id, &mv(1, Some("{\"0\":0}"), &["0:"])).unwrap();
        let st = store.state(&id, &StateQuery::default()).unwrap();
        assert_eq!(st["phase"]["phase"], "awaiting-iso");
        // the empty map misses the constant
        let bad = MoveRequest { version: 2, iso: Some(json!({ "bases": [] })), ..Default::default() };
        assert!(matches!(store.post_move(&id, &bad), Err(ApiError::Rejected { .. })));
    }

    #[test]
    fn invalid_configs_are_refused() {
        let store = SessionStore::new();
        assert!(matches!(
            store.create(&CreateRequest { preset: Some("nope".into()), ..Default::default() }),
            Err(ApiError::Config(_))
        ));
        assert!(matches!(store.create(&CreateRequest::default()), Err(ApiError::Config(_))));
        assert!(matches!(
            store.create(&CreateRequest { preset: Some("s1-minimal".into()), variant: Some("mu:x".into()), ..Default::default() }),
            Err(ApiError::Config(_))
        ));
    }
}
