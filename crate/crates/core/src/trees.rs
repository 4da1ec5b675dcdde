//! Trees that bound game length, and local families of partial functions.
//!
//! A [`Tree`] is stored as a parent-pointer forest with nodes grouped by
//! level. Family trees have partial-function payloads; explicit trees carry
//! ordinal labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinals::{Ordinal, PartialFn};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Label(Ordinal),
    Fn(PartialFn),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub key: String,
    pub level: Ordinal,
    pub parent: Option<NodeId>,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<Node>,
    children: Vec<Vec<NodeId>>,
    by_level: Vec<Vec<NodeId>>,
    index: HashMap<String, NodeId>,
}

/// Serialized form of explicit trees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub nodes: Vec<NodeDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    pub label: Ordinal,
    #[serde(default)]
    pub parent: Option<String>,
}

impl Tree {
    /// Builds a forest from `(key, parent, payload)` triples, parents first.
    fn from_parts(parts: Vec<(String, Option<NodeId>, Payload)>) -> Result<Self> {
        let mut nodes: Vec<Node> = Vec::with_capacity(parts.len());
        let mut children = vec![Vec::new(); parts.len()];
        let mut by_level: Vec<Vec<NodeId>> = Vec::new();
        let mut index = HashMap::new();
        for (i, (key, parent, payload)) in parts.into_iter().enumerate() {
            let level = match parent {
                None => 0,
                Some(p) if p < i => nodes[p].level + 1,
                Some(_) => return Err(Error::InvalidTree(format!("node `{key}` listed before its parent"))),
            };
            if let Some(p) = parent {
                children[p].push(i);
            }
            if by_level.len() <= level as usize {
                by_level.push(Vec::new());
            }
            by_level[level as usize].push(i);
            if index.insert(key.clone(), i).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id `{key}`")));
            }
            nodes.push(Node { key, level, parent, payload });
        }
        Ok(Tree { nodes, children, by_level, index })
    }

    /// Explicit tree from a document. Parents may appear in any order.
    pub fn from_doc(doc: &TreeDoc) -> Result<Self> {
        let pos: HashMap<&str, usize> = doc.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        if pos.len() != doc.nodes.len() {
            return Err(Error::InvalidTree("duplicate node ids".into()));
        }
        // Topological order by depth so parents come first.
        let mut depth = vec![None; doc.nodes.len()];
        fn depth_of(i: usize, doc: &TreeDoc, pos: &HashMap<&str, usize>, depth: &mut Vec<Option<u32>>, guard: usize) -> Result<u32> {
            if let Some(d) = depth[i] {
                return Ok(d);
            }
            if guard > doc.nodes.len() {
                return Err(Error::InvalidTree("parent cycle".into()));
            }
            let d = match &doc.nodes[i].parent {
                None => 0,
                Some(p) => {
                    let &pi = pos.get(p.as_str()).ok_or_else(|| Error::InvalidTree(format!("unknown parent `{p}`")))?;
                    depth_of(pi, doc, pos, depth, guard + 1)? + 1
                }
            };
            depth[i] = Some(d);
            Ok(d)
        }
        for i in 0..doc.nodes.len() {
            depth_of(i, doc, &pos, &mut depth, 0)?;
        }
        let mut order: Vec<usize> = (0..doc.nodes.len()).collect();
        order.sort_by_key(|&i| (depth[i], i));
        let new_pos: HashMap<usize, usize> = order.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let parts = order
            .iter()
            .map(|&i| {
                let n = &doc.nodes[i];
                let parent = n.parent.as_ref().map(|p| new_pos[&pos[p.as_str()]]);
                (n.id.clone(), parent, Payload::Label(n.label))
            })
            .collect();
        Tree::from_parts(parts)
    }

    /// Explicit tree from a parent array (`parents[0]` must be `None`),
    /// labelled by position.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let doc = TreeDoc {
            nodes: parents
                .iter()
                .enumerate()
                .map(|(i, p)| NodeDoc { id: format!("n{i}"), label: i as Ordinal, parent: p.map(|q| format!("n{q}")) })
                .collect(),
        };
        Tree::from_doc(&doc)
    }

    pub fn to_doc(&self) -> TreeDoc {
        TreeDoc {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| NodeDoc {
                    id: n.key.clone(),
                    label: match &n.payload {
                        Payload::Label(l) => *l,
                        Payload::Fn(_) => i as Ordinal,
                    },
                    parent: n.parent.map(|p| self.nodes[p].key.clone()),
                })
                .collect(),
        }
    }

    /// Same shape with labels replaced by `labels[node]`.
    pub fn relabel(&self, labels: &[Ordinal]) -> Tree {
        let mut t = self.clone();
        for (n, &l) in t.nodes.iter_mut().zip(labels) {
            n.payload = Payload::Label(l);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn find(&self, key: &str) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    pub fn level(&self, n: NodeId) -> Ordinal {
        self.nodes[n].level
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.children[n]
    }

    pub fn at_level(&self, level: Ordinal) -> &[NodeId] {
        self.by_level.get(level as usize).map_or(&[], |v| v.as_slice())
    }

    /// Number of levels (height + 1); 0 for the empty tree.
    pub fn depth(&self) -> Ordinal {
        self.by_level.len() as Ordinal
    }

    pub fn root(&self) -> Result<NodeId> {
        match self.at_level(0) {
            [r] => Ok(*r),
            [] => Err(Error::InvalidTree("tree is empty".into())),
            _ => Err(Error::InvalidTree("tree has several level-0 nodes".into())),
        }
    }

    /// `x ≤ y` in the tree order.
    pub fn leq(&self, x: NodeId, y: NodeId) -> bool {
        let lx = self.level(x);
        if lx > self.level(y) {
            return false;
        }
        self.ancestor_at(y, lx) == Some(x)
    }

    pub fn comparable(&self, x: NodeId, y: NodeId) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    /// The ancestor of `n` at `level` (`n` itself at its own level).
    pub fn ancestor_at(&self, n: NodeId, level: Ordinal) -> Option<NodeId> {
        let mut cur = n;
        if self.level(cur) < level {
            return None;
        }
        while self.level(cur) > level {
            cur = self.nodes[cur].parent?;
        }
        Some(cur)
    }

    /// Nodes at `level` strictly above `top` (all level-0 nodes when `top` is none).
    pub fn successors_at_level(&self, top: Option<NodeId>, level: Ordinal) -> Vec<NodeId> {
        match top {
            None if level == 0 => self.at_level(0).to_vec(),
            None => Vec::new(),
            Some(t) if level == self.level(t) + 1 => self.children[t].clone(),
            Some(t) if level > self.level(t) => {
                self.at_level(level).iter().copied().filter(|&n| self.leq(t, n)).collect()
            }
            Some(_) => Vec::new(),
        }
    }

    pub fn label(&self, n: NodeId) -> Option<Ordinal> {
        match self.nodes[n].payload {
            Payload::Label(l) => Some(l),
            Payload::Fn(_) => None,
        }
    }

    pub fn payload_fn(&self, n: NodeId) -> Option<&PartialFn> {
        match &self.nodes[n].payload {
            Payload::Fn(f) => Some(f),
            Payload::Label(_) => None,
        }
    }

    /// Labels of the strict predecessors of `n` enumerated by level.
    pub fn predecessor_labels(&self, n: NodeId) -> PartialFn {
        let mut out = PartialFn::new();
        let mut cur = self.nodes[n].parent;
        while let Some(c) = cur {
            out.insert(self.level(c), self.label(c).unwrap_or(c as Ordinal));
            cur = self.nodes[c].parent;
        }
        out
    }

    /// Every root-to-leaf chain.
    pub fn branches(&self) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        for &r in self.at_level(0) {
            let mut stack = vec![vec![r]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if self.children[last].is_empty() {
                    out.push(path);
                } else {
                    for &c in self.children[last].iter().rev() {
                        let mut p = path.clone();
                        p.push(c);
                        stack.push(p);
                    }
                }
            }
        }
        out
    }
}

/// A finite relational structure with universe inside `[0, lambda)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteStructure {
    pub universe: BTreeSet<Ordinal>,
    /// name -> (arity, tuples)
    pub relations: BTreeMap<String, (usize, BTreeSet<Vec<Ordinal>>)>,
}

impl FiniteStructure {
    pub fn new(universe: impl IntoIterator<Item = Ordinal>) -> Self {
        FiniteStructure { universe: universe.into_iter().collect(), relations: BTreeMap::new() }
    }

    pub fn with_relation(mut self, name: &str, arity: usize, tuples: impl IntoIterator<Item = Vec<Ordinal>>) -> Self {
        self.relations.insert(name.to_string(), (arity, tuples.into_iter().collect()));
        self
    }

    fn vocabulary(&self) -> BTreeMap<&str, usize> {
        self.relations.iter().map(|(k, (a, _))| (k.as_str(), *a)).collect()
    }
}

/// A restriction-closed set of finite partial functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LocalFamily {
    Explicit { lambda: Ordinal, members: BTreeSet<PartialFn> },
    TreeEmbedding {
        lambda: Ordinal,
        #[serde(with = "tree_doc")]
        tree: Arc<Tree>,
    },
    PartialIso { lambda: Ordinal, a: FiniteStructure, b: FiniteStructure },
}

mod tree_doc {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Arc<Tree>, s: S) -> std::result::Result<S::Ok, S::Error> {
        t.to_doc().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Arc<Tree>, D::Error> {
        let doc = TreeDoc::deserialize(d)?;
        Tree::from_doc(&doc).map(Arc::new).map_err(serde::de::Error::custom)
    }
}

impl LocalFamily {
    /// Restriction closure of `generators`; always contains the empty function.
    pub fn closure(lambda: Ordinal, generators: impl IntoIterator<Item = PartialFn>) -> Result<Self> {
        let mut members = BTreeSet::new();
        members.insert(PartialFn::new());
        for g in generators {
            for (x, y) in g.iter() {
                if x >= lambda || y >= lambda {
                    return Err(Error::InvalidFamily(format!("{g} leaves [0, {lambda})")));
                }
            }
            let dom: Vec<Ordinal> = g.domain().collect();
            for mask in 0u64..1 << dom.len() {
                members.insert(g.restrict_by(|x| dom.iter().position(|&d| d == x).is_some_and(|k| mask >> k & 1 == 1)));
            }
        }
        Ok(LocalFamily::Explicit { lambda, members })
    }

    /// Explicit family given as a closed member list; validated.
    pub fn explicit(lambda: Ordinal, members: impl IntoIterator<Item = PartialFn>) -> Result<Self> {
        let members: BTreeSet<PartialFn> = members.into_iter().collect();
        if !members.contains(&PartialFn::new()) {
            return Err(Error::InvalidFamily("the empty function must be a member".into()));
        }
        for f in &members {
            for x in f.domain() {
                let smaller = f.restrict_by(|y| y != x);
                if !members.contains(&smaller) {
                    return Err(Error::InvalidFamily(format!("not restriction-closed: {f} present, {smaller} missing")));
                }
            }
            if f.iter().any(|(x, y)| x >= lambda || y >= lambda) {
                return Err(Error::InvalidFamily(format!("{f} leaves [0, {lambda})")));
            }
        }
        Ok(LocalFamily::Explicit { lambda, members })
    }

    /// Partial functions that are strictly increasing into an explicit tree.
    pub fn embed(tree: &Tree, lambda: Ordinal) -> Result<Self> {
        if tree.len() > lambda as usize {
            return Err(Error::InvalidFamily(format!("tree has {} nodes, more than lambda = {lambda}", tree.len())));
        }
        let mut seen = BTreeSet::new();
        for n in 0..tree.len() {
            let l = tree.label(n).ok_or_else(|| Error::InvalidFamily("tree nodes need ordinal labels".into()))?;
            if l >= lambda {
                return Err(Error::InvalidFamily(format!("label {l} is not below lambda = {lambda}")));
            }
            if !seen.insert(l) {
                return Err(Error::InvalidFamily(format!("label {l} used twice")));
            }
        }
        Ok(LocalFamily::TreeEmbedding { lambda, tree: Arc::new(tree.clone()) })
    }

    pub fn partial_iso(lambda: Ordinal, a: FiniteStructure, b: FiniteStructure) -> Result<Self> {
        if a.vocabulary() != b.vocabulary() {
            return Err(Error::VocabularyMismatch(format!("{:?} vs {:?}", a.vocabulary(), b.vocabulary())));
        }
        if a.universe.iter().chain(&b.universe).any(|&x| x >= lambda) {
            return Err(Error::InvalidFamily(format!("universe leaves [0, {lambda})")));
        }
        Ok(LocalFamily::PartialIso { lambda, a, b })
    }

    pub fn lambda(&self) -> Ordinal {
        match self {
            LocalFamily::Explicit { lambda, .. }
            | LocalFamily::TreeEmbedding { lambda, .. }
            | LocalFamily::PartialIso { lambda, .. } => *lambda,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LocalFamily::Explicit { .. } => "explicit",
            LocalFamily::TreeEmbedding { .. } => "tree-embedding",
            LocalFamily::PartialIso { .. } => "partial-iso",
        }
    }

    pub fn contains(&self, f: &PartialFn) -> bool {
        let lambda = self.lambda();
        if f.iter().any(|(x, y)| x >= lambda || y >= lambda) {
            return false;
        }
        match self {
            LocalFamily::Explicit { members, .. } => members.contains(f),
            LocalFamily::TreeEmbedding { tree, .. } => {
                let by_label: HashMap<Ordinal, NodeId> =
                    (0..tree.len()).filter_map(|n| tree.label(n).map(|l| (l, n))).collect();
                let mut prev: Option<NodeId> = None;
                for (_, y) in f.iter() {
                    let Some(&n) = by_label.get(&y) else { return false };
                    if let Some(p) = prev {
                        if p == n || !tree.leq(p, n) {
                            return false;
                        }
                    }
                    prev = Some(n);
                }
                true
            }
            LocalFamily::PartialIso { a, b, .. } => {
                if !f.is_injective() {
                    return false;
                }
                if !f.iter().all(|(x, y)| a.universe.contains(&x) && b.universe.contains(&y)) {
                    return false;
                }
                let dom: Vec<Ordinal> = f.domain().collect();
                a.relations.iter().all(|(name, (arity, ra))| {
                    let rb = &b.relations[name].1;
                    tuples(&dom, *arity).into_iter().all(|t| {
                        let image: Vec<Ordinal> = t.iter().map(|&x| f.get(x).unwrap()).collect();
                        ra.contains(&t) == rb.contains(&image)
                    })
                })
            }
        }
    }

    /// The family tree: members with ordinal domain ordered by inclusion.
    pub fn family_tree(&self) -> Result<Tree> {
        if !self.contains(&PartialFn::new()) {
            return Err(Error::InvalidFamily("the empty function must be a member".into()));
        }
        let lambda = self.lambda();
        let mut parts = vec![(key_of(&PartialFn::new()), None, Payload::Fn(PartialFn::new()))];
        let mut frontier = vec![(0usize, PartialFn::new())];
        let mut level = 0;
        while level < lambda && !frontier.is_empty() {
            let mut next = Vec::new();
            for (id, f) in &frontier {
                for v in 0..lambda {
                    let mut g = f.clone();
                    g.insert(level, v);
                    if self.contains(&g) {
                        parts.push((key_of(&g), Some(*id), Payload::Fn(g.clone())));
                        next.push((parts.len() - 1, g));
                    }
                }
            }
            frontier = next;
            level += 1;
        }
        Tree::from_parts(parts)
    }

    pub fn has_total_member(&self) -> Result<bool> {
        Ok(self.family_tree()?.depth() > self.lambda())
    }
}

/// Canonical node key of a family-tree payload.
pub fn key_of(f: &PartialFn) -> String {
    serde_json::to_string(f).expect("partial functions serialize")
}

fn tuples(dom: &[Ordinal], arity: usize) -> Vec<Vec<Ordinal>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                dom.iter().map(move |&x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

/// All rooted unlabeled trees with exactly `n` nodes, as parent arrays in
/// breadth-first order, one per isomorphism class.
pub fn rooted_trees(n: usize) -> Vec<Vec<Option<usize>>> {
    if n == 0 {
        return Vec::new();
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut parents = vec![None; n];
    fn go(i: usize, parents: &mut Vec<Option<usize>>, seen: &mut BTreeSet<String>, out: &mut Vec<Vec<Option<usize>>>) {
        let n = parents.len();
        if i == n {
            let code = canonical_code(parents, 0);
            if seen.insert(code) {
                out.push(bfs_order(parents));
            }
            return;
        }
        // Parents non-decreasing keeps the search to BFS-ordered arrays.
        let lo = if i > 1 { parents[i - 1].unwrap() } else { 0 };
        for p in lo..i {
            parents[i] = Some(p);
            go(i + 1, parents, seen, out);
        }
    }
    go(1, &mut parents, &mut seen, &mut out);
    out
}

/// All rooted unlabeled trees with at most `n` nodes.
pub fn rooted_trees_up_to(n: usize) -> Vec<Vec<Option<usize>>> {
    (1..=n).flat_map(rooted_trees).collect()
}

fn canonical_code(parents: &[Option<usize>], v: usize) -> String {
    let mut kids: Vec<String> =
        (0..parents.len()).filter(|&c| parents[c] == Some(v)).map(|c| canonical_code(parents, c)).collect();
    kids.sort();
    format!("({})", kids.concat())
}

fn bfs_order(parents: &[Option<usize>]) -> Vec<Option<usize>> {
    let n = parents.len();
    let mut order = vec![0usize];
    let mut k = 0;
    while k < order.len() {
        let v = order[k];
        order.extend((0..n).filter(|&c| parents[c] == Some(v)));
        k += 1;
    }
    let pos: Vec<usize> = {
        let mut p = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            p[v] = i;
        }
        p
    };
    order.iter().map(|&v| parents[v].map(|q| pos[q])).collect()
}

/// Every permutation of `0..n` (used for injective labelings).
pub fn permutations(n: usize) -> Vec<Vec<Ordinal>> {
    let mut out = Vec::new();
    let mut cur: Vec<Ordinal> = (0..n as Ordinal).collect();
    fn heap(k: usize, cur: &mut Vec<Ordinal>, out: &mut Vec<Vec<Ordinal>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            cur.swap(j, k - 1);
        }
    }
    heap(n, &mut cur, &mut out);
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pf(pairs: &[(u32, u32)]) -> PartialFn {
        PartialFn::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn family_tree_examples() {
        let trivial = LocalFamily::explicit(2, [PartialFn::new()]).unwrap();
        let t = trivial.family_tree().unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.level(t.root().unwrap()), 0);

        let zeros = LocalFamily::closure(3, [PartialFn::from_values(&[0, 0, 0])]).unwrap();
        // members with ordinal domain: ∅, {0↦0}, {0↦0,1↦0}, {0↦0,1↦0,2↦0}; the
        // chain stops below level lambda only if no total member exists
        let zt = zeros.family_tree().unwrap();
        assert_eq!(zt.len(), 4);
        let two = LocalFamily::closure(2, [PartialFn::from_values(&[0, 0])]).unwrap();
        let chain3 = LocalFamily::closure(3, [PartialFn::from_values(&[0, 0])]).unwrap();
        assert_eq!(chain3.family_tree().unwrap().len(), 3);
        assert!(two.has_total_member().unwrap());

        let fork = LocalFamily::closure(2, [pf(&[(0, 0)]), pf(&[(0, 1)])]).unwrap();
        let ft = fork.family_tree().unwrap();
        assert_eq!(ft.len(), 3);
        assert_eq!(ft.children(ft.root().unwrap()).len(), 2);
    }

    #[test]
    fn successors_examples() {
        let single = LocalFamily::explicit(2, [PartialFn::new()]).unwrap().family_tree().unwrap();
        let r = single.root().unwrap();
        assert!(single.successors_at_level(Some(r), 1).is_empty());
        assert_eq!(single.successors_at_level(None, 0), vec![r]);
        let chain = LocalFamily::closure(3, [PartialFn::from_values(&[0, 0])]).unwrap().family_tree().unwrap();
        let kids = chain.successors_at_level(Some(chain.root().unwrap()), 1);
        assert_eq!(kids.len(), 1);
        assert_eq!(chain.payload_fn(kids[0]).unwrap(), &pf(&[(0, 0)]));
    }

    #[test]
    fn embed_examples() {
        let single = Tree::from_parents(&[None]).unwrap();
        let f = LocalFamily::embed(&single, 2).unwrap();
        assert!(f.contains(&PartialFn::new()));
        assert!(f.contains(&pf(&[(0, 0)])));
        assert!(f.contains(&pf(&[(1, 0)])));
        assert!(!f.contains(&pf(&[(0, 0), (1, 0)])));
        assert!(!f.has_total_member().unwrap());

        let chain = Tree::from_parents(&[None, Some(0)]).unwrap();
        let g = LocalFamily::embed(&chain, 2).unwrap();
        assert!(g.contains(&pf(&[(0, 0), (1, 1)])));
        let chain3 = Tree::from_parents(&[None, Some(0), Some(1)]).unwrap();
        assert!(LocalFamily::embed(&chain3, 3).unwrap().has_total_member().unwrap());

        let dup = single.relabel(&[5]);
        assert!(LocalFamily::embed(&dup, 2).is_err());
        let two = Tree::from_parents(&[None, Some(0)]).unwrap().relabel(&[1, 1]);
        assert!(matches!(LocalFamily::embed(&two, 3), Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn partial_iso_examples() {
        let a = FiniteStructure::new([0, 1]);
        let fam = LocalFamily::partial_iso(2, a.clone(), a).unwrap();
        assert!(fam.contains(&PartialFn::new()));
        assert!(fam.contains(&pf(&[(0, 1), (1, 0)])));
        assert!(!fam.contains(&pf(&[(0, 1), (1, 1)])));

        let pa = FiniteStructure::new([0, 1]).with_relation("P", 1, [vec![0]]);
        let pb = FiniteStructure::new([0, 1]).with_relation("P", 1, []);
        let fam = LocalFamily::partial_iso(2, pa.clone(), pb).unwrap();
        assert!(!fam.contains(&pf(&[(0, 0)])));
        assert!(fam.contains(&pf(&[(1, 0)])));

        let q = FiniteStructure::new([0]).with_relation("Q", 2, []);
        assert!(matches!(LocalFamily::partial_iso(2, pa, q), Err(Error::VocabularyMismatch(_))));
    }

    #[test]
    fn explicit_validation() {
        assert!(LocalFamily::explicit(2, [pf(&[(0, 0)])]).is_err());
        assert!(LocalFamily::explicit(2, [PartialFn::new(), pf(&[(0, 0), (1, 1)])]).is_err());
    }

    #[test]
    fn family_json_roundtrip() {
        let t = Tree::from_parents(&[None, Some(0), Some(0)]).unwrap();
        let f = LocalFamily::embed(&t, 3).unwrap();
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["kind"], "tree-embedding");
        let back: LocalFamily = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
        let e = LocalFamily::closure(2, [pf(&[(0, 1)])]).unwrap();
        let back: LocalFamily = serde_json::from_value(serde_json::to_value(&e).unwrap()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn tree_doc_roundtrip_and_order() {
        let doc: TreeDoc = serde_json::from_str(
            r#"{"nodes":[{"id":"c","label":2,"parent":"a"},{"id":"a","label":0},{"id":"b","label":1,"parent":"a"}]}"#,
        )
        .unwrap();
        let t = Tree::from_doc(&doc).unwrap();
        let (a, c) = (t.find("a").unwrap(), t.find("c").unwrap());
        assert!(t.leq(a, c));
        assert!(!t.comparable(t.find("b").unwrap(), c));
        assert_eq!(Tree::from_doc(&t.to_doc()).unwrap(), t);
        let bad = TreeDoc { nodes: vec![NodeDoc { id: "x".into(), label: 0, parent: Some("y".into()) }] };
        assert!(Tree::from_doc(&bad).is_err());
    }

    #[test]
    fn rooted_tree_counts() {
        // OEIS A000081
        let counts: Vec<usize> = (1..=8).map(|n| rooted_trees(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20, 48, 115]);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn family_tree_order_is_inclusion_on_all_small_trees() {
        for parents in rooted_trees_up_to(3) {
            for perm in permutations(parents.len()) {
                let t = Tree::from_parents(&parents).unwrap().relabel(&perm);
                let fam = LocalFamily::embed(&t, 3).unwrap();
                let ft = fam.family_tree().unwrap();
                for x in 0..ft.len() {
                    for y in 0..ft.len() {
                        let (fx, fy) = (ft.payload_fn(x).unwrap(), ft.payload_fn(y).unwrap());
                        assert_eq!(ft.leq(x, y), fx.is_subset_of(fy));
                        assert_eq!(ft.level(x) as usize, fx.len());
                    }
                }
                assert_eq!(ft.depth() > 3, fam.has_total_member().unwrap());
            }
        }
    }

    #[test]
    fn predecessor_labels_embed_strictly() {
        for parents in rooted_trees_up_to(7) {
            let t = Tree::from_parents(&parents).unwrap();
            for x in 0..t.len() {
                for y in 0..t.len() {
                    let (px, py) = (t.predecessor_labels(x), t.predecessor_labels(y));
                    if x != y && t.leq(x, y) {
                        assert!(px.is_subset_of(&py) && px != py);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn embed_family_is_restriction_closed(shape in 0usize..9, vals in proptest::collection::vec(0u32..4, 0..4), keep in proptest::collection::vec(any::<bool>(), 4)) {
            let all = rooted_trees_up_to(4);
            let t = Tree::from_parents(&all[shape % all.len()]).unwrap();
            let fam = LocalFamily::embed(&t, 4).unwrap();
            let f = PartialFn::from_values(&vals);
            if fam.contains(&f) {
                let g = f.restrict_by(|x| keep[x as usize]);
                prop_assert!(fam.contains(&g));
            }
        }
    }
}
