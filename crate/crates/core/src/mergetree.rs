//! Join and split trees of scalar fields.
//!
//! Trees are built by sweeping vertices in `(f, vertex id)` order and
//! tracking sublevel-set components with a union-find. Only minima, merge
//! saddles and the root become tree nodes; regular vertices are recorded in
//! a vertex labeling (the tree arc each vertex lies on).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::field::{domain_diagonal, ScalarField};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Sublevel sets: leaves are minima, the root is the global maximum.
    Join,
    /// Superlevel sets: leaves are maxima, the root is the global minimum.
    Split,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "join" => Ok(Direction::Join),
            "split" => Ok(Direction::Split),
            other => Err(Error::InvalidParameter(format!("unknown direction {other:?}"))),
        }
    }
}

impl Direction {
    fn sign<T: Scalar>(self) -> T {
        match self {
            Direction::Join => T::one(),
            Direction::Split => -T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Leaf,
    Saddle,
    Root,
}

/// Grid neighborhood used to connect vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// 2D triangulated grid: 4 axis neighbors plus the (+1,+1) diagonal pair.
    #[default]
    Freudenthal2d,
    Four2d,
    Six3d,
    /// 3D Freudenthal subdivision, 14 neighbors.
    Freudenthal3d,
}

impl Connectivity {
    pub fn default_for(dimension: usize) -> Self {
        if dimension == 3 {
            Connectivity::Freudenthal3d
        } else {
            Connectivity::Freudenthal2d
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Connectivity::Freudenthal2d | Connectivity::Four2d => 2,
            Connectivity::Six3d | Connectivity::Freudenthal3d => 3,
        }
    }

    pub fn offsets(self) -> &'static [[i64; 3]] {
        const F2: [[i64; 3]; 6] = [
            [1, 0, 0],
            [-1, 0, 0],
            [0, 1, 0],
            [0, -1, 0],
            [1, 1, 0],
            [-1, -1, 0],
        ];
        const N4: [[i64; 3]; 4] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]];
        const N6: [[i64; 3]; 6] = [
            [1, 0, 0],
            [-1, 0, 0],
            [0, 1, 0],
            [0, -1, 0],
            [0, 0, 1],
            [0, 0, -1],
        ];
        const F3: [[i64; 3]; 14] = [
            [1, 0, 0],
            [-1, 0, 0],
            [0, 1, 0],
            [0, -1, 0],
            [0, 0, 1],
            [0, 0, -1],
            [1, 1, 0],
            [-1, -1, 0],
            [1, 0, 1],
            [-1, 0, -1],
            [0, 1, 1],
            [0, -1, -1],
            [1, 1, 1],
            [-1, -1, -1],
        ];
        match self {
            Connectivity::Freudenthal2d => &F2,
            Connectivity::Four2d => &N4,
            Connectivity::Six3d => &N6,
            Connectivity::Freudenthal3d => &F3,
        }
    }
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freudenthal2d" | "f2" | "6" => Ok(Connectivity::Freudenthal2d),
            "four2d" | "4" => Ok(Connectivity::Four2d),
            "six3d" => Ok(Connectivity::Six3d),
            "freudenthal3d" | "f3" | "14" => Ok(Connectivity::Freudenthal3d),
            other => Err(Error::InvalidParameter(format!("unknown connectivity {other:?}"))),
        }
    }
}

/// Grid neighbors of `vertex`, appended to `out`.
pub fn grid_neighbors(dims: &[usize], conn: Connectivity, vertex: usize, out: &mut Vec<usize>) {
    let mut idx = [0i64; 3];
    let mut ext = [1i64; 3];
    let mut rest = vertex;
    for (a, &d) in dims.iter().enumerate() {
        idx[a] = (rest % d) as i64;
        ext[a] = d as i64;
        rest /= d;
    }
    for off in conn.offsets() {
        let mut lin = 0i64;
        let mut inside = true;
        for a in (0..3).rev() {
            let c = idx[a] + off[a];
            if c < 0 || c >= ext[a] {
                inside = false;
                break;
            }
            lin = lin * ext[a] + c;
        }
        if inside {
            out.push(lin as usize);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeNode<T> {
    pub id: usize,
    pub vertex: usize,
    pub f: T,
    pub coords: Vec<T>,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeTree<T> {
    nodes: Vec<TreeNode<T>>,
    parent: Vec<Option<usize>>,
    direction: Direction,
    diagonal: T,
    // Tree node at the lower end of the arc holding each field vertex.
    // Empty once the tree has been simplified.
    vertex_arc: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistencePair<T> {
    pub extremum: usize,
    pub saddle: usize,
    pub persistence: T,
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }
}

/// Merge tree of a grid field.
pub fn build_merge_tree<T: Scalar>(
    field: &ScalarField<T>,
    direction: Direction,
    connectivity: Connectivity,
) -> Result<MergeTree<T>> {
    if connectivity.dimension() != field.dimension() {
        return Err(Error::InvalidParameter(format!(
            "{connectivity:?} does not apply to a {}D field",
            field.dimension()
        )));
    }
    let dims = field.dims().to_vec();
    let mut tree = build_on_graph(
        field.values(),
        |v| field.coords(v),
        |v, out| grid_neighbors(&dims, connectivity, v, out),
        direction,
    )?;
    tree.diagonal = domain_diagonal(field);
    Ok(tree)
}

/// Merge tree of a function on the vertices of an arbitrary graph.
///
/// Ties in `values` are broken by vertex index.
pub fn build_on_graph<T: Scalar>(
    values: &[T],
    coords: impl Fn(usize) -> Vec<T>,
    mut neighbors: impl FnMut(usize, &mut Vec<usize>),
    direction: Direction,
) -> Result<MergeTree<T>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InvalidTree("no vertices".into()));
    }
    let sign: T = direction.sign();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        (sign * values[a])
            .partial_cmp(&(sign * values[b]))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }

    let mut dsu = Dsu::new(n);
    let mut top = vec![usize::MAX; n];
    let mut arc = vec![usize::MAX; n];
    let mut nodes: Vec<TreeNode<T>> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut nbrs = Vec::new();
    let mut comps = Vec::new();

    let new_node = |nodes: &mut Vec<TreeNode<T>>, parent: &mut Vec<Option<usize>>, v: usize| {
        let id = nodes.len();
        nodes.push(TreeNode {
            id,
            vertex: v,
            f: values[v],
            coords: coords(v),
            kind: NodeKind::Saddle,
        });
        parent.push(None);
        id
    };

    for (r, &v) in order.iter().enumerate() {
        nbrs.clear();
        neighbors(v, &mut nbrs);
        comps.clear();
        for &u in &nbrs {
            if rank[u] < r {
                let c = dsu.find(u);
                if !comps.contains(&c) {
                    comps.push(c);
                }
            }
        }
        let last = r + 1 == n;
        match comps.len() {
            0 => {
                let id = new_node(&mut nodes, &mut parent, v);
                top[v] = id;
                arc[v] = id;
            }
            1 if !last => {
                let c = comps[0];
                let t = top[c];
                let root = dsu.union(c, v);
                top[root] = t;
                arc[v] = t;
            }
            _ => {
                let id = new_node(&mut nodes, &mut parent, v);
                let mut root = v;
                for &c in &comps {
                    parent[top[c]] = Some(id);
                    root = dsu.union(root, c);
                }
                top[root] = id;
                arc[v] = id;
            }
        }
    }

    let roots = (0..n).filter(|&v| dsu.find(v) == v).count();
    if roots != 1 {
        return Err(Error::Disconnected { components: roots });
    }

    let mut tree = MergeTree {
        nodes,
        parent,
        direction,
        diagonal: T::one(),
        vertex_arc: arc,
    };
    tree.refresh_kinds();
    Ok(tree)
}

impl<T: Scalar> MergeTree<T> {
    /// Assembles a tree from explicit parts and checks its invariants.
    pub fn from_parts(
        nodes: Vec<TreeNode<T>>,
        parent: Vec<Option<usize>>,
        direction: Direction,
    ) -> Result<Self> {
        if nodes.len() != parent.len() {
            return Err(Error::InvalidTree("parent list length differs from node count".into()));
        }
        let mut tree = Self {
            nodes,
            parent,
            direction,
            diagonal: T::one(),
            vertex_arc: Vec::new(),
        };
        for (i, n) in tree.nodes.iter_mut().enumerate() {
            n.id = i;
        }
        tree.refresh_kinds();
        tree.validate()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode<T> {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent[id]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Bounding-box diagonal of the originating domain (1 when unknown).
    pub fn diagonal(&self) -> T {
        self.diagonal
    }

    pub fn set_diagonal(&mut self, d: T) {
        self.diagonal = d;
    }

    /// Arc labeling of the originating vertices; `None` after simplification.
    pub fn vertex_labels(&self) -> Option<&[usize]> {
        if self.vertex_arc.is_empty() {
            None
        } else {
            Some(&self.vertex_arc)
        }
    }

    pub fn root(&self) -> usize {
        self.parent
            .iter()
            .position(Option::is_none)
            .expect("tree has a root")
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.nodes.len()];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                ch[p].push(i);
            }
        }
        ch
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Leaf)
            .map(|n| n.id)
            .collect()
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// `max f - min f` over the nodes; equals the field range for
    /// unsimplified and simplified trees alike.
    pub fn range(&self) -> T {
        let (lo, hi) = self.nodes.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), n| (lo.min(n.f), hi.max(n.f)),
        );
        hi - lo
    }

    fn refresh_kinds(&mut self) {
        let mut has_child = vec![false; self.nodes.len()];
        for p in self.parent.iter().flatten() {
            has_child[*p] = true;
        }
        for (i, n) in self.nodes.iter_mut().enumerate() {
            n.kind = if self.parent[i].is_none() {
                NodeKind::Root
            } else if has_child[i] {
                NodeKind::Saddle
            } else {
                NodeKind::Leaf
            };
        }
    }

    /// Sweep key: smaller means processed earlier.
    fn sweep_cmp(&self, a: usize, b: usize) -> Ordering {
        let s: T = self.direction.sign();
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        (s * na.f)
            .partial_cmp(&(s * nb.f))
            .unwrap_or(Ordering::Equal)
            .then(na.vertex.cmp(&nb.vertex))
    }

    /// Checks the structural invariants: one root, acyclic, monotone heights
    /// and no interior node of degree two.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::InvalidTree("empty tree".into()));
        }
        let roots = self.parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::InvalidTree(format!("expected one root, found {roots}")));
        }
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::UnknownNode(p));
                }
                let ok = match self.direction {
                    Direction::Join => self.nodes[p].f >= self.nodes[i].f,
                    Direction::Split => self.nodes[p].f <= self.nodes[i].f,
                };
                if !ok {
                    return Err(Error::InvalidTree(format!("node {i} is not monotone toward its parent")));
                }
            }
        }
        // every node must reach the root within n steps
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = self.parent[cur] {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidTree("parent links contain a cycle".into()));
                }
            }
        }
        let children = self.children();
        for (i, ch) in children.iter().enumerate() {
            if self.parent[i].is_some() && ch.len() == 1 {
                return Err(Error::InvalidTree(format!("interior node {i} has a single child")));
            }
        }
        Ok(())
    }

    fn depths(&self) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.nodes.len()];
        for start in 0..self.nodes.len() {
            let mut path = Vec::new();
            let mut cur = start;
            while depth[cur] == usize::MAX {
                path.push(cur);
                match self.parent[cur] {
                    Some(p) => cur = p,
                    None => {
                        depth[cur] = 0;
                        path.pop();
                        break;
                    }
                }
            }
            let mut d = depth[cur];
            while let Some(x) = path.pop() {
                d += 1;
                depth[x] = d;
            }
        }
        depth
    }

    /// Lowest common ancestor and its height.
    pub fn lca(&self, u: usize, v: usize) -> Result<(usize, T)> {
        let n = self.nodes.len();
        if u >= n {
            return Err(Error::UnknownNode(u));
        }
        if v >= n {
            return Err(Error::UnknownNode(v));
        }
        let idx = LcaIndex::new(self);
        let w = idx.lca(u, v);
        Ok((w, self.nodes[w].f))
    }

    /// Post-order (children before parents).
    pub fn post_order(&self) -> Vec<usize> {
        let children = self.children();
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root(), false)];
        while let Some((x, expanded)) = stack.pop() {
            if expanded {
                out.push(x);
            } else {
                stack.push((x, true));
                for &c in children[x].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }
}

/// Depth table for repeated LCA queries.
pub struct LcaIndex<'a, T> {
    tree: &'a MergeTree<T>,
    depth: Vec<usize>,
}

impl<'a, T: Scalar> LcaIndex<'a, T> {
    pub fn new(tree: &'a MergeTree<T>) -> Self {
        Self {
            tree,
            depth: tree.depths(),
        }
    }

    pub fn lca(&self, mut u: usize, mut v: usize) -> usize {
        while self.depth[u] > self.depth[v] {
            u = self.tree.parent[u].unwrap();
        }
        while self.depth[v] > self.depth[u] {
            v = self.tree.parent[v].unwrap();
        }
        while u != v {
            u = self.tree.parent[u].unwrap();
            v = self.tree.parent[v].unwrap();
        }
        u
    }
}

/// Elder-rule pairing. Every leaf is paired once; the oldest leaf pairs with
/// the root. Sorted by persistence, then by extremum vertex id.
pub fn persistence_pairs<T: Scalar>(tree: &MergeTree<T>) -> Vec<PersistencePair<T>> {
    let children = tree.children();
    let root = tree.root();
    let mut rep = vec![usize::MAX; tree.len()];
    let mut pairs = Vec::with_capacity(tree.count_kind(NodeKind::Leaf));
    let pers = |a: usize, b: usize| (tree.nodes[a].f - tree.nodes[b].f).abs();
    for x in tree.post_order() {
        if children[x].is_empty() {
            rep[x] = x;
            if x == root {
                pairs.push(PersistencePair {
                    extremum: x,
                    saddle: x,
                    persistence: T::zero(),
                });
            }
            continue;
        }
        let elder = children[x]
            .iter()
            .map(|&c| rep[c])
            .min_by(|&a, &b| tree.sweep_cmp(a, b))
            .unwrap();
        for &c in &children[x] {
            if rep[c] != elder {
                pairs.push(PersistencePair {
                    extremum: rep[c],
                    saddle: x,
                    persistence: pers(x, rep[c]),
                });
            }
        }
        rep[x] = elder;
        if x == root {
            pairs.push(PersistencePair {
                extremum: elder,
                saddle: x,
                persistence: pers(x, elder),
            });
        }
    }
    sort_pairs(tree, &mut pairs);
    pairs
}

fn sort_pairs<T: Scalar>(tree: &MergeTree<T>, pairs: &mut [PersistencePair<T>]) {
    pairs.sort_by(|a, b| {
        a.persistence
            .partial_cmp(&b.persistence)
            .unwrap_or(Ordering::Equal)
            .then(tree.nodes[a.extremum].vertex.cmp(&tree.nodes[b.extremum].vertex))
    });
}

/// Cancels leaf-saddle pairs with persistence below `epsilon * R` in
/// increasing persistence order, contracting saddles left with one child.
/// The root and the global pair are never removed.
pub fn simplify<T: Scalar>(tree: &MergeTree<T>, epsilon: T) -> Result<MergeTree<T>> {
    if !(epsilon >= T::zero() && epsilon <= T::one()) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let threshold = epsilon * tree.range();
    let mut work = tree.clone();
    loop {
        let root = work.root();
        let pairs = persistence_pairs(&work);
        // only pairs whose extremum hangs directly below its saddle; the
        // lowest-persistence branch always has that shape up to ties
        let cand = pairs.iter().find(|p| {
            p.persistence < threshold
                && p.extremum != p.saddle
                && !(p.saddle == root && is_global(&work, p))
                && work.parent[p.extremum] == Some(p.saddle)
        });
        let Some(pair) = cand.copied() else { break };
        work = cancel(&work, pair.extremum);
    }
    if work.len() != tree.len() {
        work.vertex_arc.clear();
    }
    Ok(work)
}

fn is_global<T: Scalar>(tree: &MergeTree<T>, p: &PersistencePair<T>) -> bool {
    // the root pairs with exactly one extremum through the elder rule: the
    // one with the smallest sweep key overall
    let oldest = tree
        .leaves()
        .into_iter()
        .min_by(|&a, &b| tree.sweep_cmp(a, b))
        .unwrap();
    p.extremum == oldest
}

fn cancel<T: Scalar>(tree: &MergeTree<T>, leaf: usize) -> MergeTree<T> {
    let mut parent = tree.parent.clone();
    let mut alive = vec![true; tree.len()];
    let saddle = parent[leaf].expect("leaf has a parent");
    alive[leaf] = false;
    parent[leaf] = None;
    let remaining: Vec<usize> = (0..tree.len())
        .filter(|&i| alive[i] && parent[i] == Some(saddle))
        .collect();
    if remaining.len() == 1 && parent[saddle].is_some() {
        parent[remaining[0]] = parent[saddle];
        alive[saddle] = false;
        parent[saddle] = None;
    }
    compact(tree, &alive, &parent)
}

fn compact<T: Scalar>(tree: &MergeTree<T>, alive: &[bool], parent: &[Option<usize>]) -> MergeTree<T> {
    let mut remap = vec![usize::MAX; tree.len()];
    let mut nodes = Vec::new();
    for i in 0..tree.len() {
        if alive[i] {
            remap[i] = nodes.len();
            let mut n = tree.nodes[i].clone();
            n.id = nodes.len();
            nodes.push(n);
        }
    }
    let new_parent = (0..tree.len())
        .filter(|&i| alive[i])
        .map(|i| parent[i].map(|p| remap[p]))
        .collect();
    let mut out = MergeTree {
        nodes,
        parent: new_parent,
        direction: tree.direction,
        diagonal: tree.diagonal,
        vertex_arc: Vec::new(),
    };
    out.refresh_kinds();
    out
}

/// Surviving node count of `simplify(tree, eps)` for each `eps`.
pub fn persistence_graph<T: Scalar>(tree: &MergeTree<T>, eps_grid: &[T]) -> Result<Vec<(T, usize)>> {
    eps_grid
        .iter()
        .map(|&e| simplify(tree, e).map(|t| (e, t.len())))
        .collect()
}

/// Writes a persistence graph as `epsilon,count` CSV.
pub fn persistence_graph_csv<T: Scalar>(rows: &[(T, usize)]) -> String {
    let mut s = String::from("epsilon,count\n");
    for (e, c) in rows {
        s.push_str(&format!("{e},{c}\n"));
    }
    s
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct TreeDoc<T> {
    nodes: Vec<TreeNode<T>>,
    parent: BTreeMap<usize, usize>,
    direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagonal: Option<T>,
}

impl<T: Scalar> MergeTree<T> {
    pub fn to_json(&self) -> Result<String> {
        let doc = TreeDoc {
            nodes: self.nodes.clone(),
            parent: self
                .parent
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.map(|p| (i, p)))
                .collect(),
            direction: self.direction,
            diagonal: Some(self.diagonal),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDoc<T> = serde_json::from_str(text)?;
        let mut index = BTreeMap::new();
        for (pos, n) in doc.nodes.iter().enumerate() {
            if index.insert(n.id, pos).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id {}", n.id)));
            }
        }
        let mut parent = vec![None; doc.nodes.len()];
        for (child, par) in &doc.parent {
            let c = *index.get(child).ok_or(Error::UnknownNode(*child))?;
            let p = *index.get(par).ok_or(Error::UnknownNode(*par))?;
            parent[c] = Some(p);
        }
        let mut tree = Self::from_parts(doc.nodes, parent, doc.direction)?;
        if let Some(d) = doc.diagonal {
            tree.diagonal = d;
        }
        Ok(tree)
    }
}
