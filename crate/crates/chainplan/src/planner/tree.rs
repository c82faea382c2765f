//! Search-tree storage for the bidirectional planner, including the
//! failure-driven reorganization that re-roots a severed subtree into the
//! opposite tree instead of discarding it.

use crate::plan::IkSwitchAction;
use crate::pose::Pose;
use crate::world::CompositeConfig;
use std::collections::BTreeMap;
use std::collections::BTreeSet;

/// Which end of the query a tree's root sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    Start,
    Goal,
}

/// One search-tree node. `config` is the configuration the tree grows from
/// at this vertex; for regrasp vertices the inbound path ends at the
/// pre-switch configuration while `config` holds the post-switch one.
#[derive(Debug, Clone)]
pub struct TreeVertex {
    pub id: usize,
    pub config: CompositeConfig,
    /// Waypoints from the parent's config to this vertex; empty for roots.
    pub inbound_path: Vec<CompositeConfig>,
    pub need_regrasp: bool,
    pub has_regrasp: bool,
    pub regrasp_action: Option<IkSwitchAction>,
    pub regrasp_count: u32,
    pub parent: Option<usize>,
    pub children: BTreeSet<usize>,
}

/// Metric ball around a failed regrasp pose; no regrasp request may be
/// hosted inside it.
#[derive(Debug, Clone)]
pub struct BlacklistBall {
    pub center: Pose,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub kind: RootKind,
    vertices: BTreeMap<usize, TreeVertex>,
    root: usize,
    pub blacklist: Vec<BlacklistBall>,
}

impl Tree {
    pub fn new(kind: RootKind, id: usize, config: CompositeConfig) -> Self {
        let root = TreeVertex {
            id,
            config,
            inbound_path: Vec::new(),
            need_regrasp: false,
            has_regrasp: false,
            regrasp_action: None,
            regrasp_count: 0,
            parent: None,
            children: BTreeSet::new(),
        };
        let mut vertices = BTreeMap::new();
        vertices.insert(id, root);
        Tree {
            kind,
            vertices,
            root: id,
            blacklist: Vec::new(),
        }
    }

    pub fn root_id(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> &TreeVertex {
        &self.vertices[&id]
    }

    pub fn vertex_mut(&mut self, id: usize) -> &mut TreeVertex {
        self.vertices.get_mut(&id).expect("vertex id")
    }

    pub fn contains(&self, id: usize) -> bool {
        self.vertices.contains_key(&id)
    }

    /// Vertices in ascending id order (the planner's deterministic
    /// tie-break order).
    pub fn iter(&self) -> impl Iterator<Item = &TreeVertex> {
        self.vertices.values()
    }

    pub fn add_vertex(
        &mut self,
        id: usize,
        parent: usize,
        config: CompositeConfig,
        inbound_path: Vec<CompositeConfig>,
        need_regrasp: bool,
    ) -> usize {
        let count = self.vertices[&parent].regrasp_count + u32::from(need_regrasp);
        log::debug!(
            "tree[{:?}] add vertex {id} parent {parent} need_regrasp {need_regrasp} count {count}",
            self.kind
        );
        let v = TreeVertex {
            id,
            config,
            inbound_path,
            need_regrasp,
            has_regrasp: false,
            regrasp_action: None,
            regrasp_count: count,
            parent: Some(parent),
            children: BTreeSet::new(),
        };
        self.vertices.get_mut(&parent).unwrap().children.insert(id);
        self.vertices.insert(id, v);
        self.debug_audit();
        id
    }

    /// Pose is inside some blacklist ball under the weighted metric.
    pub fn blacklisted(&self, pose: &Pose, w_rot: f64) -> bool {
        self.blacklist
            .iter()
            .any(|b| b.center.distance(pose, w_rot) <= b.radius)
    }

    /// Ids on the root-to-`id` chain, root first.
    pub fn path_from_root(&self, id: usize) -> Vec<usize> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.vertices[&cur].parent {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    /// All ids in the subtree rooted at `id` (preorder).
    pub fn subtree_ids(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in &self.vertices[&v].children {
                stack.push(c);
            }
        }
        out
    }

    /// Recompute the regrasp-count recurrence over the whole tree.
    pub fn recount_regrasps(&mut self) {
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            let base = match self.vertices[&v].parent {
                Some(p) => self.vertices[&p].regrasp_count,
                None => 0,
            };
            let vert = self.vertices.get_mut(&v).unwrap();
            vert.regrasp_count = base + u32::from(vert.need_regrasp);
            stack.extend(self.vertices[&v].children.iter().copied());
        }
    }

    fn debug_audit(&self) {
        #[cfg(debug_assertions)]
        self.audit().expect("tree invariant violated");
    }

    /// Structural invariants: exactly one root, mirrored parent/child links,
    /// acyclic and fully reachable, regrasp counts matching the recurrence.
    pub fn audit(&self) -> Result<(), String> {
        let roots: Vec<usize> = self
            .vertices
            .values()
            .filter(|v| v.parent.is_none())
            .map(|v| v.id)
            .collect();
        if roots != vec![self.root] {
            return Err(format!("expected single root {}, got {roots:?}", self.root));
        }
        for v in self.vertices.values() {
            if v.id != self.root && v.inbound_path.is_empty() {
                return Err(format!("non-root vertex {} has no inbound path", v.id));
            }
            if let Some(p) = v.parent {
                let parent = self
                    .vertices
                    .get(&p)
                    .ok_or_else(|| format!("vertex {} has dangling parent {p}", v.id))?;
                if !parent.children.contains(&v.id) {
                    return Err(format!("parent {p} does not list child {}", v.id));
                }
                let expect = parent.regrasp_count + u32::from(v.need_regrasp);
                if v.regrasp_count != expect {
                    return Err(format!(
                        "vertex {} regrasp count {} != parent {} + flag",
                        v.id, v.regrasp_count, parent.regrasp_count
                    ));
                }
            }
            if v.has_regrasp && !v.need_regrasp {
                return Err(format!("vertex {} has a regrasp it never needed", v.id));
            }
            for &c in &v.children {
                let child = self
                    .vertices
                    .get(&c)
                    .ok_or_else(|| format!("vertex {} has dangling child {c}", v.id))?;
                if child.parent != Some(v.id) {
                    return Err(format!("child {c} does not point back to {}", v.id));
                }
            }
        }
        let reachable = self.subtree_ids(self.root).len();
        if reachable != self.vertices.len() {
            return Err(format!(
                "{} of {} vertices reachable from root",
                reachable,
                self.vertices.len()
            ));
        }
        Ok(())
    }

    fn remove(&mut self, id: usize) -> TreeVertex {
        self.vertices.remove(&id).expect("vertex id")
    }

    fn insert(&mut self, v: TreeVertex) {
        self.vertices.insert(v.id, v);
    }
}

/// The connection produced by a successful `Connect` call: a composite path
/// from `near_id` (backward tree) to the object pose of `new_id` (forward
/// tree).
#[derive(Debug, Clone)]
pub struct Connection {
    pub new_id: usize,
    pub near_id: usize,
    /// Waypoints from the near vertex's config to the new vertex's pose.
    pub waypoints: Vec<CompositeConfig>,
    /// End configs disagree with the new vertex's stored config, so the
    /// junction hosts one more switch.
    pub need_regrasp: bool,
}

/// After a stage-2 failure at `fail_id`, abandon only the edge between the
/// failed vertex and its parent, turn the inter-tree connection into a tree
/// edge so the severed subtree re-roots into the opposite tree, and
/// blacklist the failed pose. Vertex count across both trees is conserved.
pub fn reorganize(
    t_f: &mut Tree,
    t_b: &mut Tree,
    conn: &Connection,
    fail_in_forward: bool,
    fail_id: usize,
    blacklist_radius: f64,
    w_rot: f64,
) {
    let total = t_f.len() + t_b.len();
    let fail_pose = if fail_in_forward {
        t_f.vertex(fail_id).config.object_pose.clone()
    } else {
        t_b.vertex(fail_id).config.object_pose.clone()
    };
    log::debug!(
        "reorganize: fail vertex {fail_id} in {:?} tree, blacklisting its pose",
        if fail_in_forward { t_f.kind } else { t_b.kind }
    );

    if fail_in_forward {
        // chain fail .. conn.new_id inside the forward tree
        let chain = chain_between(t_f, fail_id, conn.new_id);
        detach(t_f, fail_id);
        // membership of the severed component, before edges get reversed
        let ids = t_f.subtree_ids(fail_id);
        reverse_chain(t_f, &chain);
        let mut moved: Vec<TreeVertex> = ids.iter().map(|&i| t_f.remove(i)).collect();
        for v in &mut moved {
            if v.id == conn.new_id {
                v.parent = Some(conn.near_id);
                v.inbound_path = conn.waypoints.clone();
                if conn.need_regrasp {
                    v.need_regrasp = true;
                }
            }
        }
        for v in moved {
            t_b.insert(v);
        }
        t_b.vertex_mut(conn.near_id).children.insert(conn.new_id);
    } else {
        let chain = chain_between(t_b, fail_id, conn.near_id);
        detach(t_b, fail_id);
        let ids = t_b.subtree_ids(fail_id);
        reverse_chain(t_b, &chain);
        let mut moved: Vec<TreeVertex> = ids.iter().map(|&i| t_b.remove(i)).collect();
        let mut reversed_conn: Vec<CompositeConfig> = conn.waypoints.clone();
        reversed_conn.reverse();
        for v in &mut moved {
            if v.id == conn.near_id {
                v.parent = Some(conn.new_id);
                v.inbound_path = reversed_conn.clone();
            }
        }
        for v in moved {
            t_f.insert(v);
        }
        t_f.vertex_mut(conn.new_id).children.insert(conn.near_id);
        if conn.need_regrasp {
            t_f.vertex_mut(conn.new_id).need_regrasp = true;
        }
    }

    t_f.recount_regrasps();
    t_b.recount_regrasps();
    let ball = BlacklistBall {
        center: fail_pose,
        radius: blacklist_radius,
    };
    t_f.blacklist.push(ball.clone());
    t_b.blacklist.push(ball);

    debug_assert_eq!(total, t_f.len() + t_b.len(), "reorganize lost vertices");
    #[cfg(debug_assertions)]
    {
        t_f.audit().expect("forward tree invariant after reorganize");
        t_b.audit().expect("backward tree invariant after reorganize");
    }
    let _ = w_rot;
}

/// Ids from `top` down to `bottom` along parent links (`top` must be an
/// ancestor of `bottom` or equal to it).
fn chain_between(tree: &Tree, top: usize, bottom: usize) -> Vec<usize> {
    let mut chain = vec![bottom];
    let mut cur = bottom;
    while cur != top {
        let p = tree
            .vertex(cur)
            .parent
            .expect("chain_between: top is not an ancestor of bottom");
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    chain
}

fn detach(tree: &mut Tree, id: usize) {
    if let Some(p) = tree.vertex(id).parent {
        tree.vertex_mut(p).children.remove(&id);
    }
    let v = tree.vertex_mut(id);
    v.parent = None;
    v.inbound_path.clear();
}

/// Reverse parent links along `chain` (ancestor first): the last element
/// becomes the local root of the chain.
fn reverse_chain(tree: &mut Tree, chain: &[usize]) {
    // collect the inbound segments before rewiring
    let inbounds: Vec<Vec<CompositeConfig>> = chain[1..]
        .iter()
        .map(|&id| tree.vertex(id).inbound_path.clone())
        .collect();
    for (i, pair) in chain.windows(2).enumerate() {
        let (upper, lower) = (pair[0], pair[1]);
        // edge upper -> lower becomes lower -> upper
        tree.vertex_mut(upper).children.remove(&lower);
        tree.vertex_mut(lower).children.insert(upper);
        let mut seg = inbounds[i].clone();
        seg.reverse();
        let u = tree.vertex_mut(upper);
        u.parent = Some(lower);
        u.inbound_path = seg;
    }
    if let Some(&new_root) = chain.last() {
        let v = tree.vertex_mut(new_root);
        v.parent = None;
        v.inbound_path = Vec::new();
    }
}
