//! Extraction of the global path once the two trees connect, and assembly
//! of the final plan from tree segments and stored regrasp actions.
//!
//! Each path node carries the configuration it is entered with and the one
//! it is left with; they differ exactly at the vertices whose regrasp the
//! second stage must realize. Deriving them from the adjacent segments
//! keeps the extraction correct for vertices that were re-rooted into the
//! opposite tree by an earlier reorganization.

use super::tree::{Connection, RootKind, Tree};
use crate::plan::{CompositePlan, PlanPhase};
use crate::world::CompositeConfig;

#[derive(Debug, Clone)]
pub struct PathNode {
    /// Vertex lives in the forward tree (at extraction time).
    pub in_forward: bool,
    pub id: usize,
    /// Arrival configuration in start-to-goal order.
    pub pre: CompositeConfig,
    /// Departure configuration in start-to-goal order.
    pub post: CompositeConfig,
}

impl PathNode {
    /// Arms whose configuration changes across this vertex.
    pub fn switching_arms(&self, tol: f64) -> Vec<usize> {
        self.pre
            .arm_configs
            .iter()
            .zip(&self.post.arm_configs)
            .enumerate()
            .filter(|(_, (a, b))| !a.approx_eq(b, tol))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GlobalPath {
    pub nodes: Vec<PathNode>,
    /// `segments[i]` runs from `nodes[i].post` to `nodes[i+1].pre`.
    pub segments: Vec<Vec<CompositeConfig>>,
}

/// The ordered vertex sequence from the start root to the goal root through
/// the connection, with the motion segments between them.
pub fn global_path(t_f: &Tree, t_b: &Tree, conn: &Connection) -> GlobalPath {
    let forward_is_start = t_f.kind == RootKind::Start;

    // (in_forward, id) in start-to-goal order, plus the segments after each
    let mut ids: Vec<(bool, usize)> = Vec::new();
    let mut segments: Vec<Vec<CompositeConfig>> = Vec::new();

    let f_chain = t_f.path_from_root(conn.new_id);
    let b_chain = t_b.path_from_root(conn.near_id);

    if forward_is_start {
        for &id in &f_chain {
            ids.push((true, id));
        }
        for w in f_chain.windows(2) {
            segments.push(t_f.vertex(w[1]).inbound_path.clone());
        }
        let mut rev_conn = conn.waypoints.clone();
        rev_conn.reverse();
        segments.push(rev_conn);
        for &id in b_chain.iter().rev() {
            ids.push((false, id));
        }
        for w in b_chain.windows(2).rev() {
            let mut seg = t_b.vertex(w[1]).inbound_path.clone();
            seg.reverse();
            segments.push(seg);
        }
    } else {
        for &id in &b_chain {
            ids.push((false, id));
        }
        for w in b_chain.windows(2) {
            segments.push(t_b.vertex(w[1]).inbound_path.clone());
        }
        segments.push(conn.waypoints.clone());
        for &id in f_chain.iter().rev() {
            ids.push((true, id));
        }
        for w in f_chain.windows(2).rev() {
            let mut seg = t_f.vertex(w[1]).inbound_path.clone();
            seg.reverse();
            segments.push(seg);
        }
    }
    debug_assert_eq!(segments.len() + 1, ids.len());

    let nodes: Vec<PathNode> = ids
        .iter()
        .enumerate()
        .map(|(i, &(in_forward, id))| {
            let pre = if i == 0 {
                segments[0].first().unwrap().clone()
            } else {
                segments[i - 1].last().unwrap().clone()
            };
            let post = if i < segments.len() {
                segments[i].first().unwrap().clone()
            } else {
                pre.clone()
            };
            PathNode {
                in_forward,
                id,
                pre,
                post,
            }
        })
        .collect();

    GlobalPath { nodes, segments }
}

/// Assemble the plan: each node's stored regrasp action (oriented to match
/// the traversal direction) followed by its outgoing closed-chain segment.
pub fn generate_plan(gp: &GlobalPath, t_f: &Tree, t_b: &Tree) -> CompositePlan {
    let mut phases: Vec<PlanPhase> = Vec::new();
    const TOL: f64 = 1e-6;
    for (i, node) in gp.nodes.iter().enumerate() {
        if !node.switching_arms(TOL).is_empty() {
            let tree = if node.in_forward { t_f } else { t_b };
            let action = tree
                .vertex(node.id)
                .regrasp_action
                .as_ref()
                .expect("path vertex with differing configs has a planned action");
            let oriented = if action
                .entry_config()
                .map_or(false, |c| c.approx_eq(&node.pre, TOL))
            {
                action.clone()
            } else {
                action.reversed()
            };
            debug_assert!(oriented
                .entry_config()
                .map_or(false, |c| c.approx_eq(&node.pre, TOL)));
            debug_assert!(oriented
                .exit_config()
                .map_or(false, |c| c.approx_eq(&node.post, TOL)));
            phases.push(PlanPhase::IkSwitch(oriented));
        }
        if i < gp.segments.len() {
            phases.push(PlanPhase::ClosedChain {
                waypoints: gp.segments[i].clone(),
            });
        }
    }
    if phases.is_empty() {
        phases.push(PlanPhase::ClosedChain {
            waypoints: vec![gp.nodes[0].pre.clone()],
        });
    }
    CompositePlan::new(phases)
}
