//! Scratch probe for scenario tuning.
use chainplan::scenario::load_scenario;
use chainplan::world::{collision_free, CollisionContext, CompositeConfig};
use chainplan::geom::{segment_segment_distance, segment_polygon_distance, segment_polygon_penetration};
use std::path::Path;

fn main() {
    let name = std::env::args().nth(1).unwrap_or("shoulder_trap.json".into());
    let s = load_scenario(&Path::new("crates/chainplan/scenarios").join(&name)).unwrap();
    let t_goal = &s.goal_pose;
    let ctx = CollisionContext::transport(2);
    let obj = s.world.object_vertices(t_goal);
    for ca in s.world.arms[0].enumerate_ik(&s.grasp_set.ee_target(t_goal, 0)) {
        for cb in s.world.arms[1].enumerate_ik(&s.grasp_set.ee_target(t_goal, 1)) {
            let c = CompositeConfig::new(vec![ca.clone(), cb.clone()], t_goal.clone());
            let free = collision_free(&c, &s.world, &ctx);
            println!("combo a{:?}{:?} b{:?}{:?}: free {}",
                s.world.arms[0].elbow_class(&ca), &ca.0, s.world.arms[1].elbow_class(&cb), &cb.0, free);
            if !free {
                for (ai, (arm, q)) in s.world.arms.iter().zip(&c.arm_configs).enumerate() {
                    let segs = arm.link_segments(q);
                    let last = segs.len() - 1;
                    for (li, seg) in segs.iter().enumerate() {
                        for sup in &s.world.environment.supports {
                            let d = segment_segment_distance(seg, sup);
                            if d < 0.015 { println!("   arm{ai} link{li} vs support: {d:.4}"); }
                        }
                        if li < last {
                            let dp = segment_polygon_distance(seg, &obj);
                            if dp < 0.015 { println!("   arm{ai} link{li} vs object: {dp:.4}"); }
                        } else {
                            let pen = segment_polygon_penetration(seg, &obj);
                            if pen > 1e-6 { println!("   arm{ai} last link penetrates object: {pen:.4}"); }
                        }
                    }
                }
                let la = s.world.arms[0].link_segments(&c.arm_configs[0]);
                let lb = s.world.arms[1].link_segments(&c.arm_configs[1]);
                for (i1, a) in la.iter().enumerate() { for (i2, b) in lb.iter().enumerate() {
                    let d = segment_segment_distance(a, b);
                    if d < 0.015 { println!("   armA link{i1} vs armB link{i2}: {d:.4}"); }
                }}
            }
        }
    }
}
