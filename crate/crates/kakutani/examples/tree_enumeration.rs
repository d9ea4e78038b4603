//! The canonical enumeration of finite sequences and the level maps of a tree.
//!
//! Run with `cargo run --release --example tree_enumeration`.

use kakutani::trees::{canonical_enumeration, enumeration_index, TreeApproximation};

fn main() -> kakutani::Result<()> {
    println!("first sequences of the enumeration:");
    for m in 0..12 {
        println!("  σ_{m:<2} = {:?}", canonical_enumeration(m));
    }
    println!("index of (2, 0, 1) = {}", enumeration_index(&[2, 0, 1])?);

    let tree = TreeApproximation::full(2, 2);
    println!("full binary tree of depth 2, horizon {}:", tree.horizon());
    for n in 0..=tree.horizon() {
        println!("  s({n}) = {}", tree.level_map_s(n));
    }
    for s in 0..=3 {
        println!("  M({s}) = {:?}", tree.level_map_m(s));
    }
    println!("longest branch {:?}", tree.longest_branch());
    println!("as JSON: {}", tree.to_json());
    Ok(())
}
