//! Groups of involutions indexed by tree nodes: ρ, parity and the skew-diagonal action.
//!
//! Run with `cargo run --release --example involution_actions`.

use kakutani::involutions::{build_group, rho, skew_diagonal_apply, ActionTable, GroupElement, InvolutionGroup};
use kakutani::trees::TreeApproximation;

fn main() -> kakutani::Result<()> {
    let tree = TreeApproximation::full(2, 2);
    for s in 0..=2 {
        let g = build_group(&tree, s, tree.horizon());
        println!("G_{s}: generators {:?}, order {}", g.generators, g.order());
    }
    let g = GroupElement::sum([vec![0, 0], vec![0, 1], vec![1, 0]]);
    println!("{:?} is {:?}; ρ to level 1 gives {:?}", g.generators(), g.parity(), rho(&g, 2, 1)?.generators());

    // Two generators acting on four classes by bit flips.
    let group = InvolutionGroup { level: 1, generators: vec![vec![0], vec![1]] };
    let table = ActionTable { group, domain_size: 4, images: vec![vec![1, 0, 3, 2], vec![2, 3, 0, 1]] };
    table.validate()?;
    println!("free action: {}", table.is_free());
    let tuple = [0, 1, 2, 3, 3];
    for element in [GroupElement::generator(vec![0]), GroupElement::sum([vec![0], vec![1]])] {
        println!(
            "{:?} ({:?}) · {tuple:?} = {:?}",
            element.generators(),
            element.parity(),
            skew_diagonal_apply(&element, &tuple, &table)?
        );
    }
    Ok(())
}
