//! Circularizes a construction sequence and checks reverse compatibility.
//!
//! Run with `cargo run --release --example circular_functor`.

use kakutani::circular::{circular_params, CircularSystem, DEFAULT_BUDGET};
use kakutani::construction::{build_construction_sequence, ConstructionParams};
use kakutani::trees::TreeApproximation;

fn main() -> kakutani::Result<()> {
    let params = circular_params(&[3, 2, 2], &[2, 3, 2], 3)?;
    println!("q = {:?}, p = {:?}", params.q, params.p);
    let p2 = circular_params(&[3, 2, 2], &[2, 3, 2], 2)?;
    let js: Vec<u128> = (0..=p2.q_n()).map(|i| p2.j(i)).collect();
    println!("j_i at stage 2 (p_2^-1 = {}): {js:?}", p2.p_inv);

    let seq = build_construction_sequence(&TreeApproximation::chain(2), 2, &ConstructionParams::default())?;
    let sys = CircularSystem::new(seq.params.alphabet_size, seq.components(), &[2, 2])?;
    for n in 0..=2 {
        println!("stage {n}: {} circular words of length {}", sys.word_count(n), sys.length(n));
    }
    let mut reversed_ok = true;
    for w in 0..sys.word_count(1) {
        let word = sys.word(1, w, DEFAULT_BUDGET)?;
        let rev = sys.rev_word(1, w, DEFAULT_BUDGET)?;
        reversed_ok &= rev.iter().eq(word.iter().rev());
        reversed_ok &= sys.decircularize(1, &word, DEFAULT_BUDGET)? == sys.components[1][w];
    }
    println!("stage 1: reversal and de-circularization agree on every word: {reversed_ok}");
    let q2 = sys.length(2);
    let agree = (0..10_000u128).map(|i| i * (q2 / 10_000)).all(|pos| sys.rev_formula_symbol_at(2, 0, pos) == sys.symbol_at(2, 0, q2 - 1 - pos));
    println!("stage 2 (length {q2}, evaluated lazily): reversed formula agrees on 10000 positions: {agree}");
    Ok(())
}
