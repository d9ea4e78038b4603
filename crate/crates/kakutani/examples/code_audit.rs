//! Plant a known η_g as a code on the chain tree and recover g by auditing,
//! then run the identity code on a tree without a level-2 branch as a control.
//!
//! Run with `cargo run --release --example code_audit`.

use kakutani::codes::{audit_code, audit_coherence, sample_audit_inputs, OracleCode, StationaryCode};
use kakutani::construction::{build_construction_sequence, ConstructionParams};
use kakutani::fbar::Rational;
use kakutani::involutions::GroupElement;
use kakutani::trees::TreeApproximation;

fn main() -> kakutani::Result<()> {
    let params = ConstructionParams { alphabet_size: 2, members: 1, max_attempts: 4096, ..ConstructionParams::default() };
    let budget = 1 << 26;
    let epsilon = Rational::new(1, 20);

    let chain = build_construction_sequence(&TreeApproximation::chain(2), 2, &params)?;
    let g = GroupElement::generator(vec![0]);
    let oracle = OracleCode::from_eta(&chain, 2, 1, &g, budget)?;
    let samples = sample_audit_inputs(&chain, 2, 100, 7)?;
    let start = std::time::Instant::now();
    let report = audit_code(&oracle, &chain, 2, 1, &samples, epsilon, budget)?;
    println!(
        "planted {:?}: modal {:?} ({:?}), agreement {:.3}, {:.1?}",
        g.generators(),
        report.modal.as_ref().map(|m| m.generators().to_vec()),
        report.modal_parity,
        report.agreeing_fraction,
        start.elapsed()
    );

    let flat = TreeApproximation::from_nodes(&[vec![], vec![0], vec![1]], 2)?;
    let control = build_construction_sequence(&flat, 2, &params)?;
    let samples = sample_audit_inputs(&control, 2, 20, 11)?;
    let start = std::time::Instant::now();
    let report = audit_code(&StationaryCode::identity(), &control, 2, 1, &samples, epsilon, budget)?;
    let coherence = audit_coherence(std::slice::from_ref(&report))?;
    println!(
        "identity control: {} of {} samples matched a reversed word, coherent across levels: {}, {:.1?}",
        report.samples.iter().filter(|r| r.best_candidate.is_some()).count(),
        report.samples.len(),
        coherence.coherent,
        start.elapsed()
    );
    Ok(())
}
