//! Exact f̄ distances, best matches and the approximate triangle inequality.
//!
//! Run with `cargo run --release --example fbar_distance -- [a] [b]`.

use kakutani::fbar::{best_match, fbar, format_rational, match_decomposition, SymbolString};

fn main() -> kakutani::Result<()> {
    let mut args = std::env::args().skip(1);
    let a = SymbolString::from_letters(&args.next().unwrap_or_else(|| "abracadabra".into()));
    let b = SymbolString::from_letters(&args.next().unwrap_or_else(|| "cadabraabra".into()));
    let d = fbar(&a, &b)?;
    let m = best_match(&a, &b)?;
    println!("f̄ = {} with a best match of {} pairs: {:?}", format_rational(&d), m.len(), m.pairs);
    for (ra, rb) in match_decomposition(a.len(), b.len(), &m).iter().take(4) {
        println!("  piece a[{ra:?}] ↔ b[{rb:?}]");
    }

    let z = SymbolString::from_letters("abcabcabcabc");
    let x = SymbolString::from_letters("abcabcabdabc");
    let y = SymbolString::from_letters("abcacabcabc");
    let (xz, zy, xy) = (fbar(&x, &z)?, fbar(&z, &y)?, fbar(&x, &y)?);
    let bound = xz + zy + xz * zy * 8;
    println!(
        "f̄(x,y) = {} ≤ f̄(x,z) + f̄(z,y) + 8·f̄(x,z)·f̄(z,y) = {}",
        format_rational(&xy),
        format_rational(&bound)
    );
    Ok(())
}
