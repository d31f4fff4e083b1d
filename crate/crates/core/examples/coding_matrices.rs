//! One-vs-rest and one-vs-one coding matrices, and how a vector of binary
//! votes decodes to a class.
//!
//! `cargo run --example coding_matrices`

use siamese_bci::decomposition::{CodingMatrix, Scheme};
use siamese_bci::pipeline::{decode_label, vote_from_distances, DecodeRule};

fn show(m: &CodingMatrix) {
    println!("{:?}, {} classes x {} columns (2 = not used by that column)", m.scheme(), m.classes(), m.columns());
    for (i, row) in m.rows_u8().iter().enumerate() {
        println!("  class {}: {row:?}", i + 1);
    }
}

fn main() -> siamese_bci::Result<()> {
    let ovr = CodingMatrix::build(Scheme::Ovr, 4)?;
    let ovo = CodingMatrix::build(Scheme::Ovo, 4)?;
    show(&ovr);
    show(&ovo);

    // Class 3's row, with the columns it takes no part in voting 0.
    let votes = [0, 0, 0, 0, 0, 1];
    for rule in [DecodeRule::Masked, DecodeRule::Literal] {
        let d = decode_label(&votes, &ovo, rule)?;
        println!("\nOVO votes {votes:?} with {rule:?}: class {} distances {:?} tie {}", d.label, d.distances, d.tie);
    }

    // A column votes by comparing mean distances to its two supersets.
    let to_s0 = [0.9, 0.7, 0.8];
    let to_s1 = [0.2, 0.3, 0.25];
    let vote = vote_from_distances(&to_s0, &to_s1, 0.25)?;
    println!("\ncolumn vote from distances: {vote:?}");

    let d = decode_label(&[0, 0, 0, 0], &ovr, DecodeRule::Masked)?;
    println!("OVR all-zero votes decode to class {} (tie {})", d.label, d.tie);
    Ok(())
}
