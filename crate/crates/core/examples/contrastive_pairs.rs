//! Superset split for one column, the exhaustive pair set it generates, class
//! weighting, and the contrastive loss on a few distances.
//!
//! `cargo run --example contrastive_pairs`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siamese_bci::decomposition::{generate_pairs, split_labels, subsample_pairs, CodingMatrix, PairLabel, Scheme};
use siamese_bci::siamese::contrastive_loss;

fn main() -> siamese_bci::Result<()> {
    // 10 trials per class, 4 classes.
    let labels: Vec<usize> = (1..=4).flat_map(|c| std::iter::repeat_n(c, 10)).collect();
    let matrix = CodingMatrix::build(Scheme::Ovr, 4)?;

    for column in 0..matrix.columns() {
        let split = split_labels(&labels, &matrix, column)?;
        let pairs = generate_pairs(&split)?;
        println!(
            "column {column}: |S0|={} |S1|={}  similar {} (weight {:.1}), dissimilar {} (weight {:.1})",
            split.s0.len(),
            split.s1.len(),
            pairs.count(PairLabel::Similar),
            pairs.weighted_count(PairLabel::Similar),
            pairs.count(PairLabel::Dissimilar),
            pairs.weighted_count(PairLabel::Dissimilar),
        );
    }

    let pairs = generate_pairs(&split_labels(&labels, &matrix, 0)?)?;
    let sample = subsample_pairs(&pairs, 50, &mut ChaCha8Rng::seed_from_u64(1))?;
    println!(
        "\nsubsample of 50: {} similar, {} dissimilar, weighted {:.2} / {:.2}",
        sample.count(PairLabel::Similar),
        sample.count(PairLabel::Dissimilar),
        sample.weighted_count(PairLabel::Similar),
        sample.weighted_count(PairLabel::Dissimilar)
    );

    println!("\n   d   similar (loss, grad)   dissimilar (loss, grad)   margin 0.5");
    for d in [0.0, 0.1, 0.3, 0.5, 0.7] {
        let (ls, gs) = contrastive_loss(d, PairLabel::Similar, 0.5, 1.0);
        let (ld, gd) = contrastive_loss(d, PairLabel::Dissimilar, 0.5, 1.0);
        println!("  {d:.1}   ({ls:.4}, {gs:+.4})        ({ld:.4}, {gd:+.4})");
    }
    Ok(())
}
