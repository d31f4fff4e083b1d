//! Central-difference check of the analytic gradients of a miniature twin
//! network through the contrastive loss.
//!
//! `cargo run --release --example gradient_check`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use siamese_bci::decomposition::PairLabel;
use siamese_bci::nn::{gradient_check, Layer, Mode, Tensor};
use siamese_bci::siamese::{Architecture, ContrastiveHead, SiameseNet};

fn main() -> siamese_bci::Result<()> {
    let margin = 2.0;
    let pairs = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut model = SiameseNet::<f64>::new(Architecture::miniature(), margin, 3)?;
    // Nonzero biases keep ReLU inputs away from the kink, where finite
    // differences are meaningless.
    for layer in &mut model.net.layers {
        if let Layer::Dense(d) = layer {
            d.bias.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(0.2..1.0));
        }
    }
    model.net.set_dropout_frozen(true);

    let side = 8;
    let data: Vec<f64> = (0..2 * pairs * side * side).map(|_| StandardNormal.sample(&mut rng)).collect();
    let input = Tensor::from_vec(&[2 * pairs, 1, side, side], data)?;

    // A distance cannot see a shift applied to both members of a pair, so an
    // embedding bias only gets a gradient from pairs that straddle its ReLU.
    // Put each unit's median row at zero to make sure such pairs exist.
    let last = model.net.layers.len() - 2;
    let mut hidden = input.clone();
    for layer in &mut model.net.layers[..=last] {
        hidden = layer.forward(hidden, Mode::Infer)?;
    }
    let units = hidden.shape()[1];
    if let Layer::Dense(d) = &mut model.net.layers[last] {
        for u in 0..units {
            let mut col: Vec<f64> = hidden.data().iter().skip(u).step_by(units).copied().collect();
            col.sort_by(f64::total_cmp);
            let mid = col.len() / 2;
            d.bias.value.data_mut()[u] -= 0.5 * (col[mid - 1] + col[mid]);
        }
    }
    // Rows 0..pairs are first members, rows pairs..2*pairs their partners.
    let targets = (0..pairs).map(|i| (if i % 2 == 0 { PairLabel::Similar } else { PairLabel::Dissimilar }, 1.0)).collect();
    let head = ContrastiveHead { targets, margin };

    for mode in [Mode::Infer, Mode::Train] {
        let report = gradient_check(&mut model.net, &input, mode, &head)?;
        println!(
            "{mode:?}: {} entries checked, max relative error {:.2e} (parameters), {:.2e} (input)",
            report.checked, report.max_rel_error, report.input_rel_error
        );
        if let Some((param, elem, fd, analytic)) = report.worst_param {
            println!("  worst: parameter {param} element {elem}, finite difference {fd:.6e} vs analytic {analytic:.6e}");
        }
    }
    Ok(())
}
