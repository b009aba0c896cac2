//! Learn T f = λ ∫ t s f(s) ds from samples with an MLP between coefficient spaces.

use std::sync::Arc;

use projop::function_space::{build_quadrature, lp_norm, PNorm, SampledFunction};
use projop::neural_op::{apply_operator, seeded_rng, train_operator, write_model, TrainConfig};
use projop::operator_zoo::{fredholm_apply, Kernel};
use projop::ortho_poly::{random_band_limited, tensor_legendre};

fn main() -> projop::error::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let q = build_quadrature(1, 16)?;
    let basis = Arc::new(tensor_legendre(1, 8, &q, PNorm::L2)?);
    let kernel = Kernel::product();

    let mut rng = seeded_rng(2024);
    let train: Vec<SampledFunction> = (0..50).map(|_| random_band_limited(&basis, &mut rng)).collect();
    let test: Vec<SampledFunction> = (0..50).map(|_| random_band_limited(&basis, &mut rng)).collect();
    let data: Vec<_> = train.iter().map(|f| (f.clone(), fredholm_apply(&kernel, 1.0, f))).collect();

    let cfg = TrainConfig { epochs, seed: 7, ..TrainConfig::default() };
    let trained = train_operator(&data, basis.clone(), 8, basis.clone(), 8, &cfg)?;
    println!(
        "loss {:.3e} -> {:.3e} after {} epochs",
        trained.report.initial_loss, trained.report.final_loss, trained.report.epochs_run
    );

    let (mut num, mut den) = (0.0, 0.0);
    for f in &test {
        let g = fredholm_apply(&kernel, 1.0, f);
        num += lp_norm(&apply_operator(&trained.operator, f)?.sub(&g)?, PNorm::L2)?.powi(2);
        den += lp_norm(&g, PNorm::L2)?.powi(2);
    }
    println!("held-out relative L2 error {:.4}", (num / den).sqrt());
    println!("model archive: {} bytes", write_model(&trained.operator, "in.txt", "out.txt").len());
    Ok(())
}
