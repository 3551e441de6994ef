//! Fitted surrogates serialize to JSON and predict identically after loading.
//!
//! ```text
//! cargo run --release --example surrogate_persistence
//! ```

use nalgebra::{DMatrix, DVector};

use phys_adjust::physics::{forrester_crude, forrester_true, ForresterCrude};
use phys_adjust::surrogates::{fit, Dataset, FitConfig, ModelKind, ScalarPhysics, Surrogate};

fn main() -> phys_adjust::Result<()> {
    let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let ys: Vec<f64> = xs.iter().map(|&x| forrester_true(x)).collect();
    let data = Dataset::from_scalar(&xs, &ys)?;
    let q = DMatrix::from_column_slice(3, 1, &[0.0, 0.42, 1.0]);
    let fq = DVector::from_iterator(3, q.iter().map(|&x| forrester_crude(x)));
    for kind in [ModelKind::Cka, ModelKind::Rra, ModelKind::Ar1] {
        let model = fit(kind, &data, ScalarPhysics::new(&ForresterCrude, 0)?, &FitConfig::default())?;
        let json = model.to_json()?;
        let back = Surrogate::from_json(&json)?;
        let (a, b) = (model.predict(&q, &fq)?, back.predict(&q, &fq)?);
        let diff = (&a.mean - &b.mean).abs().max().max((&a.variance - &b.variance).abs().max());
        println!("{kind:<6} {:>6} bytes of JSON, max prediction difference after reload {diff:.1e}", json.len());
    }
    Ok(())
}
