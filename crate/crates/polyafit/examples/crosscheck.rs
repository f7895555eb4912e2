//! Prints the exact bits of a fit on a synthesized dataset; used to check
//! that parallel and sequential builds produce identical results:
//!
//! ```sh
//! cargo run -p polyafit --example crosscheck > par.txt
//! cargo run -p polyafit --example crosscheck --no-default-features > seq.txt
//! diff par.txt seq.txt
//! ```

use polyafit::{
    fit_dm, synthesize, DirichletParams, FitInput, RowTotals, SolverConfig, SynthSpec,
};

fn main() {
    let spec = SynthSpec {
        alpha: DirichletParams::new(vec![3.0, 1.0, 2.0]).unwrap(),
        rows: 50_000,
        row_totals: RowTotals::Uniform { lo: 0, hi: 14 },
        seed: 20240,
    };
    let data = synthesize(&spec);
    for method in ["newton-compressed", "fp-compressed", "fp-naive", "newton-naive"] {
        let config = SolverConfig {
            method: method.parse().unwrap(),
            tol: 1e-8,
            ..Default::default()
        };
        let report = fit_dm(FitInput::Counts(&data), &config).unwrap();
        let bits: Vec<String> = report
            .alpha_hat
            .as_slice()
            .iter()
            .map(|a| format!("{:016x}", a.to_bits()))
            .collect();
        println!("{method} iters={} alpha_bits={}", report.iterations, bits.join(","));
    }
}
