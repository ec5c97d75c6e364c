//! Fixtures shared by the benchmarks.

use jnk_core::{ModelSpec, PosteriorDrawMatrix};

const THREE_WAY_NAMES: [&str; 8] = ["(Intercept)", "x", "z", "w", "x:z", "x:w", "z:w", "x:z:w"];

/// A full three-way spec with a dense, positive definite covariance.
pub fn three_way_spec() -> ModelSpec {
    let k = THREE_WAY_NAMES.len();
    // diagonally dominant, so positive definite
    let covar = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        0.05
                    } else {
                        0.002 * ((i + j) % 3) as f64 - 0.002
                    }
                })
                .collect()
        })
        .collect();
    ModelSpec {
        coef_names: THREE_WAY_NAMES.iter().map(|s| s.to_string()).collect(),
        coefs: vec![0.1, 1.0, 0.5, -0.5, 0.05, -0.1, 0.08, 0.5],
        covar,
        var_ranges: [("x", (-3.0, 3.0)), ("z", (-3.0, 3.0)), ("w", (-3.0, 3.0))]
            .into_iter()
            .map(|(n, r)| (n.to_string(), r))
            .collect(),
        group_label: None,
    }
    .validate()
    .expect("fixture is valid")
}

/// Deterministic pseudo-draws for the seven non-intercept three-way terms.
pub fn three_way_draws(n: usize) -> PosteriorDrawMatrix {
    let names: Vec<String> = THREE_WAY_NAMES[1..].iter().map(|s| s.to_string()).collect();
    let columns = (0..names.len())
        .map(|k| {
            (0..n)
                .map(|s| 0.3 * k as f64 - 0.6 + ((s * (k + 3)) as f64 * 0.618_033_988_75).sin())
                .collect()
        })
        .collect();
    PosteriorDrawMatrix::from_columns(names, columns, 0, 1).expect("fixture is valid")
}
