//! Three-valued equality: exact by normal form, otherwise by seeded sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{Bindings, Expr};
use super::symbol::Symbol;

/// Outcome of an equality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The normal form of the difference is zero.
    ProvenEqual,
    /// The difference vanished numerically at every sample point.
    ProbablyEqual,
    /// Some sample point showed a clear discrepancy, or no decision was reached.
    ProvenUnequal,
}

impl Verdict {
    /// True for either of the equal verdicts.
    pub fn holds(self) -> bool {
        !matches!(self, Verdict::ProvenUnequal)
    }
}

/// Default number of sample points for the numeric fallback.
pub const DEFAULT_SAMPLES: usize = 20;
const SEED: u64 = 0x5EED_CAFE;
const AGREE: f64 = 1e-9;
const DISAGREE: f64 = 1e-6;
const MAX_SAMPLES: usize = 320;

/// Compares two expressions with the default sample count.
pub fn equal(a: &Expr, b: &Expr) -> Verdict {
    equal_with(a, b, DEFAULT_SAMPLES)
}

/// Compares two expressions; the numeric fallback starts at `samples`
/// points and doubles while residuals fall between the two thresholds.
pub fn equal_with(a: &Expr, b: &Expr, samples: usize) -> Verdict {
    let diff = (a - b).normal_form();
    if diff.is_zero() {
        return Verdict::ProvenEqual;
    }
    let mut symbols: Vec<Symbol> = a.symbols().into_iter().collect();
    symbols.extend(b.symbols());
    symbols.sort();
    symbols.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut n = samples.max(1);
    loop {
        let worst = match sample_residual(a, b, &symbols, n, &mut rng) {
            Some(w) => w,
            None => return Verdict::ProvenUnequal,
        };
        if worst < AGREE {
            return Verdict::ProbablyEqual;
        }
        if worst >= DISAGREE || n >= MAX_SAMPLES {
            return Verdict::ProvenUnequal;
        }
        n *= 2;
    }
}

/// A random rational in `[-2, 2]` on a dyadic grid, returned as a float.
pub fn sample_value<R: Rng>(rng: &mut R) -> f64 {
    f64::from(rng.gen_range(-512i32..=512)) / 256.0
}

/// Random bindings for the given symbols.
pub fn random_bindings<R: Rng>(symbols: &[Symbol], rng: &mut R) -> Bindings {
    symbols.iter().map(|s| (s.clone(), sample_value(rng))).collect()
}

fn sample_residual(a: &Expr, b: &Expr, symbols: &[Symbol], n: usize, rng: &mut ChaCha8Rng) -> Option<f64> {
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < n {
        attempts += 1;
        if attempts > 10 * n + 100 {
            return None;
        }
        let bindings = random_bindings(symbols, rng);
        let (Ok(va), Ok(vb)) = (a.eval(&bindings), b.eval(&bindings)) else { continue };
        if !va.is_finite() || !vb.is_finite() {
            continue;
        }
        let scale = 1.0f64.max(va.abs()).max(vb.abs());
        worst = worst.max((va - vb).abs() / scale);
        accepted += 1;
    }
    Some(worst)
}
