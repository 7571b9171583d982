//! Central finite differences and the analytic-vs-numeric comparison suites
//! behind the `grad-check` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::losses::{charbonnier, charbonnier_grad, l_bm, l_bm_grad, l_one_hot, l_one_hot_grad};
use crate::matching::{soft_weights, soft_weights_jacobian};

/// Central-difference gradient of `f` at `point` with step `h`.
pub fn central_diff<F>(f: F, point: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grads = Vec::with_capacity(point.len());
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + h;
        let plus = f(&probe);
        probe[i] = point[i] - h;
        let minus = f(&probe);
        probe[i] = point[i];
        grads.push((plus - minus) / (2.0 * h));
    }
    grads
}

/// Largest relative deviation between two gradient vectors. Entries where
/// both magnitudes fall below `floor` are compared against the floor instead,
/// so matching near-zero derivatives do not blow up the ratio.
pub fn max_rel_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Result of one gradient-check suite.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub name: &'static str,
    pub max_rel_err: f64,
    pub threshold: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.threshold
    }
}

/// Run every analytic-vs-finite-difference suite. All randomness is drawn
/// from `seed`, so reports are reproducible.
pub fn check_all(seed: u64) -> Vec<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;

    let mut charbonnier_err = 0.0f64;
    let eps = 1e-3;
    for _ in 0..50 {
        let a: Vec<f64> = (0..16).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..16).map(|_| rng.random()).collect();
        let grad = charbonnier_grad(&a, &b, eps).expect("equal lengths");
        let fd = central_diff(|p| charbonnier(p, &b, eps).unwrap(), &a, h);
        charbonnier_err = charbonnier_err.max(max_rel_error(&grad, &fd, 1e-12));
    }

    let mut bm_err = 0.0f64;
    for _ in 0..50 {
        let a: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        let grad = l_bm_grad(&a, &b).expect("equal lengths");
        let fd = central_diff(|p| l_bm(p, &b).unwrap(), &a, h);
        bm_err = bm_err.max(max_rel_error(&grad, &fd, 1e-12));
    }

    let mut one_hot_err = 0.0f64;
    let mut drawn = 0;
    while drawn < 50 {
        let w: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        // Stay away from the absolute-value kinks where the subgradient is
        // ambiguous and finite differences straddle the corner.
        let sum: f64 = w.iter().sum();
        let msq: f64 = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        if (sum - 1.0).abs() < 1e-2 || (msq - 1.0 / w.len() as f64).abs() < 1e-3 {
            continue;
        }
        drawn += 1;
        let grad = l_one_hot_grad(&w);
        let fd = central_diff(|p| l_one_hot(p), &w, h);
        one_hot_err = one_hot_err.max(max_rel_error(&grad, &fd, 1e-12));
    }

    let mut jac_err = 0.0f64;
    for round in 0..1000 {
        let m = 4 + (round % 5);
        let d: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        for t in [1e-2, 1e-3] {
            let jac = soft_weights_jacobian(&d, t).expect("valid temperature");
            for j in 0..m {
                let mut dp = d.clone();
                let mut dm = d.clone();
                dp[j] += h;
                dm[j] -= h;
                let wp = soft_weights(&dp, t).unwrap();
                let wm = soft_weights(&dm, t).unwrap();
                for i in 0..m {
                    let numeric = (wp[i] - wm[i]) / (2.0 * h);
                    let denom = jac[i][j].abs().max(numeric.abs()).max(1e-10);
                    jac_err = jac_err.max((jac[i][j] - numeric).abs() / denom);
                }
            }
        }
    }

    vec![
        GradCheck {
            name: "charbonnier",
            max_rel_err: charbonnier_err,
            threshold: 1e-6,
        },
        GradCheck {
            name: "l_bm",
            max_rel_err: bm_err,
            threshold: 1e-6,
        },
        GradCheck {
            name: "l_one_hot",
            max_rel_err: one_hot_err,
            threshold: 1e-6,
        },
        GradCheck {
            name: "soft_weights_jacobian",
            max_rel_err: jac_err,
            threshold: 1e-5,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_diff_on_quadratic() {
        let f = |v: &[f64]| v[0] * v[0] + 2.0 * v[0] * v[1];
        let g = central_diff(f, &[1.0, 2.0], 1e-6);
        assert!((g[0] - 6.0).abs() < 1e-8);
        assert!((g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn all_suites_pass() {
        for check in check_all(17) {
            assert!(
                check.passed(),
                "{}: {} >= {}",
                check.name,
                check.max_rel_err,
                check.threshold
            );
        }
    }
}
