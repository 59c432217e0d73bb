use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{PayoffKind, PayoffSpec};
use crate::paths::{sup_norm_distance, JumpPath, PricePath};

/// Outcome of an empirical regularity check.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub payoff: String,
    pub declared: Option<f64>,
    pub trials: usize,
    /// Largest observed `|G(a) - G(b)| / bound-without-L`.
    pub max_ratio: f64,
    pub pass: bool,
    /// Pair of paths attaining `max_ratio` when the check fails.
    pub witness: Option<(JumpPath, JumpPath)>,
    /// Set when the check does not apply to this payoff.
    pub skipped: Option<String>,
}

impl LipschitzReport {
    fn skipped(payoff: &PayoffSpec, trials: usize, reason: String) -> Self {
        Self {
            payoff: payoff.name(),
            declared: payoff.lipschitz(),
            trials,
            max_ratio: 0.0,
            pass: true,
            witness: None,
            skipped: Some(reason),
        }
    }
}

const HORIZON: f64 = 1.0;

fn random_times(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn random_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut levels: Vec<f64> = Vec::with_capacity(n);
    while levels.len() < n {
        let v = rng.random_range(0.2..3.0);
        if levels.last() != Some(&v) {
            levels.push(v);
        }
    }
    levels
}

fn random_jump_path(rng: &mut ChaCha8Rng) -> JumpPath {
    let n = rng.random_range(0..5);
    let times = random_times(rng, n);
    let levels = random_levels(rng, times.len() + 1);
    JumpPath::new(times, levels, HORIZON).expect("valid random path")
}

/// Perturbs every level of `a` by at most `scale`, keeping the jump times.
fn perturbed(rng: &mut ChaCha8Rng, a: &JumpPath, scale: f64) -> JumpPath {
    let mut levels: Vec<f64> = a
        .levels()
        .iter()
        .map(|v| (v + rng.random_range(-scale..scale)).max(0.05))
        .collect();
    for i in 1..levels.len() {
        if levels[i] == levels[i - 1] {
            levels[i] += 1e-3;
        }
    }
    JumpPath::new(a.jump_times().to_vec(), levels, HORIZON).expect("valid perturbed path")
}

fn probe_pairs() -> Vec<(JumpPath, JumpPath)> {
    let c = |v: f64| JumpPath::constant(v, HORIZON).unwrap();
    vec![(c(1.0), c(2.0)), (c(0.5), c(0.6)), (c(2.0), c(5.0))]
}

fn within(diff: f64, bound: f64) -> bool {
    diff <= bound * (1.0 + 1e-12) + 1e-12
}

/// Samples path pairs and checks `|G(a) - G(b)| ≤ L ‖a - b‖`.
///
/// Vanilla claims with a quadratic regularity constant are routed to
/// [`check_q_regularity`].
pub fn check_lipschitz_supnorm(payoff: &PayoffSpec, trials: usize, seed: u64) -> LipschitzReport {
    let Some(l) = payoff.lipschitz() else {
        return LipschitzReport::skipped(payoff, trials, "no Lipschitz constant declared".into());
    };
    if uses_q_regularity(payoff) {
        return check_q_regularity(payoff, trials, seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = probe_pairs();
    for i in 0..trials {
        let a = random_jump_path(&mut rng);
        let b = if i % 2 == 0 {
            random_jump_path(&mut rng)
        } else {
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            perturbed(&mut rng, &a, scale)
        };
        pairs.push((a, b));
    }
    let mut report = LipschitzReport {
        payoff: payoff.name(),
        declared: Some(l),
        trials: pairs.len(),
        max_ratio: 0.0,
        pass: true,
        witness: None,
        skipped: None,
    };
    for (a, b) in pairs {
        let diff = (payoff.evaluate(&a) - payoff.evaluate(&b)).abs();
        let dist = sup_norm_distance(&a, &b);
        let ratio = if dist > 0.0 { diff / dist } else if diff > 0.0 { f64::INFINITY } else { 0.0 };
        report.max_ratio = report.max_ratio.max(ratio);
        if !within(diff, l * dist) && report.pass {
            report.pass = false;
            report.witness = Some((a, b));
        }
    }
    report
}

fn uses_q_regularity(payoff: &PayoffSpec) -> bool {
    matches!(payoff.kind(), PayoffKind::QuadraticVanilla { .. } | PayoffKind::CustomVanilla(_))
}

/// Checks `|q(x) - q(y)| ≤ L |x - y| (1 + q(x)/x + q(y)/y)` on random
/// positive pairs.
pub fn check_q_regularity(payoff: &PayoffSpec, trials: usize, seed: u64) -> LipschitzReport {
    let (Some(l), Some(q)) = (payoff.lipschitz(), payoff.terminal_function()) else {
        return LipschitzReport::skipped(payoff, trials, "not a vanilla claim with declared constant".into());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LipschitzReport {
        payoff: payoff.name(),
        declared: Some(l),
        trials,
        max_ratio: 0.0,
        pass: true,
        witness: None,
        skipped: None,
    };
    for _ in 0..trials {
        let x: f64 = 10f64.powf(rng.random_range(-2.0..3.0));
        let y: f64 = 10f64.powf(rng.random_range(-2.0..3.0));
        let diff = (q(x) - q(y)).abs();
        let base = (x - y).abs() * (1.0 + q(x) / x + q(y) / y);
        let ratio = if base > 0.0 { diff / base } else { 0.0 };
        report.max_ratio = report.max_ratio.max(ratio);
        if !within(diff, l * base) && report.pass {
            report.pass = false;
            report.witness = Some((
                JumpPath::constant(x, HORIZON).unwrap(),
                JumpPath::constant(y, HORIZON).unwrap(),
            ));
        }
    }
    report
}

/// Samples piecewise-constant pairs with equal levels and perturbed jump
/// times and checks `|G(υ) - G(ῦ)| ≤ L ‖υ‖ Σ |Δt_k - Δt̃_k|`.
pub fn check_lipschitz_timeshift(payoff: &PayoffSpec, trials: usize, seed: u64) -> LipschitzReport {
    if !payoff.is_path_dependent() {
        return LipschitzReport::skipped(payoff, trials, "payoff is not path dependent".into());
    }
    let Some(l) = payoff.lipschitz() else {
        return LipschitzReport::skipped(payoff, trials, "no Lipschitz constant declared".into());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LipschitzReport {
        payoff: payoff.name(),
        declared: Some(l),
        trials,
        max_ratio: 0.0,
        pass: true,
        witness: None,
        skipped: None,
    };
    for _ in 0..trials {
        let n = rng.random_range(1..5);
        let (ta, tb) = loop {
            let ta = random_times(&mut rng, n);
            let tb = random_times(&mut rng, n);
            if ta.len() == n && tb.len() == n {
                break (ta, tb);
            }
        };
        let levels = random_levels(&mut rng, n + 1);
        let a = JumpPath::new(ta, levels.clone(), HORIZON).unwrap();
        let b = JumpPath::new(tb, levels, HORIZON).unwrap();
        let shift: f64 = a.gaps().iter().zip(b.gaps()).map(|(x, y)| (x - y).abs()).sum();
        let base = a.sup_norm() * shift;
        let diff = (payoff.evaluate(&a) - payoff.evaluate(&b)).abs();
        let ratio = if base > 0.0 { diff / base } else { 0.0 };
        report.max_ratio = report.max_ratio.max(ratio);
        if !within(diff, l * base) && report.pass {
            report.pass = false;
            report.witness = Some((a, b));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registered_payoffs_pass() {
        let payoffs = [
            PayoffSpec::lookback_max(),
            PayoffSpec::asian_average(),
            PayoffSpec::european_call(1.0),
            PayoffSpec::european_put(1.2),
            PayoffSpec::square(),
            PayoffSpec::truncated(PayoffSpec::lookback_max(), 1.5).unwrap(),
        ];
        for p in &payoffs {
            let r = check_lipschitz_supnorm(p, 500, 1);
            assert!(r.pass && r.skipped.is_none(), "{r:?}");
            let r = check_lipschitz_timeshift(p, 500, 2);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn understated_constant_fails_with_witness() {
        let p = PayoffSpec::lookback_max().with_lipschitz(Some(0.5));
        let r = check_lipschitz_supnorm(&p, 50, 3);
        assert!(!r.pass);
        let (a, b) = r.witness.unwrap();
        assert_eq!((a.sup_norm(), b.sup_norm()), (1.0, 2.0));
    }

    #[test]
    fn timeshift_skips_vanilla_and_lookback_is_invariant() {
        let r = check_lipschitz_timeshift(&PayoffSpec::european_call(1.0), 10, 0);
        assert!(r.skipped.is_some());
        let r = check_lipschitz_timeshift(&PayoffSpec::lookback_max(), 200, 0);
        assert_eq!(r.max_ratio, 0.0);
    }

    #[test]
    fn asian_timeshift_ratio_at_most_one() {
        let r = check_lipschitz_timeshift(&PayoffSpec::asian_average(), 1000, 9);
        assert!(r.pass && r.max_ratio <= 1.0 && r.max_ratio > 0.0);
    }
}
