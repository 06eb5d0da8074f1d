//! Self-check suites behind the `verify` subcommand: incremental-gain
//! oracle equivalence, the greedy near-optimality bound, and landing
//! sampler moments. The full sizes are the acceptance workloads; the
//! small sizes are a quick smoke run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sumoss::{
    delta_gain, mi_exact, plan_baseline, sample_landing, CandidateSet, DeviationModel,
    KernelModel, PlanState, Position,
};

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    /// Worst observed figure of merit (suite-specific, see `detail`).
    pub worst: f64,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    pub fn line(&self) -> String {
        format!(
            "{}: {} ({} cases, {})",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.cases,
            self.detail
        )
    }
}

fn pos(x: f64, y: f64) -> Position {
    Position::new(x, y).unwrap()
}

fn random_positions(rng: &mut ChaCha8Rng, n: usize) -> Vec<Position> {
    (0..n).map(|_| pos(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0))).collect()
}

fn random_kernel(rng: &mut ChaCha8Rng) -> KernelModel {
    KernelModel::new(rng.random_range(0.5..3.0), 1e-9).unwrap()
}

/// Incremental gain vs exact MI difference over random instances
/// (|V| ∈ [4, 10], positions in a 5×5 m box, φ ∈ [0.5, 3]); passes when
/// the worst absolute discrepancy stays within 1e-8.
pub fn delta_vs_mi_suite(instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let model = random_kernel(&mut rng);
        let n = rng.random_range(4..=10);
        let points = random_positions(&mut rng, n);
        let a_len = rng.random_range(0..=n - 2);
        let selected = &points[..a_len];
        let others = &points[a_len + 1..];

        let delta = delta_gain(&points[a_len], selected, others, &model).unwrap();
        let with_y: Vec<usize> = (0..=a_len).collect();
        let mi_with = mi_exact(&with_y, &points, &model).unwrap();
        let mi_without = if a_len == 0 {
            0.0
        } else {
            mi_exact(&(0..a_len).collect::<Vec<_>>(), &points, &model).unwrap()
        };
        worst = worst.max((delta - (mi_with - mi_without)).abs());
    }
    SuiteReport {
        name: "delta-gain vs exact MI",
        cases: instances,
        worst,
        passed: worst <= 1e-8,
        detail: format!("worst |delta - dMI| = {worst:.3e}, tolerance 1e-8"),
    }
}

const ONE_MINUS_INV_E: f64 = 0.6321205588285577;

/// Greedy 3-of-8 chains against the exhaustive optimum over all 56
/// subsets; passes when every chain clears the (1 - 1/e) factor.
pub fn greedy_bound_suite(instances: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9135_0001);
    let area = sumoss::Area::new(pos(0.0, 0.0), 5.0, 5.0).unwrap();
    let mut worst_ratio = f64::INFINITY;
    let mut ratio_sum = 0.0;
    let mut violations = 0usize;
    for _ in 0..instances {
        let kernel = random_kernel(&mut rng);
        let v = CandidateSet::new(random_positions(&mut rng, 8), area).unwrap();

        let mut state = PlanState::new();
        for _ in 0..3 {
            let sel = plan_baseline(&state, &v, &kernel).unwrap();
            state.push(sel.index).unwrap();
        }
        let greedy = mi_exact(state.chosen(), v.positions(), &kernel).unwrap();

        let mut best = f64::NEG_INFINITY;
        for i in 0..8 {
            for j in i + 1..8 {
                for k in j + 1..8 {
                    best = best.max(mi_exact(&[i, j, k], v.positions(), &kernel).unwrap());
                }
            }
        }
        let ratio = greedy / best;
        worst_ratio = worst_ratio.min(ratio);
        ratio_sum += ratio;
        if greedy < ONE_MINUS_INV_E * best - 1e-9 {
            violations += 1;
        }
    }
    SuiteReport {
        name: "greedy vs exhaustive optimum",
        cases: instances,
        worst: worst_ratio,
        passed: violations == 0,
        detail: format!(
            "bound violations {violations}, worst ratio {worst_ratio:.4}, mean ratio {:.4} (bound {ONE_MINUS_INV_E:.4})",
            ratio_sum / instances as f64
        ),
    }
}

/// Empirical landing covariance at two meters flight distance against
/// the closed-form model; passes when every entry is within 10%
/// relative error (0.02 absolute floor).
pub fn sampler_moments_suite(draws: usize) -> SuiteReport {
    let model = DeviationModel::new(0.3, 0.2, 0.01, pos(-3.0, 2.5)).unwrap();
    let target = pos(-1.0, 2.5);
    let expected: [[f64; 2]; 2] = [[0.61, 0.01], [0.01, 0.41]];

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut dx = Vec::with_capacity(draws);
    let mut dy = Vec::with_capacity(draws);
    for _ in 0..draws {
        let landing = sample_landing(&model, &target, &mut rng).unwrap();
        dx.push(landing.x() - target.x());
        dy.push(landing.y() - target.y());
    }
    let mx = dx.iter().sum::<f64>() / draws as f64;
    let my = dy.iter().sum::<f64>() / draws as f64;
    let mut cov = [[0.0f64; 2]; 2];
    for i in 0..draws {
        cov[0][0] += (dx[i] - mx) * (dx[i] - mx);
        cov[0][1] += (dx[i] - mx) * (dy[i] - my);
        cov[1][1] += (dy[i] - my) * (dy[i] - my);
    }
    let denom = (draws - 1) as f64;
    cov[0][0] /= denom;
    cov[0][1] /= denom;
    cov[1][0] = cov[0][1];
    cov[1][1] /= denom;

    // Figure of merit: error as a fraction of the per-entry tolerance.
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let tol = f64::max(0.10 * expected[r][c].abs(), 0.02);
            worst = worst.max((cov[r][c] - expected[r][c]).abs() / tol);
        }
    }
    SuiteReport {
        name: "landing sampler moments",
        cases: draws,
        worst,
        passed: worst <= 1.0,
        detail: format!(
            "cov = [[{:.4}, {:.4}], [{:.4}, {:.4}]] vs [[0.61, 0.01], [0.01, 0.41]], worst error {:.0}% of tolerance",
            cov[0][0], cov[0][1], cov[1][0], cov[1][1], worst * 100.0
        ),
    }
}

/// Run every suite at full or reduced size.
pub fn run_all(small: bool) -> Vec<SuiteReport> {
    if small {
        vec![delta_vs_mi_suite(20), greedy_bound_suite(10), sampler_moments_suite(2000)]
    } else {
        vec![delta_vs_mi_suite(200), greedy_bound_suite(50), sampler_moments_suite(10_000)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for report in run_all(true) {
            assert!(report.passed, "{}", report.line());
        }
    }
}
