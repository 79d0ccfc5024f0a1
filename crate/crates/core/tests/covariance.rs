use dyner_core::asymp::GeometricTerms;
use dyner_core::{
    general_moment_cov, simulate_edge_trace, theoretical_moment, ModelSpec, Observable, OnOffLaw,
    SeriesStatus,
};

const EPOCHS: usize = 5;

/// Expectations of functions of `(A(1), …, A(5))`, by enumerating the on/off
/// paths of every edge exactly.
struct Enumeration {
    // (counts at epochs 1..=5, probability)
    outcomes: Vec<([u32; EPOCHS], f64)>,
}

impl Enumeration {
    fn new(n: usize, p: f64, q: f64) -> Self {
        let rho = q / (p + q);
        let path_prob = |code: usize| -> f64 {
            let bit = |t: usize| code >> (EPOCHS - 1 - t) & 1 == 1;
            let mut pr = if bit(0) { rho } else { 1.0 - rho };
            for t in 1..EPOCHS {
                pr *= match (bit(t - 1), bit(t)) {
                    (true, true) => 1.0 - p,
                    (true, false) => p,
                    (false, true) => q,
                    (false, false) => 1.0 - q,
                };
            }
            pr
        };
        let paths = 1usize << EPOCHS;
        let mut outcomes = Vec::with_capacity(paths.pow(n as u32));
        for joint in 0..paths.pow(n as u32) {
            let mut counts = [0u32; EPOCHS];
            let mut prob = 1.0;
            let mut rest = joint;
            for _ in 0..n {
                let code = rest % paths;
                rest /= paths;
                prob *= path_prob(code);
                for (t, c) in counts.iter_mut().enumerate() {
                    *c += (code >> (EPOCHS - 1 - t) & 1) as u32;
                }
            }
            outcomes.push((counts, prob));
        }
        Enumeration { outcomes }
    }

    /// `E g(A)` with `A[t]` the count at epoch `t + 1`.
    fn mean(&self, g: impl Fn(&[f64; EPOCHS]) -> f64) -> f64 {
        self.outcomes
            .iter()
            .map(|(c, pr)| pr * g(&c.map(|x| x as f64)))
            .sum()
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn closed_form_terms_match_enumeration() {
    for &(n, p, q) in &[(3usize, 0.3, 0.8), (4, 0.2, 0.45), (2, 0.7, 0.9)] {
        let g = GeometricTerms::new(n as u64, p, q).unwrap();
        let e = Enumeration::new(n, p, q);
        for i in 1..=4 {
            let m = e.mean(|a| a[0].powi(i as i32));
            assert!(close(g.m[i], m, 1e-10), "m{i}: {} vs {m}", g.m[i]);
        }
        for i in 1..=3 {
            let mm = e.mean(|a| a[0] * a[1].powi(i as i32));
            assert!(close(g.mm[i], mm, 1e-10), "mm{i}: {} vs {mm}", g.mm[i]);
        }
        let s1 = e.mean(|a| a[0] * a[1]);
        let t1 = e.mean(|a| (a[0] * a[1]).powi(2)) - s1 * s1;
        assert!(close(g.t1, t1, 1e-10), "t1: {} vs {t1}", g.t1);
        for k in 2..=4usize {
            let tk = e.mean(|a| a[0] * a[1] * a[k - 1] * a[k]) - s1 * s1;
            assert!(
                close(g.t(k as u32), tk, 1e-9),
                "t{k}: {} vs {tk}",
                g.t(k as u32)
            );
        }
        for k in 1..=4usize {
            let tr = e.mean(|a| a[0] * a[k - 1] * a[k]);
            assert!(
                close(g.triple(k as u32), tr, 1e-9),
                "triple {k}: {} vs {tr}",
                g.triple(k as u32)
            );
        }
        let mean = n as f64 * q / (p + q);
        for k in 2..=5usize {
            let c = e.mean(|a| a[k - 1] * a[0] * a[1]) - mean * s1;
            assert!(
                close(g.cov_ahead(k as u32), c, 1e-9),
                "cov {k}: {} vs {c}",
                g.cov_ahead(k as u32)
            );
        }
    }
}

/// `Var(√K μ̂(0))` over independent replications, for a heavy-tailed pair.
#[test]
fn general_series_matches_monte_carlo_for_pareto() {
    let m = ModelSpec::edges(
        OnOffLaw::pareto(1.0, 3.0).unwrap(),
        OnOffLaw::pareto(1.0, 2.5).unwrap(),
        10,
    )
    .unwrap();
    let g = general_moment_cov(&m, 1e-12, 100_000).unwrap();
    assert_ne!(g.status, SeriesStatus::Divergent);
    let s0 = theoretical_moment(&m, Observable::Edges, 0).unwrap();
    let k = 20_000usize;
    let reps = 400u64;
    let mut sq = 0.0;
    for r in 0..reps {
        let t = simulate_edge_trace(&m, k, 90_000 + r).unwrap();
        let mean = t.values.iter().sum::<u64>() as f64 / k as f64;
        sq += (mean - s0).powi(2) * k as f64;
    }
    let mc = sq / reps as f64;
    assert!(
        (mc - g.cov.v0).abs() <= 0.15 * g.cov.v0,
        "monte carlo {mc} vs series {}",
        g.cov.v0
    );
}
