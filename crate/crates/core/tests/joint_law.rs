use dyner_core::{joint_distribution, EdgeEnsemble, ModelSpec, OnOffLaw};

fn model(on: OnOffLaw, off: OnOffLaw, n: u64) -> ModelSpec {
    ModelSpec::edges(on, off, n).unwrap()
}

fn families() -> Vec<ModelSpec> {
    vec![
        model(
            OnOffLaw::geometric(0.3).unwrap(),
            OnOffLaw::geometric(0.8).unwrap(),
            1,
        ),
        model(
            OnOffLaw::pareto(1.0, 3.0).unwrap(),
            OnOffLaw::pareto(1.0, 2.5).unwrap(),
            1,
        ),
        model(
            OnOffLaw::weibull(1.0, 0.5).unwrap(),
            OnOffLaw::geometric(0.7).unwrap(),
            1,
        ),
        model(
            OnOffLaw::pareto(2.0, 4.0).unwrap(),
            OnOffLaw::geometric(0.7).unwrap(),
            1,
        ),
        model(
            OnOffLaw::weibull(0.8, 1.7).unwrap(),
            OnOffLaw::pareto(0.5, 2.2).unwrap(),
            1,
        ),
    ]
}

#[test]
fn probabilities_sum_to_one() {
    for m in families() {
        for k in 1..=6 {
            let epochs: Vec<usize> = (1..=k).collect();
            let j = joint_distribution(&m, &epochs).unwrap();
            let total: f64 = j.probs.iter().sum();
            assert!((total - 1.0).abs() < 1e-10, "{m:?} K={k}: {total}");
            assert!(j.probs.iter().all(|&p| p >= 0.0));
        }
        let j = joint_distribution(&m, &[2, 5, 6, 9]).unwrap();
        assert!((j.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

/// `P(pattern)` for the two-state Markov chain of a geometric edge.
fn markov_prob(p: f64, q: f64, epochs: &[usize], pattern: &[bool]) -> f64 {
    let rho = q / (p + q);
    let f = 1.0 - p - q;
    // P(on at t + g | state at t)
    let step = |from: bool, to: bool, g: usize| -> f64 {
        let fg = f.powi(g as i32);
        let on = if from {
            rho + (1.0 - rho) * fg
        } else {
            rho - rho * fg
        };
        if to {
            on
        } else {
            1.0 - on
        }
    };
    let mut prob = if pattern[0] { rho } else { 1.0 - rho };
    for i in 1..epochs.len() {
        prob *= step(pattern[i - 1], pattern[i], epochs[i] - epochs[i - 1]);
    }
    prob
}

#[test]
fn geometric_matches_markov_products() {
    for &(p, q) in &[(0.3, 0.8), (0.05, 0.2), (0.9, 0.6)] {
        let m = model(
            OnOffLaw::geometric(p).unwrap(),
            OnOffLaw::geometric(q).unwrap(),
            1,
        );
        for epochs in [vec![1, 2, 3, 4, 5, 6], vec![1, 3, 4, 8], vec![3, 7]] {
            let j = joint_distribution(&m, &epochs).unwrap();
            let len = epochs.len();
            for idx in 0..1usize << len {
                let pattern: Vec<bool> = (0..len).map(|i| idx >> (len - 1 - i) & 1 == 1).collect();
                let want = markov_prob(p, q, &epochs, &pattern);
                assert!(
                    (j.probs[idx] - want).abs() < 1e-10,
                    "{p} {q} {epochs:?} {pattern:?}: {} vs {want}",
                    j.probs[idx]
                );
            }
        }
    }
}

/// Pattern frequencies over the first five epochs of many independent
/// stationary edges, against the exact joint law.
fn monte_carlo_check(m_law: (OnOffLaw, OnOffLaw), seed: u64) {
    let edges = 200_000u64;
    let epochs = 5;
    let m = model(m_law.0, m_law.1, edges);
    let mut ens = EdgeEnsemble::new(&m, seed).unwrap();
    let mut codes = vec![0usize; edges as usize];
    for t in 0..epochs {
        for (c, st) in codes.iter_mut().zip(ens.states()) {
            *c = (*c << 1) | st.on as usize;
        }
        if t + 1 < epochs {
            ens.advance();
        }
    }
    let mut counts = vec![0u64; 1 << epochs];
    for c in codes {
        counts[c] += 1;
    }
    let j = joint_distribution(&m, &[1, 2, 3, 4, 5]).unwrap();
    let total = edges as f64;
    for (idx, &c) in counts.iter().enumerate() {
        let p = j.probs[idx];
        let se = (p * (1.0 - p) / total).sqrt().max(1.0 / total);
        let freq = c as f64 / total;
        assert!(
            (freq - p).abs() <= 4.0 * se,
            "pattern {idx:05b}: freq {freq} vs {p} (se {se})"
        );
    }
}

#[test]
fn pareto_frequencies_match() {
    monte_carlo_check(
        (
            OnOffLaw::pareto(1.0, 3.0).unwrap(),
            OnOffLaw::pareto(1.0, 2.5).unwrap(),
        ),
        11,
    );
}

#[test]
fn weibull_frequencies_match() {
    monte_carlo_check(
        (
            OnOffLaw::weibull(1.0, 0.5).unwrap(),
            OnOffLaw::pareto(2.0, 4.0).unwrap(),
        ),
        12,
    );
}
