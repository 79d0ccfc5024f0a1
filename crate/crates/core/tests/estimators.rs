use dyner_core::{
    empirical_moments, estimate, estimate_from_subgraph, simulate_edge_trace, theoretical_moment,
    Family, ModelSpec, MomentSet, Observable, OnOffLaw,
};
use proptest::prelude::*;

fn exact(model: &ModelSpec, kind: Observable, lags: usize) -> MomentSet {
    MomentSet {
        values: (0..lags)
            .map(|l| theoretical_moment(model, kind, l).unwrap())
            .collect(),
        n: model.n(),
        vertices: model.vertices(),
        k: 1 << 20,
        kind,
    }
}

fn round_trip(family: Family, params: &[f64], n: u64, tol: f64) -> Result<(), TestCaseError> {
    let (on, off) = family.laws(params).unwrap();
    let m = ModelSpec::edges(on, off, n).unwrap();
    let r = estimate(
        &exact(&m, Observable::Edges, family.moments_needed()),
        family,
    )
    .unwrap();
    for (got, want) in r.params.values().iter().zip(params) {
        prop_assert!(
            (got - want).abs() <= tol * want.abs().max(1.0),
            "{family:?} {params:?}: {got} vs {want}"
        );
    }
    prop_assert!(r.flags.is_empty(), "{:?}", r.flags);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_round_trip(p in 0.02f64..0.98, q in 0.02f64..0.98, n in 1u64..1000) {
        round_trip(Family::GeoGeo, &[p, q], n, 1e-9)?;
    }

    #[test]
    fn pareto_round_trip(a in 1.6f64..6.0, b in 1.6f64..6.0, n in 2u64..500) {
        round_trip(Family::ParPar, &[a, b], n, 1e-7)?;
    }

    #[test]
    fn weibull_round_trip(a in 0.2f64..2.0, q in 0.05f64..0.95, n in 2u64..500) {
        round_trip(Family::WeibullGeo, &[a, q], n, 1e-7)?;
    }

    #[test]
    fn pareto_geo_round_trip(c in 0.5f64..5.0, a in 2.2f64..6.0, q in 0.1f64..0.9) {
        round_trip(Family::ParetoGeo, &[c, a, q], 100, 1e-6)?;
    }

    #[test]
    fn subgraph_round_trip(p in 0.05f64..0.95, q in 0.05f64..0.95, v in 4u64..30, tri in any::<bool>()) {
        let m = ModelSpec::graph(OnOffLaw::geometric(p).unwrap(), OnOffLaw::geometric(q).unwrap(), v).unwrap();
        let kind = if tri { Observable::Triangles } else { Observable::Wedges };
        let r = estimate_from_subgraph(&exact(&m, kind, 2)).unwrap();
        prop_assert!((r.params.get("p").unwrap() - p).abs() < 1e-8);
        prop_assert!((r.params.get("q").unwrap() - q).abs() < 1e-8);
    }
}

#[test]
fn lag_one_moment_of_a_long_trace() {
    let m = ModelSpec::edges(
        OnOffLaw::geometric(0.3).unwrap(),
        OnOffLaw::geometric(0.8).unwrap(),
        100,
    )
    .unwrap();
    let t = simulate_edge_trace(&m, 100_000, 2024).unwrap();
    let mom = empirical_moments(&t, 2).unwrap();
    assert!((mom.values[0] - 72.73).abs() < 0.05, "{:?}", mom.values);
    assert!((mom.values[1] - 5287.3).abs() < 8.0, "{:?}", mom.values);
}

/// Mean absolute error of p̂ over replications shrinks like K^{-1/2}.
#[test]
fn plug_in_consistency_rate() {
    let m = ModelSpec::edges(
        OnOffLaw::geometric(0.3).unwrap(),
        OnOffLaw::geometric(0.8).unwrap(),
        20,
    )
    .unwrap();
    let ks = [1_000usize, 10_000, 100_000];
    let mut errs = Vec::new();
    for &k in &ks {
        let mut total = 0.0;
        for rep in 0..50u64 {
            let t = simulate_edge_trace(&m, k, 7_000 + rep).unwrap();
            let r = estimate(&empirical_moments(&t, 2).unwrap(), Family::GeoGeo).unwrap();
            total += (r.params.get("p").unwrap() - 0.3).abs();
        }
        errs.push(total / 50.0);
    }
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(
        (-0.65..=-0.35).contains(&slope),
        "slope {slope}, errors {errs:?}"
    );
}
