use proptest::prelude::*;
use rand::Rng;
use vmr_eval::metrics::{axiou_at, recall_at};
use vmr_eval::rank_stats::kendall_tau_b;
use vmr_eval::seeding::rng_for;
use vmr_eval::theory::{axiou1_theory, recall1_theory, simulate_axiou1, simulate_recall1};
use vmr_eval::Error;

/// τ-b from its textbook definition: n0 pairs, n1/n2 pairs tied in x/y.
fn tau_b_brute(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut nc, mut nd, mut n1, mut n2) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = (x[i] > x[j]) as i64 - (x[i] < x[j]) as i64;
            let sy = (y[i] > y[j]) as i64 - (y[i] < y[j]) as i64;
            n1 += (sx == 0) as i64;
            n2 += (sy == 0) as i64;
            nc += (sx * sy > 0) as i64;
            nd += (sx * sy < 0) as i64;
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - n1) * (n0 - n2)) as f64;
    if denom == 0.0 {
        return None;
    }
    Some((nc - nd) as f64 / denom.sqrt())
}

#[test]
fn tau_b_matches_pair_enumeration_exactly() {
    let mut rng = rng_for(8, &[]);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=8);
        // small value alphabets force ties
        let levels = rng.gen_range(1..=4);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / 4.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / 4.0).collect();
        match (kendall_tau_b(&x, &y), tau_b_brute(&x, &y)) {
            (Ok(t), Some(b)) => assert_eq!(t.to_bits(), b.to_bits(), "{x:?} {y:?}"),
            (Err(Error::UndefinedCorrelation), None) => {}
            (got, want) => panic!("{x:?} {y:?}: {got:?} vs {want:?}"),
        }
    }
}

/// ∫₀¹ R@k,θ dθ, integrating the piecewise-constant indicator exactly over
/// the segments between distinct relevance values.
fn integrated_recall(rel: &[f64], k: usize) -> f64 {
    let mut cuts: Vec<f64> = rel.iter().copied().chain([0.0, 1.0]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            recall_at(rel, k, mid).unwrap() * (w[1] - w[0])
        })
        .sum()
}

#[test]
fn axiou_is_recall_marginalised_over_thresholds() {
    let mut rng = rng_for(2, &[]);
    for _ in 0..100 {
        let queries: Vec<Vec<f64>> = (0..rng.gen_range(1..30))
            .map(|_| {
                let len = rng.gen_range(0..14);
                (0..len)
                    .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
                    .collect()
            })
            .collect();
        for k in [1, 5, 10] {
            let nq = queries.len() as f64;
            let marginal = (1..=k)
                .map(|c| queries.iter().map(|q| integrated_recall(q, c)).sum::<f64>() / nq)
                .sum::<f64>()
                / k as f64;
            let axiou = queries.iter().map(|q| axiou_at(q, k).unwrap()).sum::<f64>() / nq;
            assert!((marginal - axiou).abs() <= 1e-12, "K={k}: {marginal} vs {axiou}");
        }
    }
}

fn bernoulli_variance_se(p: f64, n: f64) -> f64 {
    let var = p * (1.0 - p);
    let mu4 = var * (1.0 - 3.0 * var);
    ((mu4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

#[test]
fn closed_forms_agree_with_simulation() {
    let n = 200_000;
    let nf = n as f64;
    let mut seed = 0;
    for r in [0.3, 0.7] {
        for gamma in [0.05, 0.2] {
            seed += 1;
            let th = axiou1_theory(r, gamma).unwrap();
            let sim = simulate_axiou1(r, gamma, n, seed).unwrap();
            assert!((sim.bias - th.bias).abs() <= 3.0 * gamma / nf.sqrt());
            let var_se = gamma * gamma * (2.0 / (nf - 1.0)).sqrt();
            assert!((sim.variance - th.variance).abs() <= 3.0 * var_se);
            for theta in [0.3, 0.5] {
                seed += 1;
                let th = recall1_theory(r, theta, gamma).unwrap();
                let sim = simulate_recall1(r, theta, gamma, n, seed).unwrap();
                let bias_se = (th.variance / nf).sqrt();
                assert!((sim.bias - th.bias).abs() <= 3.0 * bias_se + 1e-15, "r={r} θ={theta} γ={gamma}");
                let p_hit = th.bias + if r >= theta { 1.0 } else { 0.0 };
                let var_se = bernoulli_variance_se(p_hit, nf);
                assert!((sim.variance - th.variance).abs() <= 3.0 * var_se + 1e-15);
            }
        }
    }
}

proptest! {
    #[test]
    fn tau_b_is_bounded_and_symmetric(
        pairs in prop::collection::vec((0u8..5, 0u8..5), 2..12)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        match (kendall_tau_b(&x, &y), kendall_tau_b(&y, &x)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a, b);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "definedness must be symmetric"),
        }
    }
}
