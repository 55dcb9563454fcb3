//! The negative binomial prior as a Gamma mixture of Poissons, by sampling.

use lrcalc_core::KPrior;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

#[test]
fn gamma_mixture_of_poissons_reproduces_pmf() {
    let (r, q) = (3.0_f64, 0.2_f64);
    let prior = KPrior::negbinomial(r, q, None).unwrap();
    let samples = 1_000_000_u64;
    let rate = Gamma::new(r, (1.0 - q) / q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut hist = [0_u64; 51];
    for _ in 0..samples {
        let lambda: f64 = rate.sample(&mut rng);
        let k = Poisson::new(lambda).unwrap().sample(&mut rng) as usize;
        if k <= 50 {
            hist[k] += 1;
        }
    }
    for (k, &count) in hist.iter().enumerate() {
        // k = 0 is outside the prior's support; its untruncated mass is q^r
        let p = if k == 0 { q.powf(r) } else { prior.log_pmf(k as u64).exp() };
        let freq = count as f64 / samples as f64;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "k={k}: {freq} vs {p} (se {se})");
    }
}
