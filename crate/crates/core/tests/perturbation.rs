use intermap::map_core::{escape_time, TorusPoint};
use intermap::perturbation::*;
use intermap::ShearProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sigma_is_positive_for_the_sine_profile() {
    let h = ShearProfile::Sine;
    let eps: f64 = 0.05;
    let c3 = 800.0 * eps.sqrt() - 1e-9;
    let op = perturbed_operator(64, eps, c3, DEFAULT_SAMPLES, 1, &h, 1).unwrap();
    assert_eq!(op.n, 800);
    let s = doeblin_sigma(&op, 1);
    println!("sine G=64 n=800 sigma={s:.4e}");
    assert!(s > 0.0);
}

#[test]
fn sigma_is_stable_under_sample_refinement() {
    let h = ShearProfile::PeriodicSine;
    let coarse = perturbed_operator(64, DEFAULT_EPS, DEFAULT_C3, 400, 1, &h, 1).unwrap();
    let fine = perturbed_operator(64, DEFAULT_EPS, DEFAULT_C3, 1600, 1, &h, 1).unwrap();
    let (a, b) = (doeblin_sigma(&coarse, 1), doeblin_sigma(&fine, 1));
    println!("sigma 400 = {a:.4}, 1600 = {b:.4}");
    assert!(a > 0.0 && b > 0.0);
    assert!(a / b <= 2.0 && b / a <= 2.0);
}

#[test]
fn default_steps_exceed_escape_times() {
    let h = ShearProfile::PeriodicSine;
    let (delta, r) = (DEFAULT_EPS, 0.45);
    let n_eps = steps_for(DEFAULT_EPS, DEFAULT_C3);
    let (xmax, ymax) = (0.5 * r - delta, 0.25 * r * r - delta);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let total = 200;
    let mut ok = 0;
    for _ in 0..total {
        let c = TorusPoint::new(rng.random_range(-xmax..xmax), rng.random_range(-ymax..ymax));
        if escape_time(c, delta, r, &h, 100_000).unwrap() < n_eps {
            ok += 1;
        }
    }
    println!("n_eps = {n_eps}, {ok}/{total} escape earlier");
    assert!(ok as f64 >= 0.95 * total as f64);
}

#[test]
fn decay_is_dominated_for_random_densities() {
    let h = ShearProfile::PeriodicSine;
    let op = perturbed_operator(32, 0.1, DEFAULT_C3, 100, 2, &h, 1).unwrap();
    let s = doeblin_sigma(&op, 1);
    assert!(s > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let mut f0 = DensityGrid::zeros(32);
        f0.values.iter_mut().for_each(|v| *v = rng.random::<f64>());
        let f0 = f0.centered();
        let curve = l1_decay_curve(&op, &f0, 20).unwrap();
        for (n, v) in curve.iter().enumerate() {
            assert!(
                *v <= (1.0 - s).powf(n as f64 / 2.0) * curve[0] * (1.0 + 1e-9),
                "n = {n}"
            );
        }
    }
}
