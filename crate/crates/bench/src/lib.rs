//! Shared fixtures for the criterion benchmarks.

use evotrend_core::brain::Role;
use evotrend_core::complexity::LifetimeRecording;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A lifetime of `t` steps over `n` processing neurons (plus 8 inputs),
/// driven by a few shared latent signals so columns are correlated but
/// full rank.
pub fn synthetic_recording(t: usize, n: usize, seed: u64) -> LifetimeRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = 8;
    let mut roles = vec![Role::Input; inputs];
    roles.extend(std::iter::repeat_n(Role::Processing, n));
    let loadings: Vec<[f64; 3]> = (0..roles.len())
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    let mut rec = LifetimeRecording::new(seed, 0, roles);
    let mut row = vec![0.0; rec.n_columns()];
    for _ in 0..t {
        let z: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        for (a, l) in row.iter_mut().zip(&loadings) {
            let s = l[0] * z[0] + l[1] * z[1] + l[2] * z[2] + 0.3 * rng.random::<f64>();
            *a = 1.0 / (1.0 + (-s).exp());
        }
        rec.push_row(&row);
    }
    rec.death_step = t as u64;
    rec
}
