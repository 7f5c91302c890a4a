//! Prints two Gaussian clusters of 50 points each in [-1, 1]^2 as CSV.
//!
//! `cargo run -p levelfit --example two_clusters [seed] > clusters.csv`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let seed = std::env::args().nth(1).map_or(7, |s| s.parse().expect("seed must be an integer"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.12).unwrap();
    println!("# two clusters of 50 points, seed {seed}");
    for center in [[-0.45, -0.35], [0.45, 0.4]] {
        let mut count = 0;
        while count < 50 {
            let x = [center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)];
            if x.iter().all(|v: &f64| v.abs() <= 0.9) {
                println!("{:?},{:?}", x[0], x[1]);
                count += 1;
            }
        }
    }
}
