//! Monte-Carlo calibration of the fringe fitter: the quoted sigma must be an
//! honest one-sigma, and 3-sigma coverage must hold at realistic count
//! levels.

use franson::analysis::fit_fringe;
use franson::montecarlo::point_rng;
use rand_distr::{Distribution, Poisson};

const TRUE_VISIBILITY: f64 = 0.85;
const BASELINE: f64 = 300.0;
const FRINGES: usize = 500;

fn noisy_fringe(seed_index: u64) -> Vec<(f64, f64)> {
    let mut rng = point_rng(0xca11b, seed_index);
    (0..16)
        .map(|i| {
            let phase = i as f64 * std::f64::consts::TAU / 16.0;
            let mean = BASELINE * (1.0 + TRUE_VISIBILITY * (phase + 0.3).cos());
            let count = Poisson::new(mean).unwrap().sample(&mut rng);
            (phase, count)
        })
        .collect()
}

#[test]
fn sigma_coverage_is_honest() {
    let mut within_one = 0usize;
    let mut within_three = 0usize;
    for index in 0..FRINGES {
        let fit = fit_fringe(&noisy_fringe(index as u64)).unwrap();
        let pull = (fit.visibility - TRUE_VISIBILITY).abs() / fit.sigma_visibility;
        if pull <= 1.0 {
            within_one += 1;
        }
        if pull <= 3.0 {
            within_three += 1;
        }
    }
    let one_sigma = within_one as f64 / FRINGES as f64;
    assert!(
        (0.63..=0.73).contains(&one_sigma),
        "one-sigma coverage {one_sigma}"
    );
    let three_sigma = within_three as f64 / FRINGES as f64;
    assert!(three_sigma >= 0.99, "three-sigma coverage {three_sigma}");
}
