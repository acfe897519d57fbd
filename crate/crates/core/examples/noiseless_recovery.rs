// Exact recovery of `W` from noiseless data by minimum-volume factorization.
//
// ```bash
// cargo run --release --example noiseless_recovery
// ```

use minvol::eval::match_permutation;
use minvol::instance::{generate, HMode, HOptions, InstanceSpec, NoiseMode, SigmaProfile};
use minvol::norms::gram_volume;
use minvol::solver::{solve_minvol, spa, SolverConfig};

pub fn run_example() -> anyhow::Result<()> {
    for (mode, p) in [(HMode::Separable, 1.0), (HMode::BoundaryCap, 1.2)] {
        let spec = InstanceSpec {
            m: 10,
            n: 60,
            r: 3,
            p,
            eps: 0.0,
            profile: SigmaProfile::Kappa(4.0),
            h_mode: mode,
            h_options: HOptions { k: Some(48), dirichlet_alpha: 1.0 },
            noise_mode: NoiseMode::Ball,
            seed: 5,
        };
        let inst = generate(&spec)?;
        let res = solve_minvol(&inst.x, 3, 1e-9, &SolverConfig::default())?;
        let (_, w_spa) = spa(&inst.x, 3)?;
        let m = match_permutation(&inst.w_sharp, &res.w_star)?.with_h(&inst.h_sharp, &res.h_star)?;
        println!(
            "{mode:?}: feasible {}, err_W {:.2e}, err_H {:.2e}, SPA err_W {:.2e}, vol(W*) {:.6} vs vol(W#) {:.6}, {} alternations",
            res.feasible,
            m.err_w,
            m.err_h.unwrap_or(f64::NAN),
            match_permutation(&inst.w_sharp, &w_spa)?.err_w,
            res.volume,
            gram_volume(&inst.w_sharp),
            res.iterations.alternations
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
