// SPA and min-vol on noisy separable data as the conditioning of `W` grows.
//
// ```bash
// cargo run --release --example spa_versus_minvol
// ```

use minvol::eval::match_permutation;
use minvol::instance::{generate, HMode, HOptions, InstanceSpec, NoiseMode, SigmaProfile};
use minvol::solver::{solve_minvol, spa, SolverConfig};

pub fn run_example() -> anyhow::Result<()> {
    println!("{:>6} {:>10} {:>12} {:>12}", "kappa", "eps", "SPA err_W", "minvol err_W");
    for kappa in [2.0, 10.0, 50.0] {
        let eps = 1e-3 / kappa;
        let spec = InstanceSpec {
            m: 10,
            n: 80,
            r: 3,
            p: 1.0,
            eps,
            profile: SigmaProfile::Kappa(kappa),
            h_mode: HMode::Separable,
            h_options: HOptions::default(),
            noise_mode: NoiseMode::Ball,
            seed: 11,
        };
        let inst = generate(&spec)?;
        let (_, w_spa) = spa(&inst.x, 3)?;
        let res = solve_minvol(&inst.x, 3, eps, &SolverConfig::default())?;
        println!(
            "{kappa:>6} {eps:>10.1e} {:>12.3e} {:>12.3e}",
            match_permutation(&inst.w_sharp, &w_spa)?.err_w,
            match_permutation(&inst.w_sharp, &res.w_star)?.err_w
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
