// Certify the scattering level of different `H` matrices (r = 3).
//
// ```bash
// cargo run --release --example certify_scattering
// ```

use minvol::certify::{certify_pssc_exact, check_hp_necessary, detect_separable, estimate_max_p, falsify_pssc_sampled, EstimateMode, NECESSARY_TOL};
use minvol::geometry::{build_hp, PsscLevel};
use minvol::instance::{gen_h_with, HMode, HOptions};

pub fn run_example() -> anyhow::Result<()> {
    let level = PsscLevel::new(3, 1.2)?;

    let sep = gen_h_with(30, &PsscLevel::new(3, 1.0)?, HMode::Separable, &HOptions::default(), 1)?;
    println!("separable rows at {:?}", detect_separable(&sep.h, 1e-12)?);
    println!("separable, exact at p=1.2: {:?}", certify_pssc_exact(&sep.h, &level)?.verdict);

    // the H_p columns alone pass the necessary test but not the exact one
    let hp = build_hp(&level).transpose();
    println!("H_p rows, necessary: {:?}", check_hp_necessary(&hp, &level, NECESSARY_TOL)?.verdict);
    let exact = certify_pssc_exact(&hp, &level)?;
    println!("H_p rows, exact: {:?}, witness {:?}", exact.verdict, exact.witness);
    println!("H_p rows, sampled: {:?}", falsify_pssc_sampled(&hp, &level, 20_000, 7)?.verdict);

    let cap = gen_h_with(60, &level, HMode::BoundaryCap, &HOptions { k: Some(32), dirichlet_alpha: 1.0 }, 3)?;
    let p_hat = estimate_max_p(&cap.h, EstimateMode::Exact, 1e-9)?;
    println!("32-point boundary cap at p=1.2: largest certified p = {p_hat:.6}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
