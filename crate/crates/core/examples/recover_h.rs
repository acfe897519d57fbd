// Recover `H` by simplex-constrained least squares and compare with the bound
// `‖(H* − H#)ᵀ‖₁,₂ ≤ (‖W# − W*‖₁,₂ + 2ε) / σ_r(W#)`.
//
// ```bash
// cargo run --release --example recover_h
// ```

use minvol::eval::h_error;
use minvol::instance::{generate, HMode, HOptions, InstanceSpec, NoiseMode, SigmaProfile};
use minvol::norms::{norm_12, sigma_r, Mat};
use minvol::solver::{nearest_in_hull, recover_h, simplex_ls};

pub fn run_example() -> anyhow::Result<()> {
    let spec = InstanceSpec {
        m: 6,
        n: 50,
        r: 3,
        p: 1.1,
        eps: 1e-3,
        profile: SigmaProfile::Kappa(3.0),
        h_mode: HMode::BoundaryCap,
        h_options: HOptions { k: Some(30), dirichlet_alpha: 1.0 },
        noise_mode: NoiseMode::Sphere,
        seed: 8,
    };
    let inst = generate(&spec)?;
    let sigma = sigma_r(&inst.w_sharp, 3)?;

    // W known up to a perturbation of size delta
    for delta in [0.0, 1e-3, 1e-2] {
        let w = &inst.w_sharp + Mat::from_fn(6, 3, |i, j| delta * ((i * 3 + j) as f64).sin()) / 3f64.sqrt();
        let dw = norm_12(&(&inst.w_sharp - &w))?;
        let h = recover_h(&w, &inst.x)?;
        let err = h_error(&inst.h_sharp, &h, &[0, 1, 2])?;
        println!("‖ΔW‖₁,₂ = {dw:.2e}: err_H = {err:.3e}, bound {:.3e}", (dw + 2.0 * inst.eps) / sigma);
    }

    // the FISTA kernel and the exact active-set solver agree
    let x = inst.x.column(0).clone_owned();
    let fista = simplex_ls(&inst.w_sharp, &x, 1e-12, 10_000);
    let exact = nearest_in_hull(&inst.w_sharp, &x);
    println!("column 0: FISTA {:?}, exact {:?}", fista.as_slice(), exact.h.as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
