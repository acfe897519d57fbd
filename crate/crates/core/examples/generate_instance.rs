// Generate a boundary-cap instance, save it as a bundle and reload it.
//
// ```bash
// cargo run --release --example generate_instance
// ```

use minvol::instance::{generate, HMode, HOptions, InstanceSpec, NoiseMode, SigmaProfile};
use minvol::io::{load_bundle, save_bundle};
use minvol::norms::{condition_number, norm_12};

pub fn run_example() -> anyhow::Result<()> {
    let spec = InstanceSpec {
        m: 8,
        n: 40,
        r: 3,
        p: 1.2,
        eps: 1e-3,
        profile: SigmaProfile::Kappa(5.0),
        h_mode: HMode::BoundaryCap,
        h_options: HOptions { k: Some(24), dirichlet_alpha: 1.0 },
        noise_mode: NoiseMode::Ball,
        seed: 42,
    };
    let inst = generate(&spec)?;
    let meta = inst.gen_meta.h.as_ref().expect("generator metadata");
    println!("X is {}x{}, kappa(W) = {:.3}", inst.m(), inst.n(), condition_number(&inst.w_sharp)?);
    println!("noise norm_12 = {:.3e} (budget {:.1e})", norm_12(&inst.n_sharp)?, inst.eps);
    println!("boundary rows {}, certified p = {:?} via {}", meta.k_used, meta.certified_p, meta.certificate_method);

    let dir = tempfile::tempdir()?;
    save_bundle(dir.path(), &inst)?;
    let back = load_bundle(dir.path())?;
    assert_eq!(back.x, inst.x);
    println!("bundle round trip ok: {}", dir.path().display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
