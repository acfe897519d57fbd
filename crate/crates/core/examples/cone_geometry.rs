// Closed forms for `H_p`, cone membership and the dual cone.
//
// ```bash
// cargo run --release --example cone_geometry
// ```

use minvol::geometry::{alpha_p, build_hp, hp_inv_norm1, hp_sigma_min, in_cone_cp, in_dual_cp, support_qp_cap, DualMethod, PsscLevel};
use minvol::norms::{norm_1_induced, sigma_r, Vector};

pub fn run_example() -> anyhow::Result<()> {
    println!("{:>3} {:>6} {:>8} {:>10} {:>10} {:>10}", "r", "p", "alpha", "sigma_min", "inv_norm1", "numeric");
    for r in [3, 5, 8] {
        let top = ((r - 1) as f64).sqrt();
        for p in [1.0, 0.5 * (1.0 + top), top] {
            let level = PsscLevel::new(r, p)?;
            let hp = build_hp(&level);
            let inv = hp.clone().try_inverse().expect("H_p is invertible");
            println!(
                "{r:>3} {p:>6.3} {:>8.5} {:>10.6} {:>10.6} {:>10.6}",
                alpha_p(&level),
                hp_sigma_min(&level),
                hp_inv_norm1(&level),
                norm_1_induced(&inv)?
            );
            assert!((sigma_r(&hp, r)? - hp_sigma_min(&level)).abs() < 1e-10);
        }
    }

    let level = PsscLevel::new(4, 1.5)?;
    let x = Vector::from_vec(vec![0.4, 0.3, 0.2, 0.1]);
    println!("x = {:?} in C_p: {}", x.as_slice(), in_cone_cp(&x, &level)?);
    let y = Vector::from_vec(vec![1.0, 0.2, -0.1, 0.3]);
    println!("y = {:?} in C_p*: {}", y.as_slice(), in_dual_cp(&y, &level, DualMethod::Exact)?);
    let (value, argmax) = support_qp_cap(&y, &level)?;
    println!("max of yᵀx over the cap = {value:.6} at {:?}", argmax.as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
