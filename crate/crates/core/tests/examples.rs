//! Runs every example so they stay in sync with the library.

mod generate_instance {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/generate_instance.rs"));
}

#[test]
fn generate_instance_runs() {
    generate_instance::run_example().expect("generate_instance example should run");
}

mod certify_scattering {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/certify_scattering.rs"));
}

#[test]
fn certify_scattering_runs() {
    certify_scattering::run_example().expect("certify_scattering example should run");
}

mod cone_geometry {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/cone_geometry.rs"));
}

#[test]
fn cone_geometry_runs() {
    cone_geometry::run_example().expect("cone_geometry example should run");
}

mod noiseless_recovery {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/noiseless_recovery.rs"));
}

#[test]
fn noiseless_recovery_runs() {
    noiseless_recovery::run_example().expect("noiseless_recovery example should run");
}

mod spa_versus_minvol {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/spa_versus_minvol.rs"));
}

#[test]
fn spa_versus_minvol_runs() {
    spa_versus_minvol::run_example().expect("spa_versus_minvol example should run");
}

mod recover_h {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/recover_h.rs"));
}

#[test]
fn recover_h_runs() {
    recover_h::run_example().expect("recover_h example should run");
}

mod eps_sweep {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/eps_sweep.rs"));
}

#[test]
fn eps_sweep_runs() {
    eps_sweep::run_example().expect("eps_sweep example should run");
}
