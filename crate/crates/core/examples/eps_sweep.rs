// Sweep the noise level on a fixed `(W, H)` and fit the error slope.
//
// ```bash
// cargo run --release --example eps_sweep
// ```

use minvol::experiment::{cmd_report, cmd_sweep, log_space, ExperimentConfig};
use minvol::instance::HMode;

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = ExperimentConfig {
        m: 8,
        n: 50,
        r: 3,
        p: 1.0,
        eps_list: log_space(1e-5, 1e-2, 5),
        h_mode: HMode::Separable,
        kappa: 3.0,
        seed: 1,
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    let outcome = cmd_sweep(&cfg)?;
    println!("{:>10} {:>10} {:>10} {:>8}", "eps", "err_W", "env_t2", "feasible");
    for row in &outcome.report.rows {
        println!("{:>10.2e} {:>10.3e} {:>10.3e} {:>8}", row.eps, row.err_w, row.env_t2, row.feasible);
    }
    println!("{outcome}");
    println!("{}", cmd_report(dir.path())?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
