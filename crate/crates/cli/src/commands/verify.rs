use super::rows::read_cert;
use super::solve::load_instance;
use anyhow::Context;
use clap::Args;
use minmax_core::verify::verify_certificate;
use std::path::PathBuf;

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub certificate: PathBuf,
}

pub fn run(args: VerifyArgs) -> anyhow::Result<u8> {
    let (instance, constraint) = load_instance(&args.instance)?;
    let cert = read_cert(&args.certificate)
        .with_context(|| format!("failed to read {}", args.certificate.display()))?;

    let (n_x, n_y) = instance.dims();
    anyhow::ensure!(
        cert.certificate.x_bar.len() == n_x && cert.certificate.y_bar.len() == n_y,
        "dimension mismatch: instance is {}x{}, certificate is {}x{}",
        n_x,
        n_y,
        cert.certificate.x_bar.len(),
        cert.certificate.y_bar.len()
    );
    anyhow::ensure!(
        cert.family == instance.family_tag(),
        "family mismatch: instance {} vs certificate {}",
        instance.family_tag(),
        cert.family
    );

    let lc = match &constraint {
        Some(dense) => Some(dense.to_linear()?),
        None => None,
    };
    let report = verify_certificate(&instance, lc.as_ref(), &cert.certificate, &cert.context)?;
    for check in &report.checks {
        println!(
            "{} {:28} measured={:.6e} bound={:.6e}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.measured,
            check.bound
        );
    }
    if report.passed() {
        println!("verification passed ({} checks)", report.checks.len());
        Ok(0)
    } else {
        println!("verification FAILED");
        Ok(2)
    }
}
