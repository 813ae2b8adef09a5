use redor::analysis::{reports_to_string, run_probe};

use super::{out_dir, resolve, write_atomic, ProbeArgs};
use crate::error::{CliError, CliResult};

/// Runs the named probe family for every seed; fails with exit code 2 when
/// any report does not pass.
pub fn probe(args: ProbeArgs) -> CliResult<()> {
    let cfg = resolve(&args.common)?;
    cfg.validate()?;
    let dir = out_dir(&cfg)?;
    let mut reports = Vec::new();
    for &seed in &cfg.run.seeds {
        reports.extend(run_probe(&args.name, seed)?);
    }
    for r in &reports {
        println!(
            "{} {} [{}] statistic={:.6e} bound={:.6e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.probe,
            r.instance,
            r.statistic,
            r.bound
        );
    }
    let path = dir.join("probes.jsonl");
    write_atomic(&path, &reports_to_string(&reports))?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("wrote {} reports to {}", reports.len(), path.display());
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} of {} probe reports failed",
            reports.len()
        )));
    }
    Ok(())
}
