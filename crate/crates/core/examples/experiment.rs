//! A configured experiment run, as the `dedekind-lab run` subcommand performs it.

use dedekind_lab::experiment::{cmd_run, ExperimentConfig, ReportFormat};

const CONFIG: &str = r#"
d_K = -3
T = [300.0]
X = [8.0, 16.0]
k = [1.0]
checks = ["theorem2", "constants", "moment"]
workers = 2
"#;

fn main() -> dedekind_lab::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(CONFIG)?;
    let report = cmd_run(&cfg)?;
    report.emit(ReportFormat::Csv, None)?;
    println!("all rows pass: {}", report.all_pass());
    Ok(())
}
