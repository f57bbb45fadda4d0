//! Runs a reduced `all` pipeline from an inline TOML config and writes the
//! artifacts to the directory given as the first argument.

use hypwave::experiment::{run, ExperimentConfig, Subcommand};

const CONFIG: &str = r#"
seed = 3

[propagate]
times = [6.0, 8.0]
mass_order = 6
mass_times = [8.0]

[local-limit]
t = 8.0
h = [1e-3]

[rwm-sample]
n_waves = 512
n_samples = 20000

[equidist]
t = 8.0

[independence]
t = 8.0
"#;

fn main() -> hypwave::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out-example".into());
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let artifact = run(&cfg, Subcommand::All)?;
    artifact.write(std::path::Path::new(&out))?;
    for r in &artifact.reports {
        let (s, t) = r.primary_values();
        println!("{:<28} {:<12} {:?} / {:?}", r.name, r.verdict.as_str(), s, t);
    }
    for w in &artifact.manifest.warnings {
        println!("warning: {w}");
    }
    println!("wrote {} files to {out}", artifact.files.len());
    Ok(())
}
