//! Drives the experiment runner from a flat config plus overrides, the same path the
//! `wvcf` binary takes, and prints the manifest.
//!
//! Run: `cargo run --release --example cli_config`

use wvcf::cli::{parse_config, run, Experiment, Params};

const CONFIG: &str = "
# quick trade-off run
g-list = 0.2,0.5,0.8
n-list = 10,100,1000
m = 200
seed-base = 10
";

fn main() -> wvcf::Result<()> {
    let file = parse_config(CONFIG)?;
    let overrides = [("m".to_string(), "300".to_string())].into_iter().collect();
    let out = std::env::temp_dir().join("wvcf-cli-config-example");
    let manifest = run(Experiment::Tradeoff, Params::new(file, overrides), &out)?;
    println!("wrote {:?} into {}", manifest.outputs, out.display());
    println!("{}", serde_json::to_string_pretty(&manifest).map_err(wvcf::WvcfError::from)?);
    Ok(())
}
