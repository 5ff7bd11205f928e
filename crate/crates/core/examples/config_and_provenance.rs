// Flat configuration with flag overrides, and output files carrying their
// own provenance header.

use permclass::config::{kernel_from_parts, FlatConfig};
use permclass::output::{write_atomic, Provenance};

fn main() -> permclass::Result<()> {
    let mut cfg = FlatConfig::parse("alpha = 2.0\n[kernel]\nfamily = \"exponential\"\ntau = 0.5\n")?;
    // a flag beats the file, the file beats the default
    let alpha = cfg.resolve("alpha", Some(0.75), 1.0)?;
    let tau = cfg.resolve("kernel.tau", None, 1.0)?;
    let family = cfg.resolve("kernel.family", None, "gaussian".to_string())?;
    let kernel = kernel_from_parts(&family, Some(tau), None)?;
    println!("alpha {alpha}, kernel {kernel:?}");

    let prov = Provenance::new("example", Some(42), &cfg);
    let text = prov.csv("quantity,value\nalpha,0.75\n");
    let dir = std::env::temp_dir().join("permclass-example");
    let path = dir.join("out.csv");
    write_atomic(&path, &text)?;
    print!("{}", std::fs::read_to_string(&path)?);
    println!("{}", prov.json(&serde_json::json!({ "alpha": alpha }))?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
