//! Round-trips a system through its JSON file form.
//!
//! Every bundled case can be exported to the file schema, re-read, and
//! analyzed; the canonical writer sorts keys and fixes the float format,
//! so writing what was read reproduces the file byte for byte. This is
//! what makes reports diffable and cacheable.

use liereach::cases::parametric_oscillator;
use liereach::specfile::{canonical_json, load_spec, spec_to_value};
use liereach::system::{check_sufficiency, AnalysisOptions};

fn main() -> liereach::Result<()> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("oscillator.json");

    // Export the bundled oscillator to a spec file.
    let sys = parametric_oscillator(1.0)?;
    let value = spec_to_value(&sys)?;
    std::fs::write(&path, canonical_json(&value)).expect("writable temp file");
    println!("wrote {} bytes to {}", canonical_json(&value).len(), path.display());

    // Read it back and analyze: identical outcome to the in-memory system.
    let loaded = load_spec(&path)?;
    let report = check_sufficiency(&loaded, &AnalysisOptions::default())?;
    println!(
        "reloaded `{}`: verdict = {}, verification = {}",
        loaded.name,
        report.verdict.label(),
        report.verification_mode.label()
    );

    // Canonicalization is idempotent: write(read(file)) == file.
    let second = canonical_json(&spec_to_value(&loaded)?);
    let first = std::fs::read_to_string(&path).expect("readable temp file");
    println!(
        "byte-identical after a round trip: {}",
        if first == second { "yes" } else { "no" }
    );
    Ok(())
}
