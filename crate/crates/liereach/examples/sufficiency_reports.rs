//! Runs the sufficiency check on two qubits that differ by one control.
//!
//! With only an x drive, the drift-extended span C fills all three
//! directions but the ideal condition [B, C] ⊂ B fails, so the verdict is
//! `conditionFailed` — the criterion is one-sided and cannot call the
//! system uncontrollable. Adding a y drive closes B itself and the verdict
//! becomes `stronglyControllable`. The full canonical report for the
//! two-control system is printed at the end.

use liereach::cases::{qubit_boundary, qubit_two_controls};
use liereach::specfile::{canonical_json, report_to_value};
use liereach::system::{check_sufficiency, AnalysisOptions};

fn main() -> liereach::Result<()> {
    let opts = AnalysisOptions::default();

    for sys in [qubit_boundary(), qubit_two_controls()] {
        let report = check_sufficiency(&sys, &opts)?;
        let s = &report.samples[0];
        println!(
            "{:<16} verdict = {:<22} dim B = {}  dim C = {:?}  dim A = {}  residual = {:?}",
            report.system,
            report.verdict.label(),
            s.dim_b,
            s.dim_c,
            s.dim_a,
            s.ideal_residual,
        );
    }

    let report = check_sufficiency(&qubit_two_controls(), &opts)?;
    println!("\ncanonical report for the two-control qubit:");
    print!("{}", canonical_json(&report_to_value(&report)));
    Ok(())
}
