//! Samples random schedules and looks at where they take the state.
//!
//! For the two-control qubit the strong-controllability verdict promises
//! the whole sphere is reachable; sampling random bang-bang schedules
//! makes that concrete. Each schedule draws from its own seeded stream, so
//! the cloud is reproducible and independent of thread count.

use liereach::cases::qubit_two_controls;
use liereach::propagate::reachable_sample;

fn main() -> liereach::Result<()> {
    let sys = qubit_two_controls();
    let samples = reachable_sample(&sys, 3.0, 2000, 6, 1.5, 42)?;

    // Bloch-sphere polar coordinate of each endpoint: z = |⟨0|ψ⟩|² − |⟨1|ψ⟩|².
    let mut histogram = [0usize; 10];
    for s in &samples {
        let z = s.endpoint[0].norm_sqr() - s.endpoint[1].norm_sqr();
        let bucket = (((z + 1.0) / 2.0) * 10.0).min(9.0) as usize;
        histogram[bucket] += 1;
    }

    println!("polar coverage of {} endpoints (z from −1 to +1):", samples.len());
    for (i, count) in histogram.iter().enumerate() {
        let lo = -1.0 + 0.2 * i as f64;
        let bar = "#".repeat(count / 8);
        println!("  [{:+.1}, {:+.1}): {count:>4} {bar}", lo, lo + 0.2);
    }
    let reached_bottom = histogram[0] > 0;
    let reached_top = histogram[9] > 0;
    println!(
        "\nboth poles reached: {}",
        if reached_bottom && reached_top { "yes" } else { "no" }
    );
    Ok(())
}
