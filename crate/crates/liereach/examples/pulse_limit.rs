//! The pulse-limit construction: trading drift time for control strength.
//!
//! An idealized switching word applies controls instantaneously (the clock
//! freezes during control arcs). The physical approximant replaces each
//! idealized arc of length τ and amplitude c with the combined generator
//! (drift + n·c·control) running for τ/n, and pays the stolen clock time
//! back by shortening the final drift arc. The endpoint error decays like
//! 1/n — and vanishes entirely when drift and control commute, as in the
//! homogenized integrator, because then nothing needs to be traded.

use liereach::cases::{drift_2d, qubit_two_controls};
use liereach::steering::{pulse_limit_convergence, SwitchingWord, WordArc};

fn main() -> liereach::Result<()> {
    let word = SwitchingWord {
        arcs: vec![
            WordArc::Drift { duration: 0.4 },
            WordArc::Control {
                index: 0,
                amplitude: 1.0,
                duration: 0.5,
            },
            WordArc::Drift { duration: 0.6 },
            WordArc::Control {
                index: 0,
                amplitude: -1.0,
                duration: 0.3,
            },
            WordArc::Drift { duration: 0.9 },
        ],
    };

    println!("qubit (drift and control do not commute): error ∼ 1/n");
    let sys = qubit_two_controls();
    let pts = pulse_limit_convergence(&sys, &word, &[4, 8, 16, 32, 64, 128])?;
    let mut prev: Option<f64> = None;
    for p in &pts {
        match prev {
            Some(e) => println!(
                "  n = {:>3}: endpoint error {:.6e}  (ratio {:.3})",
                p.n,
                p.endpoint_error,
                p.endpoint_error / e
            ),
            None => println!("  n = {:>3}: endpoint error {:.6e}", p.n, p.endpoint_error),
        }
        prev = Some(p.endpoint_error);
    }

    println!("\nhomogenized integrator (commuting generators): exact at every n");
    let sys = drift_2d();
    for p in pulse_limit_convergence(&sys, &word, &[1, 10, 100])? {
        println!("  n = {:>3}: endpoint error {:.3e}", p.n, p.endpoint_error);
    }
    Ok(())
}
