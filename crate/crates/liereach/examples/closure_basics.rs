//! Builds a bracket closure by hand and inspects what it admits.
//!
//! Starting from −iσx and −iσz, the sweep discovers −iσy as the bracket
//! word `[x, z]`, after which every further bracket stays inside the span.
//! Membership queries then certify containment (or report how far outside
//! a candidate lies).

use liereach::closure::{closure, element_from_operator, membership, ClosureOptions, Role};
use liereach::exppoly::SymbolValues;
use liereach::tdop::TDOperator;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() -> liereach::Result<()> {
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);

    let x = TDOperator::constant_matrix("x", sx);
    let z = TDOperator::constant_matrix("z", sz);

    let sym = SymbolValues::default();
    let opts = ClosureOptions::default();
    let gens = vec![
        (element_from_operator(&x, 0.0, 4, &sym, None)?, "x".to_string()),
        (element_from_operator(&z, 0.0, 4, &sym, None)?, "z".to_string()),
    ];
    let basis = closure(gens, Role::B, &opts)?;

    println!("closure of {{−iσx, −iσz}} at t = {}", basis.anchor);
    println!("  dimension: {}", basis.dim());
    for (i, word) in basis.provenance.iter().enumerate() {
        println!("  element {i}: {word}");
    }

    // −iσy must lie inside; it was discovered as a bracket.
    let y = TDOperator::constant_matrix("y", sy);
    let y_el = element_from_operator(&y, 0.0, 4, &sym, None)?;
    let m = membership(&y_el, &basis, opts.tol)?;
    println!(
        "membership of −iσy: residual {:.3e}, within = {}",
        m.residual, m.within
    );

    // A diagonal direction outside su(2) (the identity) must not.
    let id = TDOperator::constant_matrix("id", DMatrix::identity(2, 2));
    let id_el = element_from_operator(&id, 0.0, 4, &sym, None)?;
    let m = membership(&id_el, &basis, opts.tol)?;
    println!(
        "membership of the identity: residual {:.3e}, within = {}",
        m.residual, m.within
    );
    Ok(())
}
