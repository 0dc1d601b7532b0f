//! Closed-form quartic roots and the two-quadratic intersection built on them.
//!
//!     cargo run --example quartic_roots

use jlas::roots::{real_filter, solve_quadratic_pair, solve_quartic, QuadraticCoefficients};

fn main() -> jlas::Result<()> {
    // (x - 1)(x + 2)(x^2 + 1) = x^4 + x^3 - x^2 + x - 2
    let roots = solve_quartic(1.0, 1.0, -1.0, 1.0, -2.0)?;
    for z in &roots {
        println!("root {:+.12} {:+.12}i", z.re, z.im);
    }
    println!("real roots: {:?}", real_filter(&roots, 1e-8));

    // coefficients are a x^2 + b xy + c y^2 + d x + e y + f; unit circle against the ellipse x^2/4 + 4y^2 = 1, four crossings at (+-sqrt(0.8), +-sqrt(0.2))
    let circle = QuadraticCoefficients::new(1.0, 0.0, 1.0, 0.0, 0.0, -1.0);
    let ellipse = QuadraticCoefficients::new(0.25, 0.0, 4.0, 0.0, 0.0, -1.0);
    for pair in solve_quadratic_pair(&circle, &ellipse)? {
        println!("intersection ({:+.9}, {:+.9})", pair.x, pair.y);
    }
    Ok(())
}
