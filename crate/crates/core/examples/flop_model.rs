//! Flop counts for one closed-form solve against n Gauss-Newton iterations.
//!
//!     cargo run --example flop_model

use jlas::analysis::{flops_cfjlas, flops_iterative, flops_per_iteration};

fn main() {
    for (k, m) in [(2, 8), (2, 12), (3, 9), (3, 16)] {
        let d = flops_cfjlas(k, m);
        let l = flops_per_iteration(k, m);
        let breakeven = d.div_ceil(l);
        println!(
            "K={k} M={m:>2}: closed form {d:>6}, per iteration {l:>5}, 3 iterations {:>6}, break-even at {breakeven} iteration(s)",
            flops_iterative(k, m, 3)
        );
    }
}
