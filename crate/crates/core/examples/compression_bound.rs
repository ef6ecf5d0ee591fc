//! Storage break-even for the graph-filter representation.

use gfred::codec::{compression_bound, StorageBudget};

fn main() {
    for (n, d) in [(140, 784), (160, 1024), (40, 784)] {
        print!("n = {n:>3}, D = {d:>4}:");
        for order in 0..=4 {
            print!("  L={order}: k ≤ {:<3}", compression_bound(n, d, order));
        }
        println!();
    }

    let (n, d, order) = (140, 784, 1);
    let bound = compression_bound(n, d, order);
    for k in [bound, bound + 1] {
        let b = StorageBudget::new(n, d, k, order);
        println!(
            "k = {k}: stored {} vs raw {} ({})",
            b.stored_scalars,
            b.raw_scalars,
            if b.compresses() {
                "smaller"
            } else {
                "not smaller"
            }
        );
    }
}
