use rydemu::estimate::{memory_estimate_mps, memory_estimate_sv, recommend_backend, SV_BUDGET_KRYLOV_DIM};

fn gb(b: u64) -> f64 {
    b as f64 / 1e9
}

fn main() {
    let budget = 16_000_000_000;
    println!("{:>4} {:>12} {:>14} {:>14}  recommended", "N", "sv (GB)", "mps χ=64 (GB)", "mps χ=512 (GB)");
    for n in [10, 16, 20, 24, 26, 28, 32, 36, 40] {
        println!(
            "{n:>4} {:>12.3} {:>14.4} {:>14.3}  {}",
            gb(memory_estimate_sv(n, SV_BUDGET_KRYLOV_DIM)),
            gb(memory_estimate_mps(n, 64, SV_BUDGET_KRYLOV_DIM)),
            gb(memory_estimate_mps(n, 512, SV_BUDGET_KRYLOV_DIM)),
            recommend_backend(n, SV_BUDGET_KRYLOV_DIM, budget)
        );
    }
}
