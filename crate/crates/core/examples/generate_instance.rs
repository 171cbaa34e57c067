//! Draws a seeded instance, writes it to disk and reads it back.
//!
//!     cargo run --example generate_instance -- [facilities] [customers] [seed]

use eos_ssd::{generate_instance, read_instance, write_instance, CostFunction};

fn main() -> eos_ssd::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().ok());
    let n = args.next().flatten().unwrap_or(10) as usize;
    let m = args.next().flatten().unwrap_or(50) as usize;
    let seed = args.next().flatten().unwrap_or(1);

    let inst = generate_instance(n, m, seed, CostFunction::SquareRoot);
    let path = std::env::temp_dir().join(format!("eos-ssd-{n}x{m}-{seed}.json"));
    write_instance(&inst, &path)?;
    let back = read_instance(&path)?;
    assert_eq!(back, inst);

    println!("wrote {}", path.display());
    println!(
        "{} facilities, {} customers, total demand {:.2}, family {}",
        inst.n_facilities(),
        inst.n_customers(),
        inst.total_demand(),
        inst.cost_function()
    );
    for f in inst.facilities().iter().take(3) {
        println!(
            "  facility {}: f {:.1}, c {}, s {:.2}, w {:.1}",
            f.id, f.fixed_cost, f.operating_cost, f.serving_cost, f.waiting_cost
        );
    }
    Ok(())
}
