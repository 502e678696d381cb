//! Prints the polynomial tensors p^{k,s} for the first few orders.
use distance_jets::recursion::RecursionTable;

fn main() -> distance_jets::Result<()> {
    let k_max: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let start = std::time::Instant::now();
    let table = RecursionTable::filled_to(k_max)?;
    for ((k, s), p) in table.iter() {
        println!("p^{{{k},{s}}}  ({} terms, max order {})", p.terms.len(), p.max_order());
        if p.terms.len() <= 12 {
            println!("{p}\n");
        }
    }
    eprintln!("built in {:?}", start.elapsed());
    Ok(())
}
