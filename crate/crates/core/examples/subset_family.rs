use rug::Rational;
use sqhard::sqharness::{build_family, claimed_family_size, max_overlap, BuildStrategy};

fn main() -> sqhard::Result<()> {
    let c = Rational::from((1, 4));
    for (dim, m) in [(40, 4), (65, 16), (113, 25)] {
        println!(
            "M = {dim}, m = {m}: overlaps must stay <= {}, existence bound {:.2}",
            max_overlap(m, &c),
            claimed_family_size(m, &c)
        );
        for strategy in [BuildStrategy::Rejection, BuildStrategy::Greedy] {
            let b = build_family(dim, m, &c, 8, 7, strategy)?;
            println!(
                "  {strategy:?}: {} subsets after {} candidates, max overlap {}{}",
                b.family.len(),
                b.candidates,
                b.family.max_pairwise_overlap(),
                if b.complete { String::new() } else { format!(" ({})", b.diagnostic) }
            );
        }
    }
    let b = build_family(40, 4, &c, 3, 7, BuildStrategy::Rejection)?;
    for s in &b.family.subsets {
        println!("{s:?}");
    }
    Ok(())
}
