use sqhard::junta::{ProductInstance, TableDist, Uniform};
use sqhard::sqharness::{testing_from_learning, tv_tables, AdversaryMode, OracleSession};
use sqhard::Arith;

fn main() -> sqhard::Result<()> {
    let q = |n, d| Arith::Exact.ratio(n, d);
    let (eps, tau) = (q(1, 20), q(1, 50));
    let u = TableDist::from_dist(&Uniform { dim: 8, arith: Arith::Exact })?;
    let d0 = TableDist::from_dist(&ProductInstance::new(8, vec![1, 3, 4, 6], q(1, 4))?)?;
    // A learner's output: within eps of the alternative.
    let learned = d0.mix(&u, &q(1, 10));
    println!("tv(D, D0) = {}, tv(D', D0) = {}", tv_tables(&u.pmf, &d0.pmf).to_repr(), tv_tables(&learned.pmf, &d0.pmf).to_repr());

    for mode in AdversaryMode::ALL {
        for (name, hidden) in [("D", &u), ("D0", &d0)] {
            let mut session = OracleSession::new(hidden, tau.clone(), mode, 0)?;
            let v = testing_from_learning(&learned.pmf, &u.pmf, std::slice::from_ref(&d0.pmf), &mut session, &eps, &tau)?;
            println!("{mode}: hidden {name:<2} -> {v:?} (answer {})", session.log()[0].answer.to_repr());
        }
    }

    let mut session = OracleSession::new(&u, tau.clone(), AdversaryMode::GridRound, 0)?;
    let near = u.mix(&d0, &q(1, 10));
    if let Err(e) = testing_from_learning(&u.pmf, &u.pmf, &[near.pmf], &mut session, &eps, &tau) {
        println!("too close to separate: {e}");
    }
    Ok(())
}
