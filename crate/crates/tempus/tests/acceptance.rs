//! Runs every acceptance criterion at full scale, one line per criterion.

use tempus::suite::{run_all, Scale};

fn main() {
    let outcomes = run_all(Scale::Full, |o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "acceptance: {} of {} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
