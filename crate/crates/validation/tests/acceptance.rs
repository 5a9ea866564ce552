//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

fn main() {
    let results = ricobs_validation::run_all();
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
