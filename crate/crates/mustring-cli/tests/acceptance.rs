//! All twelve acceptance criteria at full size. One line per criterion.

use mustring_cli::verify::{run_all, Options};

fn main() {
    let results = run_all(&Options::default());
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
