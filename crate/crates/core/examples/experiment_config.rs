//! Parse a config in memory and run it, as `projop run` does.

use projop::experiment::{parse_config, run_experiment};

fn main() -> projop::error::Result<()> {
    let dir = std::env::temp_dir().join("projop_example_run");
    let text = format!(
        "kind = project-converge\nfunction = exp:x0\ndegree = 6\nn_list = 0,2,4,6\noutput = {}\n",
        dir.display()
    );
    let cfg = parse_config(&text)?;
    let outcome = run_experiment(&cfg)?;
    for path in &outcome.files {
        println!("== {}", path.display());
        print!("{}", std::fs::read_to_string(path)?);
    }

    match parse_config("kind = ls-net\nepsilon = 0\nbogus = 1\n") {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected ({}): {e}", e.exit_code()),
    }
    Ok(())
}
