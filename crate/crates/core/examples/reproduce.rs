//! Regenerates the minimum variance and MDP tables and prints the diffs.

use proxport::cli::reproduce::{table4, table5};

fn main() -> proxport::Result<()> {
    for rep in [table4()?, table5()?] {
        println!("{}", rep.header.join("\t"));
        for row in &rep.rows {
            println!("{}", row.join("\t"));
        }
        print!("{}", rep.report());
    }
    Ok(())
}
