mod audit;
mod divergence;
mod fit;
mod scan;
mod table2;
mod verify;

use crate::args::Command;
use crate::config::Context;
use crate::error::CliError;
use crate::output::Report;

pub use table2::{table_rows, TableRow, TABLE_TOL};

pub fn dispatch(command: &Command, ctx: &Context) -> Result<Report, CliError> {
    match command {
        Command::Divergence(a) => divergence::run(a, ctx),
        Command::Verify(a) => verify::run(a, ctx),
        Command::Table2(a) => table2::run(a),
        Command::Fit(a) => fit::run(a, ctx),
        Command::AuditBound(a) => audit::run(a, ctx),
        Command::SandwichScan(a) => scan::run(a, ctx),
    }
}
