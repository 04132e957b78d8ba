use kfbd::findim::suite::radial_profiles;
use kfbd::scan::{sandwich_scan, PairDesign};
use serde::Serialize;

use crate::args::ScanArgs;
use crate::config::Context;
use crate::error::CliError;
use crate::output::{Format, Report};

#[derive(Debug, Serialize)]
struct Row {
    generator: String,
    pair: usize,
    mmd_sq: f64,
    value: f64,
    lower: f64,
    upper: f64,
    ok: bool,
}

pub fn run(args: &ScanArgs, ctx: &Context) -> Result<Report, CliError> {
    let generators = match args.generator.resolve()? {
        Some(g) => vec![g],
        None => radial_profiles(),
    };
    let scans = generators
        .iter()
        .map(|g| sandwich_scan(g, args.pairs, args.radius, &PairDesign::default(), ctx.seed, true))
        .collect::<kfbd::Result<Vec<_>>>()?;
    let rows: Vec<Row> = scans
        .iter()
        .flat_map(|s| {
            s.points.iter().map(|p| Row {
                generator: s.generator.clone(),
                pair: p.pair,
                mmd_sq: p.mmd_sq,
                value: p.value,
                lower: p.lower,
                upper: p.upper,
                ok: p.ok,
            })
        })
        .collect();
    let pass = scans.iter().all(|s| s.pass());
    Report::new(&scans, &rows, Format::Csv, pass)
}
