//! Runs the paper-defaults sweep under alternative reception models and prints
//! pooled statistics for each.
//!
//! `cargo run --release -p igradeloc --example calibrate -- disk bern:0.03 decay:55 decay:70:120`
//!
//! Environment overrides: `SEGMENT` (walk segment steps), `EFG_LIMIT`
//! (fine-count limit of the self-localizing NTLs), `CELL` (cell side; the
//! range becomes `L·√5/2` unless given explicitly), `REPLICATES`.

use igradeloc::engine::run_replicates;
use igradeloc::planner::theoretical_mae;
use igradeloc::report::sweep_report;
use igradeloc::scenario::{RadioModelName, ScenarioFile, PAPER_DEFAULTS_TOML};

fn env<T: std::str::FromStr>(name: &str) -> Option<T> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn apply(file: &mut ScenarioFile, arg: &str) -> Option<()> {
    let mut parts = arg.split(':');
    let kind = parts.next()?;
    let a: Option<f64> = parts.next().and_then(|v| v.parse().ok());
    let b: Option<f64> = parts.next().and_then(|v| v.parse().ok());
    let r = &mut file.radio;
    match kind {
        "disk" => r.model = RadioModelName::IdealDisk,
        "bern" => {
            r.model = RadioModelName::BernoulliDisk;
            r.loss_prob = Some(a?);
        }
        "decay" => {
            r.model = RadioModelName::DistanceDecay;
            r.reliable_radius_m = Some(a?);
        }
        _ => return None,
    }
    if let Some(range) = if kind == "disk" { a } else { b } {
        r.range_m = range;
    }
    Some(())
}

fn main() -> igradeloc::Result<()> {
    let replicates = env("REPLICATES").unwrap_or(10);
    for arg in std::env::args().skip(1) {
        let mut file = ScenarioFile::parse(PAPER_DEFAULTS_TOML)?;
        if let Some(l) = env::<f64>("CELL") {
            file.grid.cell_side_m = l;
            file.radio.range_m = l * 5f64.sqrt() / 2.0;
        }
        if apply(&mut file, &arg).is_none() {
            eprintln!("skipping `{arg}`");
            continue;
        }
        if let Some(n) = env("SEGMENT") {
            file.mobility.segment_steps = n;
        }
        if let Some(limit) = env::<u32>("EFG_LIMIT") {
            for n in file.ntl.iter_mut().filter(|n| n.self_localize) {
                n.fine_cnt_limit = Some(limit);
            }
        }
        let s = file.to_scenario()?;
        let traces = run_replicates(&s, replicates)?;
        let rep = sweep_report(&traces, "calibrate", s.master_seed)?;
        let cells: Vec<String> = rep
            .rows
            .iter()
            .map(|r| format!("{:.1}/{:.3}", r.pooled.mae, r.pooled.within_10m()))
            .collect();
        let theory = theoretical_mae(s.grid.cell_side, s.reception.range())
            .map(|t| format!("{:+.3}", rep.rows[0].pooled.mae / t.mae_m - 1.0))
            .unwrap_or_else(|_| "n/a".into());
        println!(
            "{arg:<16} {}  ovh {:.3}  cg-vs-theory {theory}",
            cells.join("  "),
            rep.improved_vs_fg_overhead.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
