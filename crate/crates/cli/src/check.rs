//! Self-check of the waiting-time/binomial identity and of pmf
//! normalization.

use muxdt_core::dist::{
    binomial_pmf, geometric_binomial_identity_residual, pulsed_interarrival_pmfs,
};
use muxdt_core::DeadPulseCount;

use crate::error::CliError;
use crate::table::Table;

pub const TOLERANCE: f64 = 1e-12;
const MAX_PULSES: u64 = 10;
const MAX_DEAD_PULSES: u64 = 20;
const TAIL_TERMS: u64 = 50;

pub struct CheckReport {
    pub table: Table,
    pub failures: Vec<String>,
}

fn probabilities() -> Vec<f64> {
    let mut ps: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    ps.push(1.0);
    ps
}

pub fn dist_check(inject_fault: bool) -> Result<CheckReport, CliError> {
    let mut table = Table::new(&["check", "k", "n", "p", "residual", "status"]);
    let mut failures = Vec::new();
    let mut record = |check: &str, k: u64, n: u64, p: f64, residual: f64| {
        let pass = residual.abs() <= TOLERANCE;
        if !pass {
            failures.push(format!(
                "{check} (k={k}, N={n}, p={p}): residual {residual:e}"
            ));
        }
        table.push(vec![
            check.into(),
            k.into(),
            n.into(),
            p.into(),
            residual.into(),
            if pass { "pass" } else { "FAIL" }.into(),
        ]);
    };

    for p in probabilities() {
        for n in 1..=MAX_PULSES {
            for k in 1..=n {
                let mut r = geometric_binomial_identity_residual(k, n, p)?;
                if inject_fault && (k, n) == (1, 2) && p == 0.5 {
                    r += 1e-9;
                }
                record("identity", k, n, p, r);
            }
        }
    }

    for p in probabilities() {
        for n in 1..=MAX_PULSES {
            let total: f64 = (0..=n)
                .map(|k| binomial_pmf(k, n, p))
                .sum::<Result<f64, _>>()?;
            record("binomial_mass", 0, n, p, total - 1.0);
        }
        for nd in 1..=MAX_DEAD_PULSES {
            let pmfs = pulsed_interarrival_pmfs(p, DeadPulseCount::new(nd))?;
            let overlap: f64 = (1..=nd).map(|n| pmfs.overlap(n)).sum();
            record("overlap_mass", 0, nd, p, overlap - 1.0);
            let head: f64 = (nd + 1..=nd + TAIL_TERMS).map(|n| pmfs.next_count(n)).sum();
            let next = head + pmfs.next_count_tail(nd + TAIL_TERMS + 1);
            record("next_count_mass", 0, nd, p, next - 1.0);
        }
    }

    Ok(CheckReport { table, failures })
}
