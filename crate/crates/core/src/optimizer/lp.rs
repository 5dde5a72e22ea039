use std::fmt::Write;
use std::fs;
use std::path::Path;

use super::OptimizationProblem;
use crate::error::Result;

/// Writes the timer-assignment MIQCP in CPLEX LP format.
pub fn export_miqcp(problem: &OptimizationProblem, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, miqcp_lp(problem))?;
    Ok(())
}

/// The MIQCP as CPLEX LP text.
///
/// Variables, for distinct period `i` and timer `j`:
/// `f{j}` expected interrupts of timer `j` (continuous, `1/maxT..1`),
/// `P{j}` timer period (integer, `1..maxT`), `d{i}` divisor witness
/// (integer, `1..T_i`), `m{i}_{j}` assignment and `u{j}` timer-used flags
/// (binary), and `w{i}_{j} = P{j} · m{i}_{j}` (continuous, linearised with
/// the usual big-M rows using `maxT` as the bound). The trilinear divisor
/// row then reads `d{i} · Σ_j w{i}_{j} = T_i`.
///
/// The `f·P = 1` rows are non-convex quadratic equalities; Gurobi needs
/// `NonConvex=2` to accept the model.
pub fn miqcp_lp(problem: &OptimizationProblem) -> String {
    let periods = problem.periods();
    let n = periods.len();
    let m = problem.timers();
    let max_t = problem.max_period();
    let tasks = 1..=n;
    let timers = 1..=m;
    let mut out = String::new();

    writeln!(out, "\\ Multi-timer tick assignment: minimise the expected tick-interrupt rate").unwrap();
    writeln!(out, "\\ periods: {}", periods.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "\\ timers: {m}").unwrap();
    writeln!(out, "\\ non-convex: rate rows f_j * P_j = 1 are quadratic equalities (Gurobi: NonConvex=2)").unwrap();

    writeln!(out, "Minimize").unwrap();
    let obj: Vec<String> = timers.clone().map(|j| format!("2 f{j} * u{j}")).collect();
    writeln!(out, " obj: [ {} ] / 2", obj.join(" + ")).unwrap();

    writeln!(out, "Subject To").unwrap();
    for j in timers.clone() {
        writeln!(out, " rate_{j}: [ f{j} * P{j} ] = 1").unwrap();
    }
    for i in tasks.clone() {
        let terms: Vec<String> = timers.clone().map(|j| format!("m{i}_{j}")).collect();
        writeln!(out, " assign_{i}: {} = 1", terms.join(" + ")).unwrap();
    }
    for i in tasks.clone() {
        let terms: Vec<String> = timers.clone().map(|j| format!("d{i} * w{i}_{j}")).collect();
        writeln!(out, " divisor_{i}: [ {} ] = {}", terms.join(" + "), periods[i - 1]).unwrap();
    }
    for i in tasks.clone() {
        for j in timers.clone() {
            writeln!(out, " wm_{i}_{j}: w{i}_{j} - {max_t} m{i}_{j} <= 0").unwrap();
            writeln!(out, " wp_{i}_{j}: w{i}_{j} - P{j} <= 0").unwrap();
            writeln!(out, " wlb_{i}_{j}: w{i}_{j} - P{j} - {max_t} m{i}_{j} >= -{max_t}").unwrap();
            writeln!(out, " wnn_{i}_{j}: w{i}_{j} >= 0").unwrap();
        }
    }
    for j in timers.clone() {
        for i in tasks.clone() {
            writeln!(out, " used_{i}_{j}: u{j} - m{i}_{j} >= 0").unwrap();
        }
    }
    for j in timers.clone() {
        let terms: String = tasks.clone().map(|i| format!(" - m{i}_{j}")).collect();
        writeln!(out, " unused_{j}: u{j}{terms} <= 0").unwrap();
    }

    writeln!(out, "Bounds").unwrap();
    for j in timers.clone() {
        writeln!(out, " {} <= f{j} <= 1", lp_number(1.0 / max_t as f64)).unwrap();
    }
    for j in timers.clone() {
        writeln!(out, " 1 <= P{j} <= {max_t}").unwrap();
    }
    for i in tasks.clone() {
        writeln!(out, " 1 <= d{i} <= {}", periods[i - 1]).unwrap();
    }
    for i in tasks.clone() {
        for j in timers.clone() {
            writeln!(out, " 0 <= w{i}_{j} <= {max_t}").unwrap();
        }
    }

    writeln!(out, "General").unwrap();
    let general: Vec<String> =
        timers.clone().map(|j| format!("P{j}")).chain(tasks.clone().map(|i| format!("d{i}"))).collect();
    writeln!(out, " {}", general.join(" ")).unwrap();

    writeln!(out, "Binary").unwrap();
    let binary: Vec<String> = tasks
        .clone()
        .flat_map(|i| timers.clone().map(move |j| format!("m{i}_{j}")))
        .chain(timers.clone().map(|j| format!("u{j}")))
        .collect();
    writeln!(out, " {}", binary.join(" ")).unwrap();
    writeln!(out, "End").unwrap();
    out
}

fn lp_number(value: f64) -> String {
    let s = format!("{value:.17}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}
