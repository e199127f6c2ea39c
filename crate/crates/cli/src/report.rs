//! CSV writers for convergence tables, divergence norms, and energy series.

use polymhd::analysis::{convergence_rates, ErrorReport};
use polymhd::sav::EnergyRecord;

fn sci(v: f64) -> String {
    format!("{v:.4e}")
}

fn rate_cell(r: Option<Option<f64>>) -> String {
    match r {
        Some(Some(v)) => format!("{v:.2}"),
        Some(None) => "undef".into(),
        None => "-".into(),
    }
}

/// Convergence table: one row per level, each error
/// column followed by its observed rate (`-` on the first row). Floats use
/// 5 significant digits in scientific notation, rates 2 decimals.
pub fn write_table(family: &str, reports: &[ErrorReport]) -> String {
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let cols: [(&str, Vec<f64>); 6] = [
        ("err_u_L2", reports.iter().map(|r| r.err_u_l2).collect()),
        ("err_u_H1", reports.iter().map(|r| r.err_u_h1).collect()),
        ("err_p_L2", reports.iter().map(|r| r.err_p_l2).collect()),
        ("err_b_L2", reports.iter().map(|r| r.err_b_l2).collect()),
        ("err_b_H1", reports.iter().map(|r| r.err_b_h1).collect()),
        ("err_q", reports.iter().map(|r| r.err_q).collect()),
    ];
    let rates: Vec<Vec<Option<f64>>> =
        cols.iter().map(|(_, es)| convergence_rates(es, &hs)).collect();

    let mut out = String::from("mesh,h");
    for (name, _) in &cols {
        out.push_str(&format!(",{name},rate"));
    }
    out.push('\n');
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!("{family},{}", sci(r.h)));
        for (c, (_, es)) in cols.iter().enumerate() {
            let rate = if i == 0 { None } else { Some(rates[c][i - 1]) };
            out.push_str(&format!(",{},{}", sci(es[i]), rate_cell(rate)));
        }
        out.push('\n');
    }
    out
}

/// Divergence norms per level (final-time value and the max over all steps).
pub fn write_divergence_table(family: &str, rows: &[(u32, f64, f64, f64)]) -> String {
    let mut out = String::from("mesh,level,h,div_u_final,div_u_max\n");
    for &(level, h, fin, max) in rows {
        out.push_str(&format!("{family},{level},{},{},{}\n", sci(h), sci(fin), sci(max)));
    }
    out
}

/// Per-step energy series of one run.
pub fn write_energy_csv(records: &[(usize, f64, EnergyRecord)]) -> String {
    let mut out =
        String::from("step,time,kinetic,magnetic,q_sq,diss_velocity,diss_magnetic,div_u\n");
    for (step, time, e) in records {
        out.push_str(&format!(
            "{step},{},{},{},{},{},{},{}\n",
            sci(*time),
            sci(e.kinetic),
            sci(e.magnetic),
            sci(e.q_sq),
            sci(e.diss_velocity),
            sci(e.diss_magnetic),
            sci(e.div_u)
        ));
    }
    out
}
