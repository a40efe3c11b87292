use std::io::Write;

use crate::config::OutputGroup;
use crate::error::CliError;
use crate::sweep::SweepRow;

pub const KEY_COLUMNS: [&str; 5] = ["signal", "z_db", "gamma", "n", "f"];

pub fn group_columns(group: OutputGroup) -> &'static [&'static str] {
    match group {
        OutputGroup::Ps => &["ps"],
        OutputGroup::Stages => &["p_pre_prepare", "p_prepare", "p_commit", "p_reply"],
        OutputGroup::Consensus => &["p_consensus"],
        OutputGroup::Delays => &["T_s", "t1_s", "t2_s", "t_total_s"],
        OutputGroup::Sim => &["sim_p_hat", "sim_ci_low", "sim_ci_high"],
    }
}

/// Header for the given groups, always in canonical group order.
pub fn header(groups: &[OutputGroup]) -> Vec<&'static str> {
    let mut cols = KEY_COLUMNS.to_vec();
    for g in OutputGroup::ALL {
        if groups.contains(&g) {
            cols.extend_from_slice(group_columns(g));
        }
    }
    cols
}

// Shortest round-trip decimal; delays are tiny so they get exponent form.
fn plain(x: f64) -> String {
    format!("{x}")
}

fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn missing(group: OutputGroup) -> CliError {
    CliError::Config(format!("row lacks values for output group {group:?}"))
}

fn record(row: &SweepRow, groups: &[OutputGroup]) -> Result<Vec<String>, CliError> {
    let mut out = vec![
        row.signal.clone(),
        plain(row.z_db),
        plain(row.gamma),
        row.n.to_string(),
        row.f.to_string(),
    ];
    for g in OutputGroup::ALL {
        if !groups.contains(&g) {
            continue;
        }
        match g {
            OutputGroup::Ps => out.push(plain(row.ps)),
            OutputGroup::Stages => {
                let s = row.stages.as_ref().ok_or_else(|| missing(g))?;
                out.extend([s.pre_prepare, s.prepare, s.commit, s.reply].map(plain));
            }
            OutputGroup::Consensus => {
                out.push(plain(row.stages.as_ref().ok_or_else(|| missing(g))?.consensus));
            }
            OutputGroup::Delays => {
                let d = row.delays.as_ref().ok_or_else(|| missing(g))?;
                out.extend(
                    [d.symbol_duration, d.broadcast_delay, d.reply_delay, d.total_delay].map(sci),
                );
            }
            OutputGroup::Sim => {
                let s = row.sim.as_ref().ok_or_else(|| missing(g))?;
                out.extend([s.p_hat, s.ci_low, s.ci_high].map(plain));
            }
        }
    }
    Ok(out)
}

/// Writes a header line and one record per row.
pub fn emit_csv<W: Write>(rows: &[SweepRow], groups: &[OutputGroup], destination: W) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(destination);
    writer.write_record(header(groups))?;
    for row in rows {
        writer.write_record(record(row, groups)?)?;
    }
    writer.flush()?;
    Ok(())
}

/// Gnuplot script plotting every numeric column against `n`, one curve per
/// `(signal, z_db, gamma)` series.
pub fn gnuplot_script(csv_path: &str, rows: &[SweepRow], groups: &[OutputGroup]) -> String {
    let cols = header(groups);
    let mut series: Vec<(String, f64, f64)> = Vec::new();
    for r in rows {
        let key = (r.signal.clone(), r.z_db, r.gamma);
        if !series.contains(&key) {
            series.push(key);
        }
    }
    let mut script = String::new();
    script.push_str("set datafile separator ','\nset key outside right\nset xlabel 'n'\n");
    script.push_str("set terminal pngcairo size 1000,600\n");
    for (idx, name) in cols.iter().enumerate().skip(KEY_COLUMNS.len()) {
        let col = idx + 1;
        script.push_str(&format!("set output '{name}.png'\nset ylabel '{name}'\nplot \\\n"));
        let lines: Vec<String> = series
            .iter()
            .map(|(signal, z, g)| {
                format!(
                    "  '{csv_path}' using ($4):(strcol(1) eq '{signal}' && $2 == {z} && $3 == {g} ? ${col} : NaN) \
                     with linespoints title '{signal} z={z}dB gamma={g}'"
                )
            })
            .collect();
        script.push_str(&lines.join(", \\\n"));
        script.push('\n');
    }
    script
}
