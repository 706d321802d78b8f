//! Plain-text reports: fit summary, coefficient tables, WTP tables.

use std::fmt::Write;
use std::time::Duration;

use mxlogit::inference::{CoefficientTable, RandomCoefSummary, WtpComparison};
use mxlogit::{ExitStatus, Fit};

const RULE: &str = "=================================================";

fn clock(d: Duration) -> String {
    let s = d.as_secs_f64();
    let h = (s / 3600.0).floor();
    let m = ((s - h * 3600.0) / 60.0).floor();
    format!("{h}h:{m}m:{:.2}s", s - h * 3600.0 - m * 60.0)
}

fn pvalue(p: f64) -> String {
    if p.is_nan() {
        "NA".into()
    } else if p < 2.2e-16 {
        "< 2.2e-16".into()
    } else if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.6}")
    }
}

fn bound(v: f64) -> String {
    match v {
        f64::INFINITY => "Inf".into(),
        f64::NEG_INFINITY => "-Inf".into(),
        v => format!("{v:.6}"),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

pub fn coefficient_table(table: &CoefficientTable) -> String {
    let width = table.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
    let mut out = format!(
        "{:width$} {:>12} {:>12} {:>10} {:>10}\n",
        "", "Estimate", "Std. Error", "z-value", "Pr(>|z|)"
    );
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:width$} {:>12.6} {:>12.6} {:>10.4} {:>10} {}",
            r.name,
            r.estimate,
            r.std_error,
            r.z_value,
            pvalue(r.p_value),
            r.signif
        );
    }
    out.push_str("---\nSignif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n");
    out
}

pub fn run_table(fit: &Fit) -> String {
    let mut out = format!("{:>4} {:>15} {:>11} {}\n", "Run", "Log Likelihood", "Iterations", "Exit Status");
    for r in &fit.all_runs {
        let _ = writeln!(
            out,
            "{:>4} {:>15.3} {:>11} {}",
            r.run_index, r.loglik, r.iterations, r.exit_status
        );
    }
    out
}

pub fn status_codes() -> String {
    let mut out = String::from("Exit status codes:\n");
    for s in ExitStatus::ALL {
        let _ = writeln!(out, "  {:<20} {}", s.name(), s.description());
    }
    out
}

fn random_summary(rows: &[RandomCoefSummary]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
    let mut out = format!(
        "{:width$} {:>10} {:>12} {:>12} {:>12} {:>12} {:>10}\n",
        "", "Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:width$} {:>10} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>10}",
            r.name,
            bound(r.min),
            r.q1,
            r.median,
            r.mean,
            r.q3,
            bound(r.max)
        );
    }
    out
}

/// The full report printed after `fit`.
pub fn fit_summary(fit: &Fit, call: &str, random: &[RandomCoefSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{RULE}\n\nCall:\n{call}\n");

    let freq = &fit.data_summary.alternative_frequencies;
    out.push_str("Frequencies of alternatives:\n");
    let _ = writeln!(
        out,
        "{}",
        (1..=freq.len()).map(|j| format!("{j:>10}")).collect::<String>()
    );
    let _ = writeln!(out, "{}\n", freq.iter().map(|f| format!("{f:>10.6}")).collect::<String>());

    if fit.all_runs.len() > 1 {
        out.push_str("Summary Of Multistart Runs:\n");
        out.push_str(&run_table(fit));
        out.push_str("\nUse --explain-status for a description of each exit status.\n\n");
    }

    let spec = &fit.spec;
    let model_type = if fit.is_mixed() { "Mixed Logit" } else { "Multinomial Logit" };
    let rows = [
        ("Model Type:", model_type.to_string()),
        ("Model Space:", spec.space.to_string()),
        ("Model Run:", format!("{} of {}", fit.best.run_index, fit.all_runs.len())),
        ("Iterations:", fit.best.iterations.to_string()),
        ("Elapsed Time:", clock(fit.elapsed)),
        ("Algorithm:", "L-BFGS".to_string()),
        ("Weights Used?:", yes_no(spec.weighted).to_string()),
        ("Panel Model?:", yes_no(spec.panel).to_string()),
        (
            "Cluster:",
            fit.clusters
                .as_ref()
                .map_or("none".to_string(), |c| format!("{} ({} clusters)", c.level, c.n_clusters)),
        ),
        ("Robust?", yes_no(spec.robust).to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<15}{v}");
    }

    out.push_str("\nModel Coefficients:\n");
    out.push_str(&coefficient_table(&CoefficientTable::from_fit(fit)));

    let s = &fit.fit_stats;
    out.push('\n');
    for (k, v) in [
        ("Log-Likelihood:", s.loglik),
        ("Null Log-Likelihood:", s.null_loglik),
        ("AIC:", s.aic),
        ("BIC:", s.bic),
        ("McFadden R2:", s.mcfadden_r2),
        ("Adj McFadden R2:", s.adj_mcfadden_r2),
        ("Number of Observations:", s.n_obs as f64),
    ] {
        let _ = writeln!(out, "{k:<24}{v:>16.7}");
    }
    if let Some(c) = &fit.clusters {
        let _ = writeln!(out, "{:<24}{:>16.7}", "Number of Clusters", c.n_clusters as f64);
    }

    if !random.is_empty() {
        out.push_str("\nSummary of 10k Draws for Random Coefficients:\n");
        out.push_str(&random_summary(random));
    }
    for w in &fit.warnings {
        let _ = writeln!(out, "\nWarning: {w}");
    }
    out
}

pub fn comparison_table(cmp: &WtpComparison) -> String {
    let width = cmp.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:width$} {:>14} {:>14} {:>12}\n", "", "pref", "wtp", "difference");
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{:width$} {:>14.6} {:>14.6} {:>12.6}",
            r.name, r.pref, r.wtp, r.difference
        );
    }
    out
}
