//! CSV emission.
//!
//! Fixed schema, UTF-8, LF line endings:
//!
//! ```text
//! rho_db,protocol,cluster,group,user,outage_mc,stderr,outage_closed_form,sum_rate
//! ```
//!
//! `outage_mc`, `stderr` and `outage_closed_form` describe the user at
//! ordered position `user` (1 = weakest channel); `sum_rate` is the average
//! contribution `R_p · (1 − outage of transmission slot p)`. Cells without a
//! defined value stay empty.

use massive_noma::analysis::GainDistribution;
use massive_noma::simulator::{closed_form_outage, Protocol, RunResults, SystemModel};

pub const CSV_HEADER: &str =
    "rho_db,protocol,cluster,group,user,outage_mc,stderr,outage_closed_form,sum_rate";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders Monte Carlo results (with closed-form companions) as CSV.
pub fn render_csv(results: &RunResults) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &results.outage {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.rho_db,
            row.protocol.label(),
            row.cluster,
            row.group,
            row.user,
            row.outage_prob,
            row.standard_error,
            fmt_opt(row.closed_form),
            row.slot_sum_rate,
        ));
    }
    out
}

/// Renders closed-form-only rows (no Monte Carlo columns).
///
/// For perfect ordering and OMA the slot rate follows from the closed form;
/// under one-bit feedback slots and ordered users differ, so the rate cell
/// stays empty.
pub fn render_csv_analytical(model: &SystemModel) -> String {
    let cfg = &model.config;
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rho_db in &cfg.rho_db {
        let rho = 10f64.powf(rho_db / 10.0);
        for proto in &cfg.protocols {
            for k in 0..model.clusters.len() {
                for q in 0..cfg.groups_per_cluster {
                    let dist: GainDistribution =
                        model.distribution(k, q).expect("validated at build time");
                    for p in 1..=cfg.group.users() {
                        let closed = closed_form_outage(model, proto, &dist, p, rho);
                        let rate = match proto {
                            Protocol::OneBit { .. } => None,
                            _ => closed.map(|c| cfg.group.rate(p) * (1.0 - c)),
                        };
                        out.push_str(&format!(
                            "{},{},{},{},{},,,{},{}\n",
                            rho_db,
                            proto.label(),
                            k + 1,
                            q + 1,
                            p,
                            fmt_opt(closed),
                            fmt_opt(rate),
                        ));
                    }
                }
            }
        }
    }
    out
}
