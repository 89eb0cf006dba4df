//! CSV reports with a fixed, versioned column schema.
//!
//! Columns: `seed,D,d,m,family,alpha_orig,alpha_sketch,upper,lower,
//! bound_held,t_sketch_ns,t_solve_ns,entries_stored`.
//!
//! Column semantics by family:
//! - packing: literal.
//! - infeasible-lmi / feasible-lmi: `alpha_orig` is the oracle phase-I
//!   optimum of the original system, `alpha_sketch` the sketched one (when
//!   available), `bound_held` flags a certified infeasibility.
//! - lemma31-matrices / spike-demo: `alpha_sketch` is the max normalized
//!   trace-product deviation, `upper` the 3*epsilon threshold, `lower` the
//!   Schatten-2-normalized deviation, `bound_held` flags deviation within
//!   threshold.

use std::io::Write;

use crate::experiment::TrialRecord;

pub const CSV_SCHEMA: &str = "sdpsketch-bench-csv v1";
pub const CSV_HEADER: &str =
    "seed,D,d,m,family,alpha_orig,alpha_sketch,upper,lower,bound_held,t_sketch_ns,t_solve_ns,entries_stored";

fn fmt_opt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    match v {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> std::io::Result<()> {
    writeln!(out, "# {CSV_SCHEMA}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.dim,
            r.sketch_dim,
            r.m,
            r.family,
            fmt_opt_f64(r.alpha_orig),
            fmt_opt_f64(r.alpha_sketch),
            fmt_opt_f64(r.upper),
            fmt_opt_f64(r.lower),
            fmt_opt_bool(r.bound_held),
            r.t_sketch_ns,
            r.t_solve_ns,
            r.entries_stored
        )?;
    }
    Ok(())
}

pub fn csv_string(records: &[TrialRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ExperimentConfig, Family};

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::new(Family::Packing);
        let record = TrialRecord {
            seed: 7,
            dim: 16,
            sketch_dim: 8,
            m: cfg.m,
            family: "packing".into(),
            alpha_orig: Some(0.5),
            alpha_sketch: Some(0.625),
            upper: Some(1.0),
            lower: Some(0.25),
            bound_held: Some(true),
            t_sketch_ns: 100,
            t_solve_ns: 200,
            entries_stored: 3,
            oracle_solve_ns: None,
            packing_chain_ok: None,
            recovered_objective: None,
            hs2_max_deviation: None,
            aborted: None,
        };
        let text = csv_string(&[record]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# {CSV_SCHEMA}"));
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "7,16,8,5,packing,0.5,0.625,1,0.25,1,100,200,3"
        );
    }
}
