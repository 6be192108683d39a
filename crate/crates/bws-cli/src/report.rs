//! Deterministic report serialization: JSON sweep reports and CSV tables.
//! Key order is fixed and floating values carry 17 significant digits, so
//! identical runs produce byte-identical files.

use bws_core::theory::{RegimeReport, ToySweepRow};
use bws_core::windows::WindowSpec;
use bws_core::SweepReport;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn spec_start_fields(spec: &WindowSpec) -> (usize, Option<usize>) {
    match *spec {
        WindowSpec::Contiguous { start, .. } => (start, None),
        WindowSpec::TwoHalf { start1, start2, .. } => (start1, Some(start2)),
        WindowSpec::WiderRandom { start, .. } => (start, None),
        WindowSpec::PerClass { s, .. } => ((s * 1e9).round() as usize, None),
    }
}

/// JSON text for a sweep report: fixed key order
/// {params, candidates: [{start, m, score}], winner_start, winner_score,
/// eval_mode, proxy}.
pub fn serialize_report(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!(
        "  \"params\": {{\"m\": {}, \"step\": {}, \"lambda\": {}}},\n",
        report.m,
        report.step,
        fmt_f64(report.lambda)
    ));
    out.push_str("  \"candidates\": [\n");
    for (i, c) in report.candidates.iter().enumerate() {
        let (start, start2) = spec_start_fields(&c.spec);
        let sep = if i + 1 == report.candidates.len() { "" } else { "," };
        match start2 {
            Some(s2) => out.push_str(&format!(
                "    {{\"start\": {start}, \"start2\": {s2}, \"m\": {}, \"score\": {}}}{sep}\n",
                c.spec.m(),
                fmt_f64(c.score)
            )),
            None => out.push_str(&format!(
                "    {{\"start\": {start}, \"m\": {}, \"score\": {}}}{sep}\n",
                c.spec.m(),
                fmt_f64(c.score)
            )),
        }
    }
    out.push_str("  ],\n");
    let winner = report.winner_candidate();
    let (wstart, _) = spec_start_fields(&winner.spec);
    out.push_str(&format!("  \"winner_start\": {wstart},\n"));
    out.push_str(&format!("  \"winner_score\": {},\n", fmt_f64(winner.score)));
    out.push_str(&format!("  \"eval_mode\": \"{}\",\n", report.eval_mode.as_str()));
    out.push_str(&format!("  \"proxy\": \"{}\"\n", report.proxy_kind.as_str()));
    out.push_str("}\n");
    out
}

/// CSV table of the sweep candidates: header row, '\n' line endings.
pub fn sweep_csv(report: &SweepReport) -> String {
    let two_half = report
        .candidates
        .iter()
        .any(|c| matches!(c.spec, WindowSpec::TwoHalf { .. }));
    let mut out = String::new();
    if two_half {
        out.push_str("start,start2,m,score\n");
    } else {
        out.push_str("start,m,score\n");
    }
    for c in &report.candidates {
        let (start, start2) = spec_start_fields(&c.spec);
        match start2 {
            Some(s2) => out.push_str(&format!(
                "{start},{s2},{},{}\n",
                c.spec.m(),
                fmt_f64(c.score)
            )),
            None => out.push_str(&format!("{start},{},{}\n", c.spec.m(), fmt_f64(c.score))),
        }
    }
    out
}

/// CSV table for the toy sweep: (start, mean_cosine, std, resample_count).
pub fn toy_csv(rows: &[ToySweepRow]) -> String {
    let mut out = String::from("start,mean_cosine,std,resample_count\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.start,
            fmt_f64(r.mean_cosine),
            fmt_f64(r.std_cosine),
            r.resample_count
        ));
    }
    out
}

/// One-line CSV for a regime verification report.
pub fn regime_csv(r: &RegimeReport) -> String {
    let regime = match r.regime {
        bws_core::theory::Regime::Deficient => "deficient",
        bws_core::theory::Regime::Sufficient => "sufficient",
    };
    let mut out = String::from("regime,lhs,bound,pass_fraction,pass,trials,seed\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        regime,
        fmt_f64(r.lhs),
        fmt_f64(r.bound),
        fmt_f64(r.pass_fraction),
        r.pass,
        r.trials,
        r.seed
    ));
    out
}
