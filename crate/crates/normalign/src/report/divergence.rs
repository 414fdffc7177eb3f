//! Plain-text summary of (feature, model) pairs where Pearson and Spearman
//! disagree enough to need a second look.

use std::fmt::Write;

use crate::metrics::AlignmentResult;

/// Features whose rating distributions pile up at the scale floor; flagged
/// pairs on these get grouped under a skew note.
pub const SKEW_PRONE_FEATURES: [&str; 2] = ["gustatory", "olfactory"];

fn fmt_coeff(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.3}"),
        None => "undefined".to_string(),
    }
}

fn fmt_delta(a: Option<f64>, b: Option<f64>) -> String {
    match (a, b) {
        (Some(a), Some(b)) => format!("{:.3}", a - b),
        _ => "n/a".to_string(),
    }
}

/// Lists every divergence-flagged pair with its Pearson-Spearman gap and the
/// raw-to-rounded deltas of both coefficients. Skew-prone features get their
/// own section.
pub fn divergence_report(results: &[AlignmentResult]) -> String {
    let mut flagged: Vec<&AlignmentResult> =
        results.iter().filter(|r| r.divergence_flag).collect();
    flagged.sort_by(|a, b| (&a.feature, &a.model).cmp(&(&b.feature, &b.model)));

    let mut out = String::from("Divergence report: Pearson vs Spearman\n");
    out.push_str("=======================================\n\n");

    if flagged.is_empty() {
        out.push_str("No divergences: Pearson and Spearman agree within the threshold for every (feature, model) pair.\n");
        return out;
    }

    let (skewed, regular): (Vec<_>, Vec<_>) = flagged
        .iter()
        .partition(|r| SKEW_PRONE_FEATURES.contains(&r.feature.as_str()));

    let write_entry = |out: &mut String, r: &AlignmentResult| {
        writeln!(
            out,
            "- {} / {}: pearson {} vs spearman {} (delta {}); raw-rounded deltas: pearson {}, spearman {}",
            r.feature,
            r.model,
            fmt_coeff(r.pearson_raw),
            fmt_coeff(r.spearman_raw),
            fmt_delta(r.pearson_raw, r.spearman_raw),
            fmt_delta(r.pearson_raw, r.pearson_rounded),
            fmt_delta(r.spearman_raw, r.spearman_rounded),
        )
        .unwrap();
    };

    writeln!(out, "Flagged pairs: {}\n", flagged.len()).unwrap();
    if !regular.is_empty() {
        for r in &regular {
            write_entry(&mut out, r);
        }
        out.push('\n');
    }
    if !skewed.is_empty() {
        out.push_str(
            "Skew-prone features (ratings concentrated at the scale floor; Pearson leans on the \
high-value outliers while Spearman weighs the crowded low end):\n",
        );
        for r in &skewed {
            write_entry(&mut out, r);
        }
    }
    out.push_str(
        "\nWhen the two coefficients part ways, report both: a higher Pearson says the outliers \
agree, a higher Spearman says the bulk of the distribution agrees.\n",
    );
    out
}
