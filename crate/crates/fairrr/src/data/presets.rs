//! Shipped dataset presets.
//!
//! Adapter presets pin the encoding of three public benchmark files; place
//! the file named `<preset>.csv` in the configured data directory. Synthetic
//! presets are self-contained fixtures drawn from the generator with pinned
//! seeds; they mimic the shape of the public benchmarks (sample size, base
//! rates, baseline accuracy and disparity) and need no downloads.

use super::adapter::AdapterSpec;
use super::synthetic::SyntheticSpec;

pub const ADAPTER_PRESETS: [&str; 3] = ["adult", "compas", "law_school"];
pub const SYNTHETIC_PRESETS: [&str; 3] = ["synth_income", "synth_recidivism", "synth_admissions"];

/// Pinned encoding for a named public benchmark file, or `None` for unknown
/// names.
pub fn adapter_preset(name: &str) -> Option<AdapterSpec> {
    let spec = match name {
        // census income file: adult.csv with the 15 standard columns
        "adult" => AdapterSpec {
            label_column: "income".into(),
            positive_label_value: ">50K".into(),
            sensitive_column: "sex".into(),
            privileged_value: "Male".into(),
            categorical_columns: vec![
                "workclass".into(),
                "marital-status".into(),
                "occupation".into(),
                "relationship".into(),
                "race".into(),
                "native-country".into(),
            ],
            numeric_columns: vec![
                "age".into(),
                "education-num".into(),
                "capital-gain".into(),
                "capital-loss".into(),
                "hours-per-week".into(),
            ],
            drop_columns: vec!["fnlwgt".into(), "education".into()],
        },
        // recidivism file: compas.csv, the common 10-column filtered export
        "compas" => AdapterSpec {
            label_column: "two_year_recid".into(),
            positive_label_value: "1".into(),
            sensitive_column: "race".into(),
            privileged_value: "Caucasian".into(),
            categorical_columns: vec!["sex".into(), "age_cat".into(), "c_charge_degree".into()],
            numeric_columns: vec![
                "age".into(),
                "juv_fel_count".into(),
                "juv_misd_count".into(),
                "juv_other_count".into(),
                "priors_count".into(),
            ],
            drop_columns: vec![],
        },
        // bar passage file: law_school.csv with lsat, ugpa, race, pass_bar
        "law_school" => AdapterSpec {
            label_column: "pass_bar".into(),
            positive_label_value: "1".into(),
            sensitive_column: "race".into(),
            privileged_value: "White".into(),
            categorical_columns: vec![],
            numeric_columns: vec!["lsat".into(), "ugpa".into()],
            drop_columns: vec![],
        },
        _ => return None,
    };
    Some(spec)
}

/// Pinned generator fixture mimicking a public benchmark's shape, or `None`
/// for unknown names.
pub fn synthetic_preset(name: &str) -> Option<SyntheticSpec> {
    let spec = match name {
        // income-like: high accuracy, low base rate, clear positive
        // baseline disparity
        "synth_income" => SyntheticSpec {
            pi_a: 0.67,
            mu_1: vec![0.20, 0.15, 0.10, 0.05],
            mu_0: vec![-0.20, -0.15, -0.10, -0.05],
            w: vec![1.60, 1.30, 1.00, 0.70],
            b: -1.90,
            c_1: 0.15,
            c_0: -0.15,
            n: 24_000,
            seed: 0xFA1202601,
        },
        // recidivism-like: noisy labels, privileged group has the lower
        // positive rate, so the baseline disparity is negative
        "synth_recidivism" => SyntheticSpec {
            pi_a: 0.40,
            mu_1: vec![-0.22, -0.18, -0.13],
            mu_0: vec![0.22, 0.18, 0.13],
            w: vec![0.55, 0.45, 0.35],
            b: -0.07,
            c_1: -0.05,
            c_0: 0.05,
            n: 6000,
            seed: 0xFA1202602,
        },
        // admissions-like: high base rate, small baseline disparity
        "synth_admissions" => SyntheticSpec {
            pi_a: 0.80,
            mu_1: vec![0.08, 0.07, 0.05],
            mu_0: vec![-0.08, -0.07, -0.05],
            w: vec![1.15, 0.90, 0.65],
            b: 0.92,
            c_1: 0.03,
            c_0: -0.03,
            n: 20_800,
            seed: 0xFA1202603,
        },
        _ => return None,
    };
    Some(spec)
}
