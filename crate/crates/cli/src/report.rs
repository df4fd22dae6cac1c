//! Machine-readable assessment report. Field order is fixed by declaration
//! and no volatile data (timings, timestamps) is included, so identical
//! inputs serialize byte-for-byte identically; timings go to standard
//! output instead.

use std::fs;
use std::path::Path;

use hierlyap::certify::{Certificate, MatrixKind, Verdict, VerdictReason};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Report {
    pub config_version: u32,
    pub kind: &'static str,
    pub seed: u64,
    pub certified: bool,
    pub reason: &'static str,
    pub rows_dominant: bool,
    pub row_margins: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_storage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
}

#[derive(Debug, Serialize)]
pub struct CertificateReport {
    pub c: Vec<f64>,
    pub v_min: f64,
    pub verify_eig: f64,
    pub trace: Vec<TraceStepReport>,
}

#[derive(Debug, Serialize)]
pub struct TraceStepReport {
    pub step: usize,
    pub epsilon: f64,
    pub feasible: bool,
    pub v_x0: f64,
    pub v_min: f64,
}

pub fn kind_name(kind: MatrixKind) -> &'static str {
    match kind {
        MatrixKind::Nominal => "nominal",
        MatrixKind::Robust => "robust",
    }
}

pub fn reason_name(reason: VerdictReason) -> &'static str {
    match reason {
        VerdictReason::InDominantRegion => "InDominantRegion",
        VerdictReason::AdaptationSucceeded => "AdaptationSucceeded",
        VerdictReason::NotInBallSet => "NotInBallSet",
        VerdictReason::AdaptationExhausted => "AdaptationExhausted",
        VerdictReason::NoScalingFound => "NoScalingFound",
    }
}

fn certificate_report(cert: &Certificate) -> CertificateReport {
    CertificateReport {
        c: cert.c.clone(),
        v_min: cert.v_min,
        verify_eig: cert.verify_eig,
        trace: cert
            .trace
            .iter()
            .map(|s| TraceStepReport {
                step: s.step,
                epsilon: s.epsilon,
                feasible: s.feasible,
                v_x0: s.v_x0,
                v_min: s.v_min,
            })
            .collect(),
    }
}

pub fn build_report(
    kind: MatrixKind,
    seed: u64,
    verdict: &Verdict,
    rows_dominant: bool,
    row_margins: Vec<f64>,
    initial_storage: Option<f64>,
) -> Report {
    Report {
        config_version: crate::config::CONFIG_VERSION,
        kind: kind_name(kind),
        seed,
        certified: verdict.certified,
        reason: reason_name(verdict.reason),
        rows_dominant,
        row_margins,
        initial_storage,
        certificate: verdict.certificate.as_ref().map(certificate_report),
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::parse(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display())))
}
