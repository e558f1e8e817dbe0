//! CSV and one-line summary writers. Floats use the shortest round-trip
//! decimal form, so identical results give identical bytes. Reports carry no
//! timings.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ada_core::eval::{EvalReport, NoiseRow, Reconstruction, RobustEntry, SsimSummary};
use ada_core::trainer::EpochLog;

pub fn metrics_csv(rows: &[EpochLog]) -> String {
    let mut s = String::from("epoch,step,lr,loss,clean_acc,mean_delta_norm\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.epoch, r.step, r.lr, r.loss, r.clean_acc, r.mean_delta_norm);
    }
    s
}

pub fn eval_csv(r: &EvalReport) -> String {
    let mut s = String::from("kind,severity,error\n");
    for (kind, row) in r.kinds.iter().zip(&r.errors) {
        for (i, e) in row.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", kind.name(), i + 1, e);
        }
    }
    s
}

pub fn eval_summary(r: &EvalReport) -> String {
    format!(
        "mce={} clean_error={} kinds={} examples={} seed={}\n",
        r.mce,
        r.clean_error,
        r.kinds.len(),
        r.examples,
        r.seed
    )
}

pub fn robust_csv(rows: &[RobustEntry]) -> String {
    let mut s = String::from("norm,eps,accuracy\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.norm.name(), r.eps, r.accuracy);
    }
    s
}

pub fn noise_csv(rows: &[NoiseRow]) -> String {
    let mut s = String::from("eta,error\n");
    for r in rows {
        let _ = writeln!(s, "{},{}", r.eta, r.error);
    }
    s
}

pub fn reconstruct_csv(rows: &[Reconstruction]) -> String {
    let mut s = String::from("index,baseline_ssim,final_ssim,gain\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", i, r.baseline_ssim, r.final_ssim, r.final_ssim - r.baseline_ssim);
    }
    s
}

pub fn pretrain_csv(trace: &[f64], final_error: f64) -> String {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in trace.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, l);
    }
    let _ = writeln!(s, "final_mae,{}", final_error);
    s
}

pub fn histogram_csv(summary: &SsimSummary) -> String {
    let mut s = String::from("bin_left,bin_right,count\n");
    for (l, r, c) in &summary.histogram {
        let _ = writeln!(s, "{},{},{}", l, r, c);
    }
    s
}

pub fn ssim_summary(summary: &SsimSummary) -> String {
    let deciles: Vec<String> = summary.deciles.iter().map(|d| d.to_string()).collect();
    format!(
        "count={} mean={} variance={} deciles={}\n",
        summary.count,
        summary.mean,
        summary.variance,
        deciles.join(",")
    )
}

/// One row per sweep point.
pub struct SweepRow {
    pub point: usize,
    pub value: f64,
    pub steps: usize,
    pub nu: f64,
    pub mce: f64,
    pub clean_error: f64,
    pub final_loss: f64,
    pub mean_delta_norm: f64,
}

pub fn sweep_csv(mode: &str, rows: &[SweepRow]) -> String {
    let mut s = String::from("point,mode,value,steps,nu,mce,clean_error,final_loss,mean_delta_norm\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.point, mode, r.value, r.steps, r.nu, r.mce, r.clean_error, r.final_loss, r.mean_delta_norm
        );
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
