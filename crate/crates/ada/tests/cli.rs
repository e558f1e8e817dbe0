use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use clap::Parser;

use ada::cli::{run, Args, CliError};
use ada::store;
use ada_core::data::Dataset;
use ada_core::trainer::Checkpoint;
use ada_core::{Net, NetSpec, Tensor};

fn ada(dir: &Path, config: &Path, out: &str, cmd: &str, extra: &[&str]) -> Result<(), CliError> {
    let out = dir.join(out);
    let mut argv = vec![
        "ada".to_string(),
        "--config".into(),
        config.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    argv.extend(extra.iter().map(|s| s.to_string()));
    argv.push(cmd.into());
    run(&Args::try_parse_from(argv).unwrap())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.ini");
    let text = format!(
        "[data]\ntrain = {d}/data/train\ntest = {d}/data/test\n\n[corruption]\ncheckpoint = {d}/pre/corruption.adck\n\n[eval]\ncheckpoint = {d}/nom/checkpoint.adck\n{body}",
        d = dir.display(),
        body = body
    );
    fs::write(&p, text).unwrap();
    p
}

const TINY: &str = "kinds = contrast,gaussian_noise\n\n[gen]\nn = 16\n\n[pretrain]\nepochs = 2\n\n[train]\nepochs = 2\nbatch_size = 8\nnano_batch = 4\nwarmup_epochs = 1\n\n[ada]\nsteps = 2\n";

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            m.extend(snapshot(&p));
        } else {
            m.insert(p.clone(), fs::read(&p).unwrap());
        }
    }
    m
}

#[test]
fn gen_data_is_balanced_and_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), "[gen]\nclasses = 2\nn = 200\n");
    ada(t.path(), &c, "a", "gen-data", &[]).unwrap();
    ada(t.path(), &c, "b", "gen-data", &[]).unwrap();
    for split in ["train", "test"] {
        for f in [store::IMAGES_FILE, store::LABELS_FILE] {
            let a = fs::read(t.path().join("a").join(split).join(f)).unwrap();
            let b = fs::read(t.path().join("b").join(split).join(f)).unwrap();
            assert_eq!(a, b);
        }
        let d = store::load_dataset(&t.path().join("a").join(split), None).unwrap();
        assert_eq!(d.class_counts(), vec![100, 100]);
    }
    ada(t.path(), &c, "c", "gen-data", &["--seed", "5"]).unwrap();
    assert_ne!(
        fs::read(t.path().join("a/train/images.adat")).unwrap(),
        fs::read(t.path().join("c/train/images.adat")).unwrap()
    );
}

#[test]
fn always_correct_stub_scores_zero_mce() {
    let t = tempfile::tempdir().unwrap();
    let spec = NetSpec::classifier(1, 16, 2);
    let net = Net::new(spec).unwrap();
    let zero = net.init(0).map(|_, t| Tensor::zeros(t.shape()));
    let last = zero.len() - 1;
    let theta = zero.map(|i, t| if i == last { Tensor::from_slice(&[2], &[5.0, 0.0]).unwrap() } else { t.clone() });
    fs::create_dir_all(t.path().join("nom")).unwrap();
    store::save_classifier(&t.path().join("nom/checkpoint.adck"), &spec, &Checkpoint::fresh(theta, 0)).unwrap();
    let images: Vec<Tensor> = (0..6).map(|i| Tensor::full(&[1, 16, 16], i as f32 / 6.0)).collect();
    store::save_dataset(&t.path().join("data/test"), &Dataset::new(images, vec![0; 6], 1).unwrap()).unwrap();
    let c = write_config(t.path(), "kinds = all\n");
    ada(t.path(), &c, "ev", "eval", &[]).unwrap();
    let summary = fs::read_to_string(t.path().join("ev/eval_summary.txt")).unwrap();
    assert!(summary.starts_with("mce=0 clean_error=0 kinds=9 examples=6"), "{}", summary);
    let csv = fs::read_to_string(t.path().join("ev/eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9 * 5);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn pipeline_round_trip_leaves_inputs_untouched() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), TINY);
    ada(t.path(), &c, "data", "gen-data", &[]).unwrap();
    let data_before = snapshot(&t.path().join("data"));
    ada(t.path(), &c, "pre", "pretrain", &[]).unwrap();
    ada(t.path(), &c, "nom", "train", &[]).unwrap();
    let ck_before = snapshot(&t.path().join("nom"));
    ada(t.path(), &c, "ev", "eval", &[]).unwrap();
    ada(t.path(), &c, "ex", "export-corrupted", &[]).unwrap();
    ada(t.path(), &c, "rc", "reconstruct", &[]).unwrap();
    ada(t.path(), &c, "noise", "noise-eval", &[]).unwrap();
    ada(t.path(), &c, "ss", "ssim-dist", &[]).unwrap();
    assert_eq!(snapshot(&t.path().join("data")), data_before);
    assert_eq!(snapshot(&t.path().join("nom")), ck_before);

    let metrics = fs::read_to_string(t.path().join("nom/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next().unwrap(), "epoch,step,lr,loss,clean_acc,mean_delta_norm");
    assert_eq!(metrics.lines().count(), 3);
    assert_eq!(fs::read_to_string(t.path().join("ev/eval.csv")).unwrap().lines().count(), 11);
    let noise = fs::read_to_string(t.path().join("noise/noise.csv")).unwrap();
    assert_eq!(noise.lines().count(), 7);
    assert!(noise.starts_with("eta,error\n0,"));
    let hist = fs::read_to_string(t.path().join("ss/ssim_hist.csv")).unwrap();
    assert_eq!(hist.lines().next().unwrap(), "bin_left,bin_right,count");
    let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 16);
    assert!(t.path().join("ex/contrast_5.adat").exists() && t.path().join("ex/labels.adat").exists());
    assert_eq!(fs::read_to_string(t.path().join("rc/reconstruct.csv")).unwrap().lines().count(), 17);
    for d in ["data", "pre", "nom", "ev", "ex", "rc", "noise", "ss"] {
        assert!(t.path().join(d).join("resolved.ini").exists());
    }
}

#[test]
fn resume_matches_uninterrupted() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), &TINY.replace("[train]\n", "[train]\nkeep_epochs = true\n"));
    ada(t.path(), &c, "data", "gen-data", &[]).unwrap();
    ada(t.path(), &c, "full", "train", &[]).unwrap();
    let resumed = fs::read_to_string(&c)
        .unwrap()
        .replace("[train]\n", &format!("[train]\nresume = {}/full/epoch_1.adck\n", t.path().display()));
    let rc = t.path().join("resume.ini");
    fs::write(&rc, resumed).unwrap();
    ada(t.path(), &rc, "rest", "train", &[]).unwrap();
    let full = fs::read_to_string(t.path().join("full/metrics.csv")).unwrap();
    let rest = fs::read_to_string(t.path().join("rest/metrics.csv")).unwrap();
    assert_eq!(rest.lines().count(), 2);
    assert_eq!(rest.lines().nth(1), full.lines().nth(2));
    assert_eq!(
        fs::read(t.path().join("full/checkpoint.adck")).unwrap(),
        fs::read(t.path().join("rest/checkpoint.adck")).unwrap()
    );
}

#[test]
fn sweep_steps_emits_one_report_per_point() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), &format!("{}\n[train]\nepochs = 1\n", TINY.replace("[train]\nepochs = 2\nbatch_size = 8\nnano_batch = 4\nwarmup_epochs = 1\n", "")));
    ada(t.path(), &c, "data", "gen-data", &[]).unwrap();
    ada(t.path(), &c, "pre", "pretrain", &[]).unwrap();
    ada(t.path(), &c, "sw", "sweep", &[]).unwrap();
    let sweep = fs::read_to_string(t.path().join("sw/sweep.csv")).unwrap();
    let steps: Vec<&str> = sweep.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(steps, ["0", "2", "4", "6", "8", "10"]);
    for i in 0..6 {
        let p = t.path().join(format!("sw/point_{}", i));
        assert!(p.join("eval.csv").exists() && p.join("eval_summary.txt").exists() && p.join("metrics.csv").exists());
    }
}

#[test]
fn error_categories() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), "");
    assert_eq!(ada(t.path(), &c, "e", "eval", &[]).unwrap_err().exit_code(), 3);
    let bad = t.path().join("bad.ini");
    fs::write(&bad, "[train]\nepochs = 3\nepoch = 4\n").unwrap();
    let e = ada(t.path(), &bad, "e", "train", &[]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("line 3") && e.to_string().contains("train.epoch"), "{}", e);
    assert_eq!(ada(t.path(), &c, "e", "train", &[]).unwrap_err().exit_code(), 4);

    let bin = env!("CARGO_BIN_EXE_ada");
    let out = t.path().join("b");
    let status = |args: &[&str]| Proc::new(bin).args(args).env("ADA_LOG_LEVEL", "error").status().unwrap().code();
    let cs = c.display().to_string();
    let bads = bad.display().to_string();
    let outs = out.display().to_string();
    assert_eq!(status(&["--config", &cs, "--out", &outs, "eval"]), Some(3));
    assert_eq!(status(&["--config", &bads, "--out", &outs, "train"]), Some(2));
    assert_eq!(status(&["--out", &outs, "no-such-command"]), Some(2));
    let level = Proc::new(bin).args(["--out", &outs, "gen-data"]).env("ADA_LOG_LEVEL", "loud").status().unwrap();
    assert_eq!(level.code(), Some(2));
}
