use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ecgtda::autoencoder::{ae_train, AEModel};
use ecgtda::config::RunConfig;
use ecgtda::dsp::preprocess_record;
use ecgtda::eval::{
    autoencoder_sizes, make_splits, run_ablation, run_experiment, ExperimentConfig, Task,
};
use ecgtda::features::{write_feature_csv, write_feature_table, FeatureBank, FeatureRow};
use ecgtda::pipeline::{cohort_windows, PipelineConfig};
use ecgtda::render::{barcode_svg, betti_svg, curves_svg};
use ecgtda::segment::{write_table, BeatWindow};
use ecgtda::synth::{mix, synth_cohort};
use ecgtda::tda::{
    betti_curve, betti_pair_of, sublevel_barcode_of, superlevel_barcode_of, FiltrationKind,
    PersistenceBarcode, PersistenceInterval,
};
use ecgtda::wfdb::{
    build_manifest, load_record, AnnotatedRecord, Annotation, DatasetManifest, LoadOptions,
    RecordWriter, SignalFormat,
};

use crate::input::{self, Csv};
use crate::out::Out;
use crate::{usage, CmdResult, Command, Failure, PlotKind};

pub fn dispatch(cmd: Command, cfg: &RunConfig, out: &mut Out) -> CmdResult {
    match cmd {
        Command::Ingest { records } => ingest(&records, cfg, out),
        Command::Preprocess { record, binary } => preprocess(&record, binary, cfg, out),
        Command::Pipeline { records } => pipeline(&records, cfg, out),
        Command::Tda {
            input,
            values,
            index,
        } => tda(input.as_deref(), values, index, cfg, out),
        Command::Features { windows } => features(&windows, out),
        Command::TrainAe {
            windows,
            resume,
            all_labels,
        } => train_ae(&windows, resume.as_deref(), all_labels, cfg, out),
        Command::Score { model, windows } => score(&model, &windows, out),
        Command::Crossval {
            input,
            plan_only,
            ablation,
            task,
        } => crossval(&input, plan_only, ablation, task.as_deref(), cfg, out),
        Command::Plot {
            kind,
            inputs,
            superlevel,
            title,
        } => plot(kind, &inputs, superlevel, title.as_deref(), out),
        Command::Synth {
            patients,
            duration_s,
            rate_hz,
            mix,
            database,
        } => synth(patients, duration_s, rate_hz, &mix, &database, cfg, out),
    }
}

fn load_options(cfg: &RunConfig) -> LoadOptions {
    LoadOptions {
        channel: cfg.ingest.channel,
        annotator: cfg.ingest.annotator.clone(),
        ..LoadOptions::default()
    }
}

fn json(value: &impl serde::Serialize) -> CmdResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> ecgtda::Result<()>) -> CmdResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn io_csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CmdResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn ingest(records: &[PathBuf], cfg: &RunConfig, out: &mut Out) -> CmdResult {
    let paths = input::record_paths(records)?;
    let manifest = build_manifest(&paths, &load_options(cfg))?;
    out.write("manifest.json", &json(&manifest)?)?;
    let mut labels = String::from("database,label,count\n");
    for (db, summary) in &manifest.databases {
        for (label, n) in &summary.label_histogram {
            labels.push_str(&format!("{db},{label},{n}\n"));
        }
    }
    out.write("labels.csv", labels.as_bytes())?;
    for (db, s) in &manifest.databases {
        println!(
            "{db}: {} patients, {} beat labels, {:.2} h",
            s.patients, s.labels, s.duration_hours
        );
    }
    if !paths.is_empty() && manifest.entries.is_empty() {
        return Err(Failure::Data(format!(
            "none of {} records could be read",
            paths.len()
        )));
    }
    Ok(())
}

fn preprocess(record: &Path, binary: bool, cfg: &RunConfig, out: &mut Out) -> CmdResult {
    let rec = load_record(record, &load_options(cfg))?;
    let (clean, report) = preprocess_record(&rec, &cfg.preprocess)?;
    let id = &clean.patient_id;
    if binary {
        let bytes: Vec<u8> = clean
            .signal
            .samples()
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        out.write(&format!("{id}.signal.f64"), &bytes)?;
    } else {
        let rate = clean.signal.sample_rate_hz();
        let mut text = String::from("t_s,value\n");
        for (i, v) in clean.signal.samples().iter().enumerate() {
            text.push_str(&format!("{},{v}\n", i as f64 / rate));
        }
        out.write(&format!("{id}.signal.csv"), text.as_bytes())?;
    }
    let mut beats = String::from("sample,label\n");
    for b in &clean.beat_annotations {
        beats.push_str(&format!("{},{}\n", b.sample, b.code));
    }
    out.write(&format!("{id}.beats.csv"), beats.as_bytes())?;
    out.write(&format!("{id}.stages.json"), &json(&report)?)?;
    for flag in &report.flags {
        log::warn!("{id}: {flag}");
    }
    Ok(())
}

fn feature_rows(bank: &FeatureBank, windows: &[BeatWindow]) -> CmdResult<Vec<FeatureRow>> {
    windows
        .iter()
        .map(|w| {
            Ok(FeatureRow {
                patient_id: w.patient_id.clone(),
                label: w.label,
                values: bank.extract(w)?.values,
            })
        })
        .collect()
}

fn write_features(windows: &[BeatWindow], out: &mut Out) -> CmdResult {
    let refs: Vec<&BeatWindow> = windows.iter().collect();
    let bank = FeatureBank::fit(&refs)?;
    let rows = feature_rows(&bank, windows)?;
    out.write(
        "features.csv",
        &csv_bytes(|b| write_feature_csv(b, bank.layout(), &rows))?,
    )?;
    out.write(
        "features.bin",
        &csv_bytes(|b| write_feature_table(b, bank.layout(), &rows))?,
    )?;
    Ok(())
}

fn betti_table(windows: &[BeatWindow], bins: usize) -> CmdResult<String> {
    let mut text = String::from("patient_id,label,window");
    for side in ["sub", "sup"] {
        for j in 0..bins {
            text.push_str(&format!(",{side}_{j}"));
        }
    }
    text.push('\n');
    for (i, w) in windows.iter().enumerate() {
        let (sub, sup) = betti_pair_of(&w.samples, bins)?;
        text.push_str(&format!("{},{},{i}", w.patient_id, w.label));
        for c in sub.counts().iter().chain(sup.counts()) {
            text.push_str(&format!(",{c}"));
        }
        text.push('\n');
    }
    Ok(text)
}

#[derive(serde::Serialize)]
struct PipelineReport {
    records: Vec<ecgtda::pipeline::RecordOutcome>,
    failures: Vec<(PathBuf, String)>,
    windows: usize,
}

fn pipeline(records: &[PathBuf], cfg: &RunConfig, out: &mut Out) -> CmdResult {
    let paths = input::record_paths(records)?;
    let opts = load_options(cfg);
    let mut loaded: Vec<AnnotatedRecord> = Vec::new();
    let mut failures = Vec::new();
    for p in &paths {
        match load_record(p, &opts) {
            Ok(r) => loaded.push(r),
            Err(e) => {
                log::warn!("skipping {}: {e}", p.display());
                failures.push((p.clone(), e.to_string()));
            }
        }
    }
    if !paths.is_empty() && loaded.is_empty() {
        return Err(Failure::Data(format!(
            "none of {} records could be read",
            paths.len()
        )));
    }
    let pcfg = PipelineConfig {
        preprocess: cfg.preprocess.clone(),
        segment: cfg.segment.clone(),
    };
    let (windows, outcomes) = cohort_windows(&loaded, &pcfg, cfg.jobs)?;
    for o in &outcomes {
        if o.windows == 0 {
            log::warn!(
                "{}: {} beats give no {}-beat windows",
                o.patient_id,
                o.beats,
                cfg.segment.beats_per_window
            );
        }
    }
    out.write("windows.bin", &csv_bytes(|b| write_table(b, &windows))?)?;
    out.write(
        "stages.json",
        &json(&PipelineReport {
            records: outcomes,
            failures,
            windows: windows.len(),
        })?,
    )?;
    println!("{} windows from {} records", windows.len(), loaded.len());
    if windows.is_empty() {
        log::warn!("no windows; skipping feature and Betti tables");
        return Ok(());
    }
    write_features(&windows, out)?;
    out.write("betti.csv", betti_table(&windows, cfg.tda.bins)?.as_bytes())?;
    Ok(())
}

fn signal_tda(samples: &[f64], bins: usize, title: &str, out: &mut Out) -> CmdResult {
    let sub = sublevel_barcode_of(samples)?;
    let sup = superlevel_barcode_of(samples)?;
    let sub_curve = betti_curve(&sub, bins)?;
    let sup_curve = betti_curve(&sup, bins)?;
    out.write("barcode_sub.csv", &io_csv(|b| sub.write_csv(b))?)?;
    out.write("barcode_sup.csv", &io_csv(|b| sup.write_csv(b))?)?;
    out.write("betti_sub.csv", &io_csv(|b| sub_curve.write_csv(b))?)?;
    out.write("betti_sup.csv", &io_csv(|b| sup_curve.write_csv(b))?)?;
    out.write(
        "barcode_sub.svg",
        barcode_svg(&sub, &format!("{title}: sublevel barcode")).as_bytes(),
    )?;
    out.write(
        "barcode_sup.svg",
        barcode_svg(&sup, &format!("{title}: superlevel barcode")).as_bytes(),
    )?;
    out.write(
        "betti.svg",
        betti_svg(&sub_curve, &sup_curve, &format!("{title}: Betti curves")).as_bytes(),
    )?;
    println!(
        "{} sublevel and {} superlevel intervals",
        sub.len(),
        sup.len()
    );
    Ok(())
}

fn tda(
    input: Option<&Path>,
    values: Option<Vec<f64>>,
    index: usize,
    cfg: &RunConfig,
    out: &mut Out,
) -> CmdResult {
    let bins = cfg.tda.bins;
    match (input, values) {
        (None, Some(v)) => signal_tda(&v, bins, "signal", out),
        (Some(path), None) if input::is_window_table(path)? => {
            let windows = input::windows(path)?;
            let w = windows.get(index).ok_or_else(|| {
                usage(format!(
                    "--index {index} but the table has {} windows",
                    windows.len()
                ))
            })?;
            out.write("betti.csv", betti_table(&windows, bins)?.as_bytes())?;
            let title = format!("{} window {index} ({})", w.patient_id, w.label);
            signal_tda(&w.samples, bins, &title, out)
        }
        (Some(path), None) => {
            let v = input::numbers(path)?;
            signal_tda(&v, bins, &path.display().to_string(), out)
        }
        _ => Err(usage("give either an input file or --values")),
    }
}

fn features(windows: &Path, out: &mut Out) -> CmdResult {
    let windows = input::windows(windows)?;
    if windows.is_empty() {
        return Err(Failure::Data("window table is empty".into()));
    }
    write_features(&windows, out)
}

fn train_ae(
    windows: &Path,
    resume: Option<&Path>,
    all_labels: bool,
    cfg: &RunConfig,
    out: &mut Out,
) -> CmdResult {
    let windows = input::windows(windows)?;
    let chosen: Vec<&[f64]> = windows
        .iter()
        .filter(|w| all_labels || w.label == ecgtda::wfdb::AnnotationCode::NORMAL)
        .map(|w| w.samples.as_slice())
        .collect();
    if chosen.is_empty() {
        return Err(Failure::Data("no training windows".into()));
    }
    let mut model = match resume {
        Some(p) => AEModel::load(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => AEModel::with_sizes(&autoencoder_sizes(chosen[0].len()), cfg.autoencoder.seed)?,
    };
    let trace = ae_train(&mut model, &chosen, &cfg.autoencoder)?;
    model.save(&out.path("model.json"))?;
    out.record("model.json")?;
    out.record("model.bin")?;
    out.write("loss.csv", &csv_bytes(|b| trace.write_csv(b))?)?;
    println!(
        "{} windows, epochs {}..{}, loss {:.6} -> {:.6}",
        chosen.len(),
        model.epoch() - trace.epochs.len(),
        model.epoch(),
        trace.first().unwrap_or(f64::NAN),
        trace.last().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn score(model: &Path, windows: &Path, out: &mut Out) -> CmdResult {
    let model =
        AEModel::load(model).map_err(|e| Failure::Data(format!("{}: {e}", model.display())))?;
    let windows = input::windows(windows)?;
    let samples: Vec<&[f64]> = windows.iter().map(|w| w.samples.as_slice()).collect();
    let channels = model.encode_batch(&samples)?;
    let mut text = String::from("patient_id,label,score");
    for j in 0..model.latent_len() {
        text.push_str(&format!(",z{j}"));
    }
    text.push('\n');
    for (w, c) in windows.iter().zip(&channels) {
        text.push_str(&format!("{},{},{}", w.patient_id, w.label, c.score));
        for z in &c.latent {
            text.push_str(&format!(",{z}"));
        }
        text.push('\n');
    }
    out.write("scores.csv", text.as_bytes())?;
    Ok(())
}

fn crossval(
    input: &Path,
    plan_only: bool,
    ablation: bool,
    task: Option<&str>,
    cfg: &RunConfig,
    out: &mut Out,
) -> CmdResult {
    let task: Task = match task {
        Some(t) => t.parse().map_err(usage)?,
        None => cfg.crossval.task,
    };
    let windows = if input::is_window_table(input)? {
        Some(input::windows(input)?)
    } else {
        None
    };
    let patients: Vec<String> = match &windows {
        Some(w) => w
            .iter()
            .map(|w| w.patient_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
            let m: DatasetManifest = serde_json::from_str(&text).map_err(|e| {
                Failure::Data(format!(
                    "{}: neither a window table nor a manifest: {e}",
                    input.display()
                ))
            })?;
            m.entries.into_iter().map(|e| e.patient_id).collect()
        }
    };
    let plan = make_splits(
        &patients,
        cfg.crossval.test_size,
        cfg.crossval.train_ratio,
        cfg.seed,
    )?;
    out.write("plan.json", &json(&plan)?)?;
    println!(
        "{} patients, {} folds of {} test patients",
        patients.len(),
        plan.folds.len(),
        plan.test_size
    );
    if plan_only {
        return Ok(());
    }
    let Some(windows) = windows else {
        return Err(usage(
            "cross-validation needs a window table; a manifest only supports --plan-only",
        ));
    };
    let exp = ExperimentConfig {
        task,
        channels: cfg.crossval.channels,
        bins: cfg.tda.bins,
        seed: cfg.seed,
        head: cfg.head.clone(),
        autoencoder: cfg.autoencoder.clone(),
        max_folds: cfg.crossval.max_folds,
        jobs: cfg.jobs,
    };
    if ablation {
        let grid = run_ablation(
            &windows,
            &plan,
            &exp,
            &[Task::Detection, Task::Classification],
        )?;
        out.write("ablation.json", &json(&grid)?)?;
        out.write("ablation.csv", &csv_bytes(|b| grid.write_csv(b))?)?;
        for (c, s) in grid.columns.iter().zip(&grid.summary) {
            match s {
                Some(s) => println!("{} {}: {s}", c.task, c.channels),
                None => println!("{} {}: no test windows", c.task, c.channels),
            }
        }
    } else {
        let report = run_experiment(&windows, &plan, &exp)?;
        out.write("report.json", &json(&report)?)?;
        out.write("report.csv", &csv_bytes(|b| report.write_csv(b))?)?;
        if let Some(s) = report.aggregate.test_weighted_accuracy {
            println!("{task} {}: test weighted accuracy {s}", report.channels);
        }
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into())
}

fn read_barcode(path: &Path, kind: FiltrationKind) -> CmdResult<PersistenceBarcode> {
    let csv = Csv::read(path)?;
    let birth = csv.f64_column("birth", path)?;
    let death = csv.f64_column("death", path)?;
    let j = csv.column("essential", path)?;
    let intervals = csv
        .rows
        .iter()
        .zip(birth.into_iter().zip(death))
        .map(|(r, (birth, death))| PersistenceInterval {
            birth,
            death,
            essential: r.get(j).is_some_and(|v| v == "true"),
        })
        .collect();
    Ok(PersistenceBarcode::new(intervals, kind))
}

fn plot(
    kind: PlotKind,
    inputs: &[PathBuf],
    superlevel: bool,
    title: Option<&str>,
    out: &mut Out,
) -> CmdResult {
    let title = title.map_or_else(|| stem(&inputs[0]), String::from);
    let (x, y, x_label, y_label) = match kind {
        PlotKind::Barcode => {
            let fk = if superlevel {
                FiltrationKind::Superlevel
            } else {
                FiltrationKind::Sublevel
            };
            for p in inputs {
                let svg = barcode_svg(&read_barcode(p, fk)?, &title);
                out.write(&format!("{}.svg", stem(p)), svg.as_bytes())?;
            }
            return Ok(());
        }
        PlotKind::Betti => ("alpha", "count", "threshold", "intervals alive"),
        PlotKind::Loss => ("epoch", "loss", "epoch", "loss"),
        PlotKind::Signal => ("t_s", "value", "time (s)", "amplitude"),
    };
    let mut series = Vec::new();
    for p in inputs {
        let csv = Csv::read(p)?;
        let xs = csv.f64_column(x, p)?;
        let ys = csv.f64_column(y, p)?;
        series.push((stem(p), xs.into_iter().zip(ys).collect::<Vec<_>>()));
    }
    let named: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(n, pts)| (n.as_str(), pts.clone()))
        .collect();
    let svg = curves_svg(&title, x_label, y_label, &named);
    out.write(&format!("{}.svg", stem(&inputs[0])), svg.as_bytes())?;
    Ok(())
}

fn synth(
    patients: usize,
    duration_s: f64,
    rate_hz: f64,
    mix_text: &str,
    database: &str,
    cfg: &RunConfig,
    out: &mut Out,
) -> CmdResult {
    let entries: Vec<(String, f64)> = mix_text
        .split(',')
        .map(|item| {
            let (s, w) = item
                .split_once(':')
                .ok_or_else(|| usage(format!("--mix expects SYMBOL:WEIGHT, got {item:?}")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad weight in {item:?}")))?;
            Ok((s.trim().to_string(), w))
        })
        .collect::<CmdResult<_>>()?;
    let refs: Vec<(&str, f64)> = entries.iter().map(|(s, w)| (s.as_str(), *w)).collect();
    let class_mix = mix(&refs).map_err(usage)?;
    let cohort = synth_cohort(patients, duration_s, rate_hz, &class_mix, cfg.seed)?;
    let dir = out.path(database);
    for rec in &cohort {
        let writer = RecordWriter {
            name: rec.patient_id.clone(),
            sample_rate_hz: rate_hz,
            format: SignalFormat::Format212,
            adc_gain: 200.0,
            adc_zero: 0,
            channels: vec![rec.signal.samples().to_vec()],
            annotations: rec
                .beat_annotations
                .iter()
                .map(|b| Annotation::new(b.sample as u64, b.code))
                .collect(),
        };
        writer.write(&dir)?;
        for ext in ["hea", "dat", "atr"] {
            out.record(&format!("{database}/{}.{ext}", rec.patient_id))?;
        }
    }
    println!("{} records in {}", cohort.len(), dir.display());
    Ok(())
}
