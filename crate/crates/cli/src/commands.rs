use std::fmt::Write as _;
use std::path::Path;

use skillnet::data::{
    build_crops, crop_count, generate_synthetic_corpus, write_corpus, Corpus, CropCache, LabeledTrial, Task,
};
use skillnet::eval::{
    format_report_table, labeling_code, make_holdout_plan, make_loso_plan, report_stem, run_experiment_with_progress,
    write_report, EvalReport, FoldPlan, FoldReport, Scheme,
};
use skillnet::network::Checkpoint;
use skillnet::optim::{train as train_model, write_learning_curve};

use crate::config::RunConfig;
use crate::error::{io_error, CliError};

fn out_dir(config: &RunConfig) -> Result<&Path, CliError> {
    let dir = config.run.out.as_path();
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    Ok(dir)
}

fn load_task(config: &RunConfig) -> Result<Corpus, CliError> {
    let corpus = Corpus::load(&config.data.root)?.for_task(config.run.task);
    if corpus.is_empty() {
        return Err(skillnet::Error::Input(format!(
            "no {} trials under {}",
            config.run.task.dataset_name(),
            config.data.root.display()
        ))
        .into());
    }
    Ok(corpus)
}

pub fn synth(config: &RunConfig) -> Result<(), CliError> {
    let spec = config.synth_spec();
    spec.validate()?;
    let dir = out_dir(config)?;
    let synthetic = generate_synthetic_corpus(&spec)?;
    write_corpus(&synthetic, dir)?;
    println!(
        "wrote {} trials ({} subjects x {} trials x {} tasks) to {}",
        synthetic.corpus.len(),
        spec.subjects,
        spec.trials_per_subject,
        spec.tasks.len(),
        dir.display()
    );
    Ok(())
}

pub fn preprocess(config: &RunConfig) -> Result<(), CliError> {
    let corpus = Corpus::load(&config.data.root)?;
    let window = config.window()?;
    let policy = config.labeling();
    let dir = out_dir(config)?;
    println!("{:<16} {:>7} {:>10} {:>7}", "task", "trials", "instances", "crops");
    for task in corpus.tasks() {
        let trials = corpus.for_task(task);
        let crops = build_crops(&trials.trials, &policy, window)?;
        let expected: usize = trials.trials.iter().map(|t| 2 * crop_count(t.recording.length(), window)).sum();
        if crops.len() != expected {
            return Err(skillnet::Error::InternalState(format!(
                "{task}: produced {} crops, window formula gives {expected}",
                crops.len()
            ))
            .into());
        }
        println!(
            "{:<16} {:>7} {:>10} {:>7}",
            task.dataset_name(),
            trials.len(),
            2 * trials.len(),
            crops.len()
        );
        let path = dir.join(format!(
            "crops_{}_w{}_l{}_{}.bin",
            task.code().to_ascii_lowercase(),
            window.width,
            window.step,
            labeling_code(policy.mode)
        ));
        CropCache { config: window, crops }.save(&path)?;
    }
    Ok(())
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let corpus = load_task(config)?;
    let window = config.window()?;
    let crops = build_crops(&corpus.trials, &config.labeling(), window)?;
    let optimizer = config.optimizer();
    let outcome = train_model::<f64>(&crops, &config.architecture(window.width), &optimizer)?;
    let dir = out_dir(config)?;
    let stem = format!(
        "{}_train_w{}_{}_seed{}",
        config.run.task.code().to_ascii_lowercase(),
        window.width,
        labeling_code(config.labeling().mode),
        config.run.seed
    );
    let ckpt = dir.join(format!("{stem}.ckpt"));
    Checkpoint::new(outcome.model().clone(), optimizer.seed).save(&ckpt)?;
    write_learning_curve(dir.join(format!("{stem}_curve.csv")), &outcome.state.history)?;
    let last = outcome.state.history.last();
    println!(
        "trained on {} crops ({} held for validation), {} epochs; best epoch {} validation accuracy {}; final train loss {}",
        outcome.train_indices.len(),
        outcome.validation_indices.len(),
        outcome.state.epoch,
        outcome.state.best_epoch,
        outcome.state.best_validation_accuracy.map_or("n/a".into(), |a| format!("{a:.4}")),
        last.map_or("n/a".into(), |r| format!("{:.6}", r.train_loss)),
    );
    println!("checkpoint: {}", ckpt.display());
    Ok(())
}

fn plan_for(config: &RunConfig, scheme: Scheme, trials: &[LabeledTrial]) -> Result<FoldPlan, CliError> {
    let ids: Vec<_> = trials.iter().map(|t| t.recording.id.clone()).collect();
    Ok(match scheme {
        Scheme::Loso => make_loso_plan(&ids, config.coverage())?,
        Scheme::HoldOut => make_holdout_plan(&ids, config.run.seed, config.coverage())?,
    })
}

fn progress(report: &FoldReport) {
    match &report.metrics {
        Some(m) => eprintln!("  fold {} accuracy {:.4}", report.fold, m.accuracy),
        None => eprintln!("  fold {} {:?}", report.fold, report.status),
    }
}

/// Runs one scheme at one width and writes every artifact.
fn evaluate_one(config: &RunConfig, corpus: &Corpus, scheme: Scheme, width: usize) -> Result<EvalReport, CliError> {
    let plan = plan_for(config, scheme, &corpus.trials)?;
    let experiment_config = config.experiment(width);
    eprintln!("{} {} W={width}: {} fold(s)", config.run.task, scheme, plan.folds.len());
    let experiment = run_experiment_with_progress::<f64>(corpus, &plan, &experiment_config, &progress)?;
    let dir = out_dir(config)?;
    write_report(dir, &experiment.report)?;
    let stem = report_stem(&experiment.report);
    for (fold, art) in experiment.report.folds.iter().zip(&experiment.artifacts) {
        if let Some(model) = &art.model {
            Checkpoint::new(model.clone(), fold.seed).save(dir.join(format!("{stem}_fold{}.ckpt", fold.fold)))?;
            write_learning_curve(dir.join(format!("{stem}_fold{}_curve.csv", fold.fold)), &art.history)?;
        }
    }
    Ok(experiment.report)
}

fn check_failures(reports: &[EvalReport]) -> Result<(), CliError> {
    let failed: usize = reports.iter().map(|r| r.failed_folds().count()).sum();
    if failed > 0 {
        return Err(CliError::FoldsFailed(failed));
    }
    Ok(())
}

pub fn evaluate(config: &RunConfig) -> Result<(), CliError> {
    let corpus = load_task(config)?;
    let report = evaluate_one(config, &corpus, config.run.scheme, config.data.window)?;
    print!("{}", format_report_table(&report));
    if let Some(a) = &report.aggregate {
        println!("aggregate accuracy {:.4}", a.accuracy);
    }
    check_failures(std::slice::from_ref(&report))
}

/// Header and rows of the window-width table. Metrics are deterministic; timing
/// columns are written to a separate file.
fn benchmark_tables(task: Task, reports: &[EvalReport]) -> (String, String, String) {
    let mut metrics = String::from("task,scheme,window,f1_novice,f1_intermediate,f1_expert,accuracy\n");
    let mut timing = String::from("task,scheme,window,crops,mean_ms,std_ms\n");
    let mut table = format!(
        "{:<8} {:>4} {:>8} {:>8} {:>8} {:>9} {:>12}\n",
        "scheme", "W", "f1 N", "f1 I", "f1 E", "accuracy", "time (ms)"
    );
    for r in reports {
        let t = r.mean_running_time();
        let (ms, sd, n) = t.as_ref().map_or((0.0, 0.0, 0), |t| (t.mean_ms, t.std_ms, t.samples));
        let _ = writeln!(timing, "{task},{},{},{n},{ms:.3},{sd:.3}", r.scheme, r.window_width);
        match &r.aggregate {
            Some(a) => {
                let f = a.classes.map(|c| c.f1);
                let _ = writeln!(
                    metrics,
                    "{task},{},{},{:.6},{:.6},{:.6},{:.6}",
                    r.scheme, r.window_width, f[0], f[1], f[2], a.accuracy
                );
                let _ = writeln!(
                    table,
                    "{:<8} {:>4} {:>8.3} {:>8.3} {:>8.3} {:>9.4} {:>12.2}",
                    r.scheme.code(),
                    r.window_width,
                    f[0],
                    f[1],
                    f[2],
                    a.accuracy,
                    ms
                );
            }
            None => {
                let _ = writeln!(metrics, "{task},{},{},,,,", r.scheme, r.window_width);
                let _ = writeln!(table, "{:<8} {:>4} (no completed folds)", r.scheme.code(), r.window_width);
            }
        }
    }
    (metrics, timing, table)
}

pub fn benchmark(config: &RunConfig) -> Result<(), CliError> {
    if config.eval.benchmark_windows.is_empty() {
        return Err(CliError::Config("benchmark needs at least one window width".into()));
    }
    for &w in &config.eval.benchmark_windows {
        config.architecture(w).validate()?;
    }
    let corpus = load_task(config)?;
    let mut reports = Vec::new();
    for scheme in [Scheme::Loso, Scheme::HoldOut] {
        for &w in &config.eval.benchmark_windows {
            reports.push(evaluate_one(config, &corpus, scheme, w)?);
        }
    }
    let task = config.run.task;
    let (metrics, timing, table) = benchmark_tables(task, &reports);
    let dir = out_dir(config)?;
    let stem = format!(
        "benchmark_{}_{}_seed{}",
        task.code().to_ascii_lowercase(),
        labeling_code(config.labeling().mode),
        config.run.seed
    );
    let path = dir.join(format!("{stem}.csv"));
    std::fs::write(&path, metrics).map_err(io_error(&path))?;
    let path = dir.join(format!("{stem}_timing.csv"));
    std::fs::write(&path, timing).map_err(io_error(&path))?;
    println!("{} ({})", task.dataset_name(), labeling_code(config.labeling().mode));
    print!("{table}");
    check_failures(&reports)
}
