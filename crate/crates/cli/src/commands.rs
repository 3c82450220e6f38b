//! Subcommand implementations. Every command that writes results also
//! writes a manifest next to them.

use crate::manifest;
use crate::RunArgs;
use crossex_core::capture::{align_records, normalize, read_capture, write_capture, write_frame_rows, frames_csv_header, venues_of, resample};
use crossex_core::config::ExperimentConfig;
use crossex_core::eval::{action_heatmap, compare, write_heatmap_csv, Arm, ExecPolicy, Greedy, Twap};
use crossex_core::exec::{write_traces_csv, ExecData, ExecEnv, FeatureScaler};
use crossex_core::pipeline::{synthetic_exec_data, train_agent, Market};
use crossex_core::ppo::{Checkpoint, UpdateStats, CHECKPOINT_VERSION};
use crossex_core::signals::{horizon_report, BinRange};
use crossex_core::{Error, Result, Scope, VenueId, GRID_NS};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

const NS_PER_S: i64 = 1_000_000_000;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load the config and apply environment and command-line overrides.
fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply_env(|k| std::env::var(k).ok());
    if let Some(s) = args.seed {
        cfg.seeds.market = s;
        cfg.seeds.train = s;
        cfg.seeds.evaluate = s;
        cfg.synth.seed = s;
        cfg.ppo.seed = s;
    }
    if let Some(d) = &args.out_dir {
        cfg.paths.out_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn load_records(path: &Path) -> Result<Vec<crossex_core::MarketRecord>> {
    if !path.exists() {
        return Err(Error::MissingInput {
            path: path.display().to_string(),
            field: "paths.capture".into(),
        });
    }
    Ok(normalize(read_capture(path)?))
}

#[derive(Clone, Copy)]
enum Split {
    Train,
    Eval,
}

/// Execution data per scope for one split, from the configured capture or
/// from generated segments.
fn exec_data(cfg: &ExperimentConfig, split: Split, scopes: &[Scope]) -> Result<Vec<ExecData>> {
    let target = VenueId::new(&cfg.market.target);
    let params = cfg.signals.features;
    let (path, seeds, duration_s) = match split {
        Split::Train => (&cfg.paths.capture, cfg.train_seeds(), cfg.market.train_duration_s),
        Split::Eval => (&cfg.paths.eval_capture, cfg.eval_seeds(), cfg.market.eval_duration_s),
    };
    match path {
        Some(p) => {
            let records = load_records(p)?;
            let market = Market::from_records(&records, params, Some(&target))?;
            market.venue(target.as_str())?;
            scopes
                .iter()
                .map(|&s| ExecData::build(&market.table, &market.features, &target, s, params.norm_window()))
                .collect()
        }
        None => synthetic_exec_data(&cfg.synth, &seeds, duration_s as i64 * NS_PER_S, params, &target, scopes),
    }
}

pub fn capture_align(input: &Path, output: &Path) -> Result<()> {
    let mut records = load_records(input)?;
    let report = align_records(&mut records);
    write_capture(&records, output)?;
    let summary = serde_json::json!({
        "records": records.len(),
        "aligned": report.aligned.iter().map(|(v, k)| serde_json::json!({"venue": v, "knots": k})).collect::<Vec<_>>(),
        "unmapped": report.unmapped,
        "rejected_knots": report.rejected_knots.iter().map(|(v, k)| serde_json::json!({"venue": v, "rejected": k})).collect::<Vec<_>>(),
    });
    println!("{summary}");
    Ok(())
}

pub fn capture_resample(input: &Path, output: &Path) -> Result<()> {
    let records = load_records(input)?;
    let venues = venues_of(&records);
    let frames = resample(&records, &venues, GRID_NS)?;
    let mut w = create(output)?;
    writeln!(w, "{}", frames_csv_header()).map_err(|e| Error::io(output, e))?;
    for f in &frames {
        write_frame_rows(&mut w, &venues, f).map_err(|e| Error::io(output, e))?;
    }
    finish(w, output)?;
    println!("{}", serde_json::json!({ "records": records.len(), "frames": frames.len(), "venues": venues }));
    Ok(())
}

pub fn synth_gen(args: &RunArgs, out: &Path) -> Result<()> {
    let cfg = load_config(args)?;
    let synth = crossex_core::SynthConfig {
        seed: cfg.seeds.market,
        ..cfg.synth.clone()
    };
    let market = crossex_core::synth::generate(&synth, cfg.market.train_duration_s as i64 * NS_PER_S)?;
    let mut w = create(out)?;
    let mut n = 0usize;
    for r in market {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::io(out, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(out, e))?;
        n += 1;
    }
    finish(w, out)?;
    ensure_dir(&cfg.paths.out_dir)?;
    manifest::write(&cfg.paths.out_dir, "synth", &cfg, &[out.to_path_buf()])?;
    println!("{}", serde_json::json!({ "records": n, "out": out }));
    Ok(())
}

pub fn signals_report(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let params = cfg.signals.features;
    let market = match &cfg.paths.capture {
        Some(p) => Market::from_records(&load_records(p)?, params, None)?,
        None => {
            let synth = crossex_core::SynthConfig {
                seed: cfg.seeds.market,
                ..cfg.synth.clone()
            };
            Market::synthetic(&synth, cfg.market.train_duration_s as i64 * NS_PER_S, params, None)?
        }
    };
    let target = market.venue(&cfg.market.target)?;
    let ti = market.table.venue_index(&target).expect("venue checked");
    let mid = &market.table.cols[ti].mid;
    let unit = BinRange::Fixed { lo: -1.0, hi: 1.0 };
    let mut wanted: Vec<(&str, Option<usize>, BinRange)> = Vec::new();
    for vi in 0..market.table.venues.len() {
        wanted.push(("oimn", Some(vi), unit));
        wanted.push(("imb", Some(vi), unit));
    }
    wanted.push(("oimn_cross", None, unit));
    wanted.push(("imb_cross", None, unit));
    wanted.push(("spread_norm", Some(ti), BinRange::AbsQuantile { q: 0.99 }));
    let reports = wanted
        .into_iter()
        .map(|(name, vi, range)| {
            let series = market.features.series(name, vi).expect("known feature");
            horizon_report(
                &series,
                target.as_str(),
                mid,
                &cfg.signals.horizons,
                cfg.signals.bin_horizon_ms,
                cfg.signals.bins,
                range,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let out = &cfg.paths.out_dir;
    ensure_dir(out)?;
    let json_path = out.join("signals_report.json");
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &reports).map_err(|e| Error::io(&json_path, e.into()))?;
    finish(w, &json_path)?;

    let r2_path = out.join("signals_r2.csv");
    let mut w = create(&r2_path)?;
    let io = |e| Error::io(&r2_path, e);
    writeln!(w, "feature,scope,horizon_ms,alpha,beta,r2,n").map_err(io)?;
    for r in &reports {
        for h in &r.horizons {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{},{},{}", r.feature, scope_label(&r.scope), h.horizon_ms, opt(h.alpha), opt(h.beta), opt(h.r2), h.n)
                .map_err(io)?;
        }
    }
    finish(w, &r2_path)?;

    let bins_path = out.join("signals_bins.csv");
    let mut w = create(&bins_path)?;
    let io = |e| Error::io(&bins_path, e);
    writeln!(w, "feature,scope,left,right,center,count,mean_return_bps").map_err(io)?;
    for r in &reports {
        for b in &r.bins {
            let mean = b.mean_return_bps.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{},{},{}", r.feature, scope_label(&r.scope), b.left, b.right, b.center, b.count, mean).map_err(io)?;
        }
    }
    finish(w, &bins_path)?;

    manifest::write(out, "signals", &cfg, &[json_path, r2_path, bins_path])?;
    for r in &reports {
        let r2: Vec<String> = r.r2().iter().map(|x| x.map_or("-".into(), |v| format!("{v:.4}"))).collect();
        println!("{:<12} {:<8} r2 {}", r.feature, scope_label(&r.scope), r2.join(" "));
    }
    Ok(())
}

fn scope_label(s: &crossex_core::signals::FeatureScope) -> String {
    match s {
        crossex_core::signals::FeatureScope::Venue(v) => v.to_string(),
        crossex_core::signals::FeatureScope::Cross => "cross".into(),
    }
}

fn checkpoint_path(cfg: &ExperimentConfig, scope: Scope) -> PathBuf {
    cfg.paths.checkpoint_dir.join(format!("ppo_{}.json", scope.as_str()))
}

pub fn train(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let scopes = cfg.train.arms.clone();
    let data = exec_data(&cfg, Split::Train, &scopes)?;
    ensure_dir(&cfg.paths.out_dir)?;
    ensure_dir(&cfg.paths.checkpoint_dir)?;
    let ppo = crossex_core::PpoConfig {
        seed: cfg.seeds.train,
        ..cfg.ppo.clone()
    };
    let mut artifacts = Vec::new();
    for (scope, data) in scopes.iter().zip(data) {
        let scaler = FeatureScaler::fit(&data);
        let env = ExecEnv::new(Arc::new(data), cfg.problem.clone(), scaler.clone())?;
        let log_path = cfg.paths.out_dir.join(format!("train_{}.csv", scope.as_str()));
        let mut log = create(&log_path)?;
        writeln!(log, "{}", UpdateStats::csv_header()).map_err(|e| Error::io(&log_path, e))?;
        let mut log_err = None;
        let params = train_agent(env, &ppo, cfg.train.updates, |s| {
            if let Err(e) = writeln!(log, "{}", s.csv_row()) {
                log_err.get_or_insert(e);
            }
            if s.update % 25 == 0 {
                eprintln!("{} update {} return {:.3} entropy {:.3}", scope.as_str(), s.update, s.mean_episode_return, s.entropy);
            }
        })?;
        if let Some(e) = log_err {
            return Err(Error::io(&log_path, e));
        }
        finish(log, &log_path)?;
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            scope: *scope,
            venue: VenueId::new(&cfg.market.target),
            problem: cfg.problem.clone(),
            features: cfg.signals.features,
            ppo: ppo.clone(),
            updates: cfg.train.updates as u64,
            scaler,
            params,
        };
        let ck_path = checkpoint_path(&cfg, *scope);
        ck.save(&ck_path)?;
        artifacts.push(log_path);
        artifacts.push(ck_path);
    }
    manifest::write(&cfg.paths.out_dir, "train", &cfg, &artifacts)?;
    println!("{}", serde_json::json!({ "trained": scopes.iter().map(|s| s.as_str()).collect::<Vec<_>>() }));
    Ok(())
}

fn load_checkpoint(cfg: &ExperimentConfig, scope: Scope) -> Result<Checkpoint> {
    let path = checkpoint_path(cfg, scope);
    if !path.exists() {
        return Err(Error::MissingInput {
            path: path.display().to_string(),
            field: "paths.checkpoint_dir".into(),
        });
    }
    let ck = Checkpoint::load(&path)?;
    if ck.scope != scope || ck.venue.as_str() != cfg.market.target {
        return Err(Error::Checkpoint(format!(
            "{}: trained for {} on {}, expected {} on {}",
            path.display(),
            ck.scope.as_str(),
            ck.venue,
            scope.as_str(),
            cfg.market.target
        )));
    }
    if ck.problem != cfg.problem || ck.features != cfg.signals.features {
        return Err(Error::Checkpoint(format!(
            "{}: problem or feature parameters differ from the config",
            path.display()
        )));
    }
    Ok(ck)
}

pub fn evaluate(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let ev = &cfg.evaluate;
    let checkpoints = ev.arms.iter().map(|&s| load_checkpoint(&cfg, s)).collect::<Result<Vec<_>>>()?;
    let mut scopes = ev.arms.clone();
    if scopes.is_empty() {
        scopes.push(Scope::Single);
    }
    let data = exec_data(&cfg, Split::Eval, &scopes)?;
    let envs = data
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let scaler = checkpoints.get(k).map_or_else(|| FeatureScaler::identity(d.n_features()), |c| c.scaler.clone());
            ExecEnv::new(Arc::new(d), cfg.problem.clone(), scaler)
        })
        .collect::<Result<Vec<_>>>()?;
    let greedy: Vec<Greedy<'_>> = checkpoints.iter().map(|c| Greedy(&c.params)).collect();
    let mut arms = vec![Arm::new("TWAP", &envs[0], &Twap)];
    for ((ck, env), pol) in checkpoints.iter().zip(&envs).zip(&greedy) {
        arms.push(Arm::new(format!("PPO_{}", ck.scope.as_str()), env, pol as &dyn ExecPolicy));
    }
    let report = compare(&arms, 0, ev.episodes, cfg.seeds.evaluate, ev.traces)?;

    let out = &cfg.paths.out_dir;
    ensure_dir(out)?;
    let mut artifacts = Vec::new();
    let table_path = out.join("eval_table.json");
    std::fs::write(&table_path, report.table_json() + "\n").map_err(|e| Error::io(&table_path, e))?;
    artifacts.push(table_path);

    let hist_path = out.join("is_histogram.csv");
    let mut w = create(&hist_path)?;
    report.write_histogram_csv(&mut w, ev.histogram_bins).map_err(|e| Error::io(&hist_path, e))?;
    finish(w, &hist_path)?;
    artifacts.push(hist_path);

    for (row, traces) in report.rows.iter().zip(&report.traces) {
        let path = out.join(format!("traces_{}.csv", row.policy));
        let eps: Vec<(usize, &[_])> = traces.iter().enumerate().map(|(i, t)| (i, t.as_slice())).collect();
        write_traces_csv(create(&path)?, &eps).map_err(|e| Error::io(&path, e))?;
        artifacts.push(path);
    }

    let n_heat = ev.heatmap_episodes.min(report.starts.len());
    for ((ck, env), pol) in checkpoints.iter().zip(&envs).zip(&greedy) {
        let signal = heatmap_signal(ck.scope);
        let grids = action_heatmap(env, pol, &report.starts[..n_heat], signal)?;
        let path = out.join(format!("heatmap_{}.csv", ck.scope.as_str()));
        write_heatmap_csv(create(&path)?, &grids).map_err(|e| Error::io(&path, e))?;
        artifacts.push(path);
    }

    manifest::write(out, "evaluate", &cfg, &artifacts)?;
    println!("{}", report.table_json());
    Ok(())
}

/// Index of the signal that buckets heatmap states: the cross-venue order
/// flow when the agent sees it, its own venue's otherwise.
fn heatmap_signal(scope: Scope) -> usize {
    scope.feature_names().iter().position(|n| *n == "oimn_cross").unwrap_or(0)
}
