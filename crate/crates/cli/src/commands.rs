use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use pgg_core::analytics::{convergence_summary, DEFAULT_LOD_WINDOW, DEFAULT_TRUNCATION};
use pgg_core::sweep::{self, derive_seed, fmt_sig6, Settings, SweepEvent};
use pgg_core::{
    dilemma_bounds, extract_critical_r, lod_statistic, predicted_critical_r, reconstruct_lod,
    run_simulation, Error, ResponseCurve, Result,
};

use crate::{Common, CriticalArgs, PredictArgs, SimulateArgs, SweepArgs};

fn load_settings(common: &Common) -> Result<Settings> {
    match &common.config {
        None => Ok(Settings::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Settings::parse(&text)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let mut settings = load_settings(&args.common)?;
    for (key, value) in args.model.pairs() {
        settings.set_flag(key, value);
    }
    if let Some(r) = &args.r {
        settings.set_flag("r", r.as_str());
    }
    if let Some(rho) = &args.rho {
        settings.set_flag("rho", rho.as_str());
    }
    if let Some(seed) = args.common.seed {
        settings.set_flag("seed", seed.to_string());
    }
    let params = pgg_core::validate_params(settings.into_sim_params()?)?;
    let run = run_simulation(&params)?;

    let out = args.common.out.unwrap_or_else(|| "run.csv".into());
    sweep::write_run_csv(&run, &out)?;

    let n = run.final_genomes.len() as f64;
    let final_p_c = run.final_genomes.iter().map(|g| g.p_c()).sum::<f64>() / n;
    let final_p_ac = run.final_genomes.iter().map(|g| g.p_ac()).sum::<f64>() / n;
    let mut line = format!(
        "final mean_p_C={} mean_p_AC={}",
        fmt_sig6(final_p_c),
        fmt_sig6(final_p_ac)
    );
    if let Some(tail) =
        convergence_summary(&run.records, pgg_core::analytics::DEFAULT_TAIL_FRACTION)
    {
        write!(
            line,
            " tail_mean_p_C={} tail_coop_freq={}",
            fmt_sig6(tail.mean_p_c),
            fmt_sig6(tail.coop_frequency)
        )
        .expect("writing to a String");
        let pick = (derive_seed(params.seed, 0, 0, 0) % run.final_genomes.len() as u64) as usize;
        let lod = reconstruct_lod(&run.initial_genomes, &run.records, pick, DEFAULT_TRUNCATION)?;
        if let Ok(v) = lod_statistic(&lod, DEFAULT_LOD_WINDOW) {
            write!(line, " lod_mean_p_C={}", fmt_sig6(v)).expect("writing to a String");
        }
    }
    println!("{line}");
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let mut settings = load_settings(&args.common)?;
    for (key, value) in args.model.pairs() {
        settings.set_flag(key, value);
    }
    let extra = [
        ("r_values", &args.r_values),
        ("rho_values", &args.rho_values),
        ("replicates", &args.replicates),
        ("threshold", &args.threshold),
        ("tail_fraction", &args.tail_fraction),
        ("run_csv_dir", &args.run_csv_dir),
    ];
    for (key, value) in extra {
        if let Some(v) = value {
            settings.set_flag(key, v.as_str());
        }
    }
    if let Some(seed) = args.common.seed {
        settings.set_flag("master_seed", seed.to_string());
    }
    if let Some(p) = args.common.parallelism {
        settings.set_flag("parallelism", p.to_string());
    }
    let config = settings.into_sweep_config()?;
    config.validate()?;

    let quiet = args.quiet;
    let result = sweep::run_sweep(&config, |e: &SweepEvent| {
        if !quiet {
            eprintln!(
                "[{}/{}] rho_A={} r={} replicate={}",
                e.completed,
                e.total,
                fmt_sig6(config.rho_values[e.rho_index]),
                fmt_sig6(config.r_values[e.r_index]),
                e.replicate
            );
        }
    })?;

    let out = args.common.out.unwrap_or_else(|| "sweep.csv".into());
    sweep::write_sweep_csv(&result, &out)?;
    if let Some(json) = &args.json {
        sweep::write_sweep_json(&result, json)?;
    }
    for point in &result.critical_points {
        println!(
            "rho_A={} r_critical={}",
            fmt_sig6(point.rho_a),
            point
                .r_critical
                .map_or_else(|| "none".to_string(), fmt_sig6)
        );
    }
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let (r_low, r_high) = dilemma_bounds(args.k)?;
    let mut text = String::from("k,rho_A,r_low,r_high,r_critical\n");
    for item in args.rho.split(',').map(str::trim) {
        let rho: f64 = item
            .parse()
            .map_err(|e| Error::Argument(format!("--rho: cannot parse `{item}`: {e}")))?;
        let r_critical = predicted_critical_r(args.k, rho)?;
        writeln!(
            text,
            "{},{rho:.6},{r_low:.6},{r_high:.6},{r_critical:.6}",
            args.k
        )
        .expect("writing to a String");
    }
    print!("{text}");
    if let Some(out) = &args.common.out {
        write_text(out, &text)?;
    }
    Ok(())
}

pub fn critical(args: CriticalArgs) -> Result<()> {
    let rows = sweep::read_sweep_csv(&args.input).map_err(|e| match e {
        Error::Csv { .. } | Error::Io { .. } => {
            Error::Argument(format!("malformed sweep CSV: {e}"))
        }
        other => other,
    })?;
    if rows.is_empty() {
        return Err(Error::Argument(format!(
            "{}: no data rows",
            args.input.display()
        )));
    }
    let k = rows[0].k;
    if rows.iter().any(|row| row.k != k) {
        return Err(Error::Argument(
            "sweep CSV mixes several values of k".into(),
        ));
    }

    // keyed by the bit pattern so densities group exactly as written
    let mut curves: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for row in &rows {
        curves
            .entry(row.rho_a.to_bits())
            .or_insert_with(|| (row.rho_a, Vec::new()))
            .1
            .push((row.r, row.mean_p_c.clamp(0.0, 1.0)));
    }
    let mut ordered: Vec<(f64, Vec<(f64, f64)>)> = curves.into_values().collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut text = String::from("rho_A,observed_r_critical,predicted_r_critical,abs_error\n");
    for (rho, points) in ordered {
        let observed = if points.len() < 2 {
            None
        } else {
            extract_critical_r(&ResponseCurve::new(points)?, args.threshold)?
        };
        let predicted = predicted_critical_r(k, rho)?;
        let (obs, err) = match observed {
            Some(v) => (fmt_sig6(v), fmt_sig6((v - predicted).abs())),
            None => ("none".to_string(), "none".to_string()),
        };
        writeln!(
            text,
            "{},{obs},{},{err}",
            fmt_sig6(rho),
            fmt_sig6(predicted)
        )
        .expect("writing to a String");
    }
    print!("{text}");
    if let Some(out) = &args.common.out {
        write_text(out, &text)?;
    }
    Ok(())
}
