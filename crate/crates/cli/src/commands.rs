//! Command implementations. Each returns the provenance records it produced.

use std::fs;
use std::path::Path;

use landscape_lab::field::ScalarField;
use landscape_lab::geometry::{local_minima, watershed_basins, Well};
use landscape_lab::io::{fmt_real, read_field_json, write_field_json, write_pgm, Table};
use landscape_lab::potential::{gen_bernoulli, gen_correlated_1d, gen_correlated_2d, gen_uniform, Potential};
use landscape_lab::predict::{
    default_alpha, dos_histogram, eigen_peak, leading_wells, match_peaks, predict_eigenvalues, predictions,
    ratio_stats, support_regions, total_variation, weyl_counting,
};
use landscape_lab::spectra::{count_eigenvalues_below, eigenvalues_in_range};
use landscape_lab::{compute_landscape, smallest_eigenpairs, Error, Result, SchrodingerOperator};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::files::{eigs_table, read_eigs, read_text, tagged, wells_table, write_provenance, EigRow, Record};
use crate::{
    check_alpha, check_positive, check_r, check_tol, AnalyzeArgs, Command, CompareArgs, Common, DosArgs, EigsArgs,
    GenArgs, GenParams, Generator, LandscapeArgs, PredictArgs, WeylArgs,
};

/// Tolerance of the landscape solve inside `compare --batch`.
const BATCH_LANDSCAPE_TOL: f64 = 1e-10;
/// Absolute accuracy of eigenvalues located by spectral slicing.
const SLICE_TOL: f64 = 1e-10;

pub fn dispatch(command: &Command) -> Result<()> {
    let (common, records) = match command {
        Command::GenPotential(a) => (&a.common, vec![gen_potential(a)?]),
        Command::Landscape(a) => (&a.common, vec![landscape(a)?]),
        Command::Analyze(a) => (&a.common, vec![analyze(a)?]),
        Command::Eigs(a) => (&a.common, vec![eigs(a)?]),
        Command::Predict(a) => (&a.common, vec![predict(a)?]),
        Command::Compare(a) if a.batch.is_some() => (&a.common, compare_batch(a)?),
        Command::Compare(a) => (&a.common, vec![compare(a)?]),
        Command::Weyl(a) => (&a.common, vec![weyl(a)?]),
        Command::Dos(a) => (&a.common, vec![dos(a)?]),
    };
    write_provenance(&common.out, &records)
}

fn config<T: serde::Serialize>(args: &T) -> Result<Value> {
    Ok(serde_json::to_value(args)?)
}

fn prepare(common: &Common) -> Result<()> {
    fs::create_dir_all(&common.out)?;
    Ok(())
}

fn load_potential(common: &Common) -> Result<Potential> {
    Potential::from_json(&read_text(&tagged(&common.out, "potential", common.seed, "json"))?)
}

fn load_w(common: &Common) -> Result<ScalarField> {
    let path = tagged(&common.out, "w", common.seed, "json");
    read_text(&path)?;
    read_field_json(&path)
}

fn operator(p: &Potential, r: usize) -> Result<SchrodingerOperator> {
    let grid = p.grid(r)?;
    SchrodingerOperator::new(p.sample_on_grid(&grid)?)
}

/// Operator on the grid of a stored field.
fn operator_like(p: &Potential, w: &ScalarField) -> Result<SchrodingerOperator> {
    let op = operator(p, w.grid().points_per_unit())?;
    if op.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(op)
}

fn wells_of(w: &ScalarField) -> Result<Vec<Well>> {
    let wells = local_minima(w);
    if wells.is_empty() {
        return Err(Error::Empty("local minima of W (the field is flat)"));
    }
    Ok(wells)
}

fn generate(params: &GenParams, seed: u64) -> Result<Potential> {
    let units = params.axis_units()?;
    match params.generator {
        Generator::Uniform => gen_uniform(&units, params.lo, params.hi, seed),
        Generator::Bernoulli => gen_bernoulli(&units, params.v0, params.v1, params.p, seed),
        Generator::Correlated if units.len() == 1 => gen_correlated_1d(units[0], params.sigma, params.d, seed),
        Generator::Correlated => gen_correlated_2d(units[0], params.sigma, params.d, seed),
    }
}

pub fn gen_potential(args: &GenArgs) -> Result<Record> {
    let c = &args.common;
    args.params.axis_units()?;
    prepare(c)?;
    let p = generate(&args.params, c.seed)?;
    fs::write(tagged(&c.out, "potential", c.seed, "json"), p.to_json()? + "\n")?;
    let values = p.cell_values();
    let results = json!({
        "cells": values.len(),
        "min_v": values.iter().copied().fold(f64::INFINITY, f64::min),
        "max_v": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "generator": p.meta(),
    });
    Ok(Record::new("gen-potential", c.seed, config(args)?, results))
}

pub fn landscape(args: &LandscapeArgs) -> Result<Record> {
    let c = &args.common;
    check_r(args.r)?;
    check_tol(args.tol)?;
    let p = load_potential(c)?;
    let op = operator(&p, args.r)?;
    let pair = compute_landscape(&op, args.tol)?;
    write_field_json(tagged(&c.out, "u", c.seed, "json"), &pair.u)?;
    write_field_json(tagged(&c.out, "w", c.seed, "json"), &pair.w)?;
    if op.grid().dim() == 2 {
        write_pgm(tagged(&c.out, "u", c.seed, "pgm"), &pair.u)?;
        write_pgm(tagged(&c.out, "w", c.seed, "pgm"), &pair.w)?;
    }
    let results = json!({
        "solve_report": pair.solve_report,
        "points": op.grid().len(),
        "min_u": pair.u.min(),
        "max_u": pair.u.max(),
        "min_v": op.potential().min(),
        "max_v": op.potential().max(),
        "min_w": pair.w.min(),
        "max_w": pair.w.max(),
    });
    Ok(Record::new("landscape", c.seed, config(args)?, results))
}

fn regions_table(regions: &[landscape_lab::geometry::Region]) -> Table {
    let mut t = Table::new(&["rank", "index"]);
    for r in regions {
        let rank = r.seed_rank.unwrap_or(0).to_string();
        for &j in &r.members {
            t.push(vec![rank.clone(), j.to_string()]);
        }
    }
    t
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Record> {
    let c = &args.common;
    check_alpha(args.alpha)?;
    let w = load_w(c)?;
    let dim = w.grid().dim();
    let alpha = match args.alpha {
        Some(a) => a,
        None => default_alpha(dim)?,
    };
    let wells = wells_of(&w)?;
    let basins = watershed_basins(&w, &wells)?;
    let regions = support_regions(&wells, &w, alpha)?;

    wells_table(&wells, dim).write(tagged(&c.out, "wells", c.seed, "csv"))?;
    let labels = ScalarField::new(w.grid().clone(), basins.labels.iter().map(|&l| l as f64).collect())?;
    let crest = ScalarField::new(
        w.grid().clone(),
        basins.crest.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    )?;
    write_field_json(tagged(&c.out, "basins", c.seed, "json"), &labels)?;
    write_field_json(tagged(&c.out, "crest", c.seed, "json"), &crest)?;
    if dim == 2 {
        write_pgm(tagged(&c.out, "basins", c.seed, "pgm"), &labels)?;
    }
    regions_table(&regions).write(tagged(&c.out, "regions", c.seed, "csv"))?;

    let results = json!({
        "wells": wells.len(),
        "basins": basins.basin_count(),
        "crest_points": basins.crest_count(),
        "alpha": alpha,
        "min_w": wells[0].w_min,
    });
    Ok(Record::new("analyze", c.seed, config(args)?, results))
}

pub fn eigs(args: &EigsArgs) -> Result<Record> {
    let c = &args.common;
    check_r(args.r)?;
    check_tol(args.tol)?;
    check_positive("k", args.k)?;
    let p = load_potential(c)?;
    let op = operator(&p, args.r)?;
    let dim = op.grid().dim();
    let pairs = smallest_eigenpairs(&op, args.k, args.tol)?;
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (peak_index, peak) = eigen_peak(e)?;
            Ok(EigRow {
                rank: i + 1,
                lambda: e.lambda,
                residual: e.residual,
                peak_index,
                peak,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    eigs_table(&rows, dim).write(tagged(&c.out, "eigs", c.seed, "csv"))?;
    if args.save_psi {
        for (i, e) in pairs.iter().enumerate() {
            let stem = format!("psi-k{}", i + 1);
            write_field_json(tagged(&c.out, &stem, c.seed, "json"), &e.psi)?;
            if dim == 2 {
                write_pgm(tagged(&c.out, &stem, c.seed, "pgm"), &e.psi)?;
            }
        }
    }
    let results = json!({
        "eigenpairs": pairs.len(),
        "lambda_1": pairs[0].lambda,
        "max_residual": pairs.iter().map(|e| e.residual).fold(0.0, f64::max),
        "min_v": op.potential().min(),
    });
    Ok(Record::new("eigs", c.seed, config(args)?, results))
}

pub fn predict(args: &PredictArgs) -> Result<Record> {
    let c = &args.common;
    check_alpha(args.alpha)?;
    if let Some(k) = args.k {
        check_positive("k", k)?;
    }
    let w = load_w(c)?;
    let dim = w.grid().dim();
    let alpha = match args.alpha {
        Some(a) => a,
        None => default_alpha(dim)?,
    };
    let wells = wells_of(&w)?;
    let (lead, truncated) = leading_wells(&wells, args.k.unwrap_or(wells.len()));
    let preds = predictions(lead, &w, alpha)?;

    let mut header = vec!["rank", "index"];
    header.extend(if dim == 1 { vec!["x"] } else { vec!["x", "y"] });
    header.extend(["w_min", "lambda_hat", "support_size"]);
    let mut t = Table::new(&header);
    for p in &preds {
        let mut row = vec![p.well.rank.to_string(), p.well.min_index.to_string()];
        row.extend(p.well.min_location.iter().map(|&x| fmt_real(x)));
        row.extend([fmt_real(p.well.w_min), fmt_real(p.lambda_hat), p.support.len().to_string()]);
        t.push(row);
    }
    t.write(tagged(&c.out, "predictions", c.seed, "csv"))?;
    let regions: Vec<_> = preds.into_iter().map(|p| p.support).collect();
    regions_table(&regions).write(tagged(&c.out, "regions", c.seed, "csv"))?;

    let results = json!({
        "predictions": lead.len(),
        "wells_available": wells.len(),
        "truncated": truncated,
        "alpha": alpha,
    });
    Ok(Record::new("predict", c.seed, config(args)?, results))
}

/// Summary of one `compare` run.
#[derive(Debug, Clone, Copy)]
struct CompareSummary {
    mean: f64,
    sd: f64,
    max_match_distance: f64,
    lambda_1: f64,
    min_w: f64,
}

fn compare_files(c: &Common, k: usize) -> Result<(Value, CompareSummary)> {
    check_positive("k", k)?;
    let w = load_w(c)?;
    let wells = wells_of(&w)?;
    let rows = read_eigs(&tagged(&c.out, "eigs", c.seed, "csv"))?;
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let counts: Vec<usize> = (1..=k).collect();
    let stats = ratio_stats(&lambdas, &wells, &counts)?;
    let peaks: Vec<Vec<f64>> = rows.iter().map(|r| r.peak.clone()).collect();
    let report = match_peaks(&wells, &peaks, &w.grid().lengths())?;

    let mut t = Table::new(&["count", "mean", "sd"]);
    for s in &stats {
        t.push(vec![s.count.to_string(), fmt_real(s.mean), fmt_real(s.sd)]);
    }
    t.write(tagged(&c.out, "ratio", c.seed, "csv"))?;
    let mut t = Table::new(&["eigen_rank", "well_rank", "distance", "rank_to_rank_distance"]);
    for (p, r2r) in report.pairs.iter().zip(&report.rank_to_rank) {
        t.push(vec![
            p.eigen_rank.to_string(),
            p.well_rank.to_string(),
            fmt_real(p.distance),
            fmt_real(*r2r),
        ]);
    }
    t.write(tagged(&c.out, "match", c.seed, "csv"))?;

    let last = stats[k - 1];
    let leading = report.pairs.iter().take(4).map(|p| p.distance).fold(0.0, f64::max);
    let summary = CompareSummary {
        mean: last.mean,
        sd: last.sd,
        max_match_distance: leading,
        lambda_1: lambdas[0],
        min_w: wells[0].w_min,
    };
    let results = json!({
        "count": k,
        "ratio_mean": last.mean,
        "ratio_sd": last.sd,
        "max_match_distance_first_4": leading,
        "unmatched_wells": report.unmatched_wells.len(),
        "unmatched_eigenpairs": report.unmatched_eigenpairs,
    });
    Ok((results, summary))
}

pub fn compare(args: &CompareArgs) -> Result<Record> {
    let (results, _) = compare_files(&args.common, args.k)?;
    Ok(Record::new("compare", args.common.seed, config(args)?, results))
}

fn thread_cap(jobs: usize) -> usize {
    let cap = std::env::var("LANDSCAPE_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    cap.map_or(jobs, |c| c.min(jobs))
}

/// Full pipeline (generate, landscape, eigs, compare) per seed.
pub fn compare_batch(args: &CompareArgs) -> Result<Vec<Record>> {
    let count = args.batch.unwrap_or(1);
    check_positive("batch", count)?;
    check_positive("jobs", args.jobs)?;
    check_positive("k", args.k)?;
    check_r(args.r)?;
    check_tol(args.tol)?;
    args.params.axis_units()?;
    prepare(&args.common)?;
    let first = args.common.seed;
    let seeds: Vec<u64> = (first..first + count as u64).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap(args.jobs))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;

    let per_seed = |seed: u64| -> Result<(Vec<Record>, CompareSummary, f64)> {
        let common = Common {
            seed,
            out: args.common.out.clone(),
        };
        let gen = gen_potential(&GenArgs {
            common: common.clone(),
            params: args.params.clone(),
        })?;
        let land = landscape(&LandscapeArgs {
            common: common.clone(),
            r: args.r,
            tol: BATCH_LANDSCAPE_TOL,
        })?;
        let eig = eigs(&EigsArgs {
            common: common.clone(),
            r: args.r,
            k: args.k,
            tol: args.tol,
            save_psi: false,
        })?;
        let (results, summary) = compare_files(&common, args.k)?;
        let mut cfg = config(args)?;
        cfg["seed"] = json!(seed);
        let min_v = land.value["results"]["min_v"].as_f64().unwrap_or(f64::NAN);
        let cmp = Record::new("compare", seed, cfg, results);
        Ok((vec![gen, land, eig, cmp], summary, min_v))
    };
    let outcomes: Vec<Result<_>> = pool.install(|| seeds.par_iter().map(|&s| per_seed(s)).collect());

    let mut records = Vec::new();
    let mut t = Table::new(&[
        "seed",
        "ratio_mean",
        "ratio_sd",
        "max_match_distance_first_4",
        "lambda_1",
        "min_v",
        "min_w",
    ]);
    for (seed, outcome) in seeds.iter().zip(outcomes) {
        let (recs, s, min_v) = outcome?;
        records.extend(recs);
        t.push(vec![
            seed.to_string(),
            fmt_real(s.mean),
            fmt_real(s.sd),
            fmt_real(s.max_match_distance),
            fmt_real(s.lambda_1),
            fmt_real(min_v),
            fmt_real(s.min_w),
        ]);
    }
    let last = first + count as u64 - 1;
    t.write(args.common.out.join(format!("compare-summary-s{first}-s{last}.csv")))?;
    Ok(records)
}

fn sorted_eig_values(path: &Path) -> Result<Option<Vec<f64>>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut values: Vec<f64> = read_eigs(path)?.into_iter().map(|r| r.lambda).collect();
    values.sort_by(f64::total_cmp);
    Ok(Some(values))
}

pub fn weyl(args: &WeylArgs) -> Result<Record> {
    let c = &args.common;
    if args.points < 2 {
        return Err(Error::InvalidParameter("--points must be at least 2".into()));
    }
    let p = load_potential(c)?;
    let w = load_w(c)?;
    let op = operator_like(&p, &w)?;
    let dim = w.grid().dim();
    let known = if dim == 1 {
        None
    } else {
        sorted_eig_values(&tagged(&c.out, "eigs", c.seed, "csv"))?
    };
    let (lo, hi) = args.range;
    let mut t = Table::new(&["energy", "n", "n_v", "n_w"]);
    let mut exact_rows = 0;
    for i in 0..args.points {
        let e = lo + (hi - lo) * i as f64 / (args.points - 1) as f64;
        let n = if dim == 1 {
            // Counts eigenvalues <= e.
            Some(count_eigenvalues_below(&op, e.next_up())?)
        } else {
            match &known {
                Some(v) if v.last().is_some_and(|&top| e <= top) => Some(v.partition_point(|&l| l <= e)),
                _ => None,
            }
        };
        exact_rows += n.is_some() as usize;
        t.push(vec![
            fmt_real(e),
            n.map(|x| x.to_string()).unwrap_or_default(),
            fmt_real(weyl_counting(op.potential(), e, dim)?),
            fmt_real(weyl_counting(&w, e, dim)?),
        ]);
    }
    t.write(tagged(&c.out, "weyl", c.seed, "csv"))?;
    let results = json!({ "energies": args.points, "rows_with_exact_count": exact_rows });
    Ok(Record::new("weyl", c.seed, config(args)?, results))
}

pub fn dos(args: &DosArgs) -> Result<Record> {
    let c = &args.common;
    check_positive("bins", args.bins)?;
    let p = load_potential(c)?;
    let w = load_w(c)?;
    let dim = w.grid().dim();
    let (lo, hi) = args.range;
    let (values, complete) = if dim == 1 {
        let op = operator_like(&p, &w)?;
        (eigenvalues_in_range(&op, lo, hi, SLICE_TOL)?, true)
    } else {
        let v = sorted_eig_values(&tagged(&c.out, "eigs", c.seed, "csv"))?
            .ok_or_else(|| Error::InvalidParameter("2D DOS needs eigenvalues from `eigs` first".into()))?;
        let complete = v.last().is_some_and(|&top| top >= hi);
        (v, complete)
    };
    let wells = wells_of(&w)?;
    let predicted = predict_eigenvalues(&wells, dim)?;
    let truth = dos_histogram(&values, lo, hi, args.bins)?;
    let pred = dos_histogram(&predicted, lo, hi, args.bins)?;
    let tv = total_variation(&truth, &pred)?;

    let mut t = Table::new(&["bin_lo", "bin_hi", "count_true", "count_predicted"]);
    for i in 0..args.bins {
        t.push(vec![
            fmt_real(truth.edge(i)),
            fmt_real(truth.edge(i + 1)),
            truth.counts[i].to_string(),
            pred.counts[i].to_string(),
        ]);
    }
    t.write(tagged(&c.out, "dos", c.seed, "csv"))?;
    let results = json!({
        "eigenvalues_in_range": truth.total(),
        "predictions_in_range": pred.total(),
        "total_variation": tv,
        "eigenvalues_complete": complete,
    });
    Ok(Record::new("dos", c.seed, config(args)?, results))
}
