//! One function per subcommand. Each loads its inputs, runs one stage, writes
//! its outputs and prints the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use serde_json::json;
use triplet_embed::data::{write_matrix_tsv, ColumnOrder, LoadOptions};
use triplet_embed::interp::{default_lambda_grid, fit_ridge_cv, RidgeCvConfig, META_FILE, WEIGHTS_FILE};
use triplet_embed::io_util::{read_to_string, write_atomic, write_json};
use triplet_embed::relevance::{aggregate_relevance, rank_by_divergence};
use triplet_embed::reliability::{select_best_run, split_half_reliability};
use triplet_embed::rsa::{
    cumulative_rsa, match_dimensions, rank_by_column_sum, reconstruct_rsm, rsm_pearson, variance_explained_vs_ceiling,
    MetricTag, ReconstructMode, Rsm,
};
use triplet_embed::synthetic::SparseTruth;
use triplet_embed::triplet_sim::{sample_triplet_dataset_with, SampleOptions, TieRule};
use triplet_embed::vice::{self, PriorConfig, TrainConfig};
use triplet_embed::{DimensionLabel, DimensionLabelTable, Error, FeatureMatrix, PointEmbedding, TripletDataset};

use crate::manifest::Manifest;
use crate::report;
use crate::*;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Reliability(a) => reliability(a),
        Command::Rsa(a) => rsa(a),
        Command::MatchDims(a) => match_dims(a),
        Command::CumulativeRsa(a) => cumulative(a),
        Command::Jackknife(a) => jackknife(a),
        Command::Ridge(a) => ridge(a),
        Command::Report(a) => report::run(a),
        Command::Synth(a) => synth(a),
    }
}

fn features(dir: &Path, allow_raw: bool) -> Result<FeatureMatrix> {
    FeatureMatrix::load(dir, LoadOptions { allow_raw }).with_context(|| format!("loading features from {}", dir.display()))
}

fn triplets(path: &Path, order: &str, n_objects: Option<usize>) -> Result<TripletDataset> {
    let order = ColumnOrder::from_str(order)?;
    TripletDataset::load(path, order, n_objects).with_context(|| format!("loading triplets from {}", path.display()))
}

fn embedding(path: &Path) -> Result<PointEmbedding> {
    PointEmbedding::load(path).with_context(|| format!("loading embedding from {}", path.display()))
}

/// `auto` picks exact or sampled reconstruction from the number of objects.
fn mode(spec: &str, seed: u64, n_objects: usize) -> Result<ReconstructMode> {
    if spec == "auto" {
        Ok(ReconstructMode::auto(n_objects, seed))
    } else {
        Ok(ReconstructMode::parse(spec, seed)?)
    }
}

fn mode_json(mode: ReconstructMode) -> serde_json::Value {
    match mode {
        ReconstructMode::Exact => json!("exact"),
        ReconstructMode::Sampled { contexts, .. } => json!(format!("sampled:{contexts}")),
    }
}

/// Non-negative integers, one per line; blank lines and `#` comments skipped.
fn read_indices(path: &Path) -> Result<Vec<usize>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg: format!("expected a non-negative integer, found {line:?}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

fn validate(a: &ValidateArgs) -> Result<()> {
    if a.features.is_none() && a.triplets.is_none() && a.embedding.is_none() {
        return Err(Error::invalid("validate needs --features, --triplets or --embedding").into());
    }
    if a.labels.is_some() && a.embedding.is_none() {
        return Err(Error::invalid("--labels is checked against --embedding, which is missing").into());
    }
    let mut m = Manifest::start("validate");
    let mut result = serde_json::Map::new();
    if let Some(dir) = &a.features {
        m.input("features", dir);
        let fm = features(dir, a.allow_raw)?;
        result.insert(
            "features".into(),
            json!({"n_objects": fm.n_objects(), "n_features": fm.n_features()}),
        );
    }
    if let Some(path) = &a.triplets {
        m.input("triplets", path);
        let ds = triplets(path, &a.column_order, a.n_objects)?;
        result.insert(
            "triplets".into(),
            json!({"n_triplets": ds.len(), "n_objects": ds.n_objects}),
        );
    }
    if let Some(path) = &a.embedding {
        m.input("embedding", path);
        let e = embedding(path)?;
        result.insert(
            "embedding".into(),
            json!({"n_objects": e.n_objects(), "n_dims": e.n_dims(), "dim_ids": e.dim_ids()}),
        );
        if let Some(labels) = &a.labels {
            m.input("labels", labels);
            DimensionLabelTable::load(labels, e.n_dims())?;
            result.insert("labels".into(), json!("ok"));
        }
    }
    m.finish(result.into());
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut m = Manifest::start("simulate");
    m.input("features", &a.features);
    m.seed = Some(a.seed);
    let fm = features(&a.features, a.allow_raw)?;
    let opts = SampleOptions {
        n: a.n,
        seed: a.seed,
        tie_rule: TieRule::from_str(&a.tie_rule)?,
        allow_repeats: a.allow_repeats,
    };
    let ds = sample_triplet_dataset_with(&fm, &opts)?;
    ds.save(&a.out)?;
    m.output(&a.out);
    m.finish(json!({"n_triplets": ds.len(), "n_objects": ds.n_objects}));
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let mut m = Manifest::start("train");
    m.input("triplets", &a.triplets);
    m.seed = Some(a.seed);
    let cfg = TrainConfig {
        p_init: a.p_init,
        batch_size: a.batch_size,
        max_epochs: a.max_epochs,
        stability_window: a.stability_window,
        mc_samples: a.mc_samples,
        learning_rate: a.learning_rate,
        prune_every: a.prune_every,
        keep_prob_threshold: a.keep_prob_threshold,
        min_objects: a.min_objects,
        seed: a.seed,
        val_fraction: a.val_fraction,
        init_mu_scale: a.init_mu_scale,
        init_sigma: a.init_sigma,
    };
    cfg.validate()?;
    let prior = PriorConfig::new(a.pi, a.sigma_spike, a.sigma_slab)?;
    let ds = triplets(&a.triplets, &a.column_order, a.n_objects)?;
    let model = vice::train(&ds, &cfg, &prior)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    vice::save_model_dir(&a.out, &model)?;
    for f in [vice::EMBEDDING_MU, vice::EMBEDDING_SIGMA, vice::EMBEDDING_PRUNED, vice::TRAIN_LOG] {
        m.output(&a.out.join(f));
    }
    let log = &model.log;
    m.finish(json!({
        "n_active": log.active_dims.len(),
        "active_dims": log.active_dims,
        "epochs_run": log.epochs_run,
        "stop_reason": log.stop_reason,
        "final_val_accuracy": log.final_val_accuracy,
    }));
    Ok(())
}

fn reliability(a: &ReliabilityArgs) -> Result<()> {
    let mut m = Manifest::start("reliability");
    let mut paths: Vec<PathBuf> = glob::glob(&a.runs)
        .map_err(|e| Error::invalid(format!("bad glob {:?}: {e}", a.runs)))?
        .collect::<std::result::Result<_, _>>()
        .context("expanding run glob")?;
    paths.sort();
    if paths.len() < 2 {
        return Err(Error::invalid(format!(
            "{:?} matched {} run(s); reliability needs at least 2",
            a.runs,
            paths.len()
        ))
        .into());
    }
    let mut runs: Vec<Array2<f64>> = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        m.input(&format!("run{i}"), p);
        let values = if p.is_dir() {
            vice::load_full_point_estimate(p)
        } else {
            PointEmbedding::load_tsv(p).map(PointEmbedding::into_values)
        }
        .with_context(|| format!("loading run {}", p.display()))?;
        runs.push(values);
    }
    let views: Vec<_> = runs.iter().map(|r| r.view()).collect();
    let scores = split_half_reliability(&views)?;
    let best = select_best_run(&scores.iter().map(|s| s.score).collect::<Vec<_>>())?;
    let report = json!({
        "runs": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "best_run": best,
        "best_path": paths[best].display().to_string(),
        "scores": scores,
    });
    write_json(&a.out, &report)?;
    m.output(&a.out);
    m.finish(json!({
        "best_run": best,
        "best_path": paths[best].display().to_string(),
        "scores": scores.iter().map(|s| s.score).collect::<Vec<_>>(),
    }));
    Ok(())
}

fn rsa(a: &RsaArgs) -> Result<()> {
    let mut m = Manifest::start("rsa");
    m.input("embedding_a", &a.embedding_a);
    m.input("embedding_b", &a.embedding_b);
    m.seed = Some(a.seed);
    let ea = embedding(&a.embedding_a)?;
    let eb = embedding(&a.embedding_b)?;
    if ea.n_objects() != eb.n_objects() {
        return Err(Error::Incompatible(format!(
            "embedding A has {} objects, embedding B has {}",
            ea.n_objects(),
            eb.n_objects()
        ))
        .into());
    }
    let mode = mode(&a.mode, a.seed, ea.n_objects())?;
    let mut ra = reconstruct_rsm(ea.values(), mode)?;
    let mut rb = reconstruct_rsm(eb.values(), mode)?;
    if let Some(dir) = &a.save_rsms {
        for (name, rsm) in [("rsm_a.tsv", &ra), ("rsm_b.tsv", &rb)] {
            let p = dir.join(name);
            rsm.save_tsv(&p)?;
            m.output(&p);
        }
    }
    let mut subset_size = None;
    if let Some(path) = &a.subset {
        m.input("subset", path);
        let idx = read_indices(path)?;
        ra = ra.subset(&idx)?;
        rb = rb.subset(&idx)?;
        subset_size = Some(idx.len());
    }
    let r = rsm_pearson(&ra, &rb)?;
    let ve = a
        .noise_ceiling
        .map(|c| variance_explained_vs_ceiling(&ra, &rb, Some(c)))
        .transpose()?;
    let report = json!({
        "n_objects": ra.size(),
        "subset_size": subset_size,
        "mode": mode_json(mode),
        "metric": MetricTag::SoftmaxChoiceProb,
        "dims_a": ea.n_dims(),
        "dims_b": eb.n_dims(),
        "r": r,
        "r2": r * r,
        "noise_ceiling": a.noise_ceiling,
        "variance_explained_vs_ceiling": ve,
    });
    write_json(&a.out, &report)?;
    m.output(&a.out);
    m.finish(report);
    Ok(())
}

fn match_dims(a: &MatchDimsArgs) -> Result<()> {
    let mut m = Manifest::start("match-dims");
    m.input("source", &a.source);
    m.input("target", &a.target);
    let s = embedding(&a.source)?;
    let t = embedding(&a.target)?;
    let matches = match_dimensions(s.values(), t.values(), a.with_replacement)?;
    let mut tsv = String::from("source\ttarget\tsource_id\ttarget_id\tr\n");
    for p in &matches {
        writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{}",
            p.source,
            p.target,
            s.dim_ids()[p.source],
            t.dim_ids()[p.target],
            p.r
        )
        .unwrap();
    }
    write_atomic(&a.out, tsv.as_bytes())?;
    m.output(&a.out);
    let mean_r = matches.iter().map(|p| p.r).sum::<f64>() / matches.len().max(1) as f64;
    m.finish(json!({"n_matches": matches.len(), "mean_r": mean_r, "with_replacement": a.with_replacement}));
    Ok(())
}

fn cumulative(a: &CumulativeRsaArgs) -> Result<()> {
    let mut m = Manifest::start("cumulative-rsa");
    m.input("source", &a.source);
    m.seed = Some(a.seed);
    let source = embedding(&a.source)?;
    let mode = mode(&a.mode, a.seed, source.n_objects())?;
    let target = match (&a.target, &a.target_rsm) {
        (Some(p), None) => {
            m.input("target", p);
            reconstruct_rsm(embedding(p)?.values(), mode)?
        }
        (None, Some(p)) => {
            m.input("target_rsm", p);
            Rsm::load_tsv(p, MetricTag::SoftmaxChoiceProb)?
        }
        _ => bail!(Error::invalid("give exactly one of --target and --target-rsm")),
    };
    let ranking = match &a.ranking {
        Some(p) => {
            m.input("ranking", p);
            read_indices(p)?
        }
        None => rank_by_column_sum(source.values()),
    };
    let curve = cumulative_rsa(&target, source.values(), &ranking, mode)?;
    write_atomic(&a.out, curve.to_tsv().as_bytes())?;
    m.output(&a.out);
    m.finish(json!({
        "mode": mode_json(mode),
        "full_r": curve.full_r,
        "k95": curve.k95,
        "n_points": curve.points.len(),
    }));
    Ok(())
}

fn jackknife(a: &JackknifeArgs) -> Result<()> {
    let mut m = Manifest::start("jackknife");
    m.input("embedding", &a.embedding);
    m.input("triplets", &a.triplets);
    let e = embedding(&a.embedding)?;
    let ds = triplets(&a.triplets, &a.column_order, Some(e.n_objects()))?;
    let labels = match &a.labels {
        Some(p) => {
            m.input("labels", p);
            DimensionLabelTable::load(p, e.n_dims())?
        }
        None => DimensionLabelTable::uniform(DimensionLabel::Unclear, e.n_dims()),
    };
    let (summary, per) = aggregate_relevance(e.values(), &ds, &labels)?;
    let divergent = match &a.rank_by_divergence {
        Some(p) => {
            m.input("other_embedding", p);
            let other = embedding(p)?;
            let mut ranked = rank_by_divergence(e.values(), other.values(), &ds)?;
            ranked.truncate(a.top);
            Some(ranked)
        }
        None => None,
    };
    let report = json!({
        "dim_ids": e.dim_ids(),
        "summary": summary,
        "divergent": divergent,
    });
    write_json(&a.out, &report)?;
    m.output(&a.out);
    if let Some(path) = &a.details {
        let mut tsv = String::from("index\tpair_a\tpair_b\todd\tp_full\twinner\twinner_delta\twinner_abs\n");
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        for (r, t) in per.iter().zip(&ds.records) {
            writeln!(
                tsv,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.index,
                t.pair_a(),
                t.pair_b(),
                t.odd(),
                r.p_full,
                opt(r.winner),
                r.winner_delta.map_or(String::new(), |v| v.to_string()),
                opt(r.winner_abs)
            )
            .unwrap();
        }
        write_atomic(path, tsv.as_bytes())?;
        m.output(path);
    }
    m.finish(json!({
        "n_triplets": summary.n_triplets,
        "n_no_winner": summary.n_no_winner,
        "mean_p_full": summary.mean_p_full,
        "signed": summary.signed.fractions,
        "absolute": summary.absolute.fractions,
    }));
    Ok(())
}

fn ridge(a: &RidgeArgs) -> Result<()> {
    let mut m = Manifest::start("ridge");
    m.input("features", &a.features);
    m.input("embedding", &a.embedding);
    m.seed = Some(a.seed);
    let fm = features(&a.features, a.allow_raw)?;
    let e = embedding(&a.embedding)?;
    if fm.n_objects() != e.n_objects() {
        return Err(Error::Incompatible(format!(
            "features cover {} objects, embedding covers {}",
            fm.n_objects(),
            e.n_objects()
        ))
        .into());
    }
    let cfg = RidgeCvConfig {
        lambdas: a.lambdas.clone().unwrap_or_else(default_lambda_grid),
        folds: a.folds,
        seed: a.seed,
    };
    let models = fit_ridge_cv(fm.to_f64().view(), e.values(), e.dim_ids(), &cfg)?;
    models.save(&a.out)?;
    m.output(&a.out.join(WEIGHTS_FILE));
    m.output(&a.out.join(META_FILE));
    m.finish(json!({
        "n_features": models.meta.n_features,
        "n_dims": models.meta.n_dims,
        "lambdas": models.meta.lambdas,
        "r2_heldout": models.meta.r2_heldout,
    }));
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut m = Manifest::start("synth");
    m.seed = Some(a.seed);
    if a.objects < 3 || a.dims == 0 || !(a.density > 0.0 && a.density <= 1.0) {
        return Err(Error::invalid("synth needs at least 3 objects, 1 dimension and density in (0, 1]").into());
    }
    let truth = SparseTruth {
        n_objects: a.objects,
        n_dims: a.dims,
        density: a.density,
        ..Default::default()
    };
    let w = truth.generate(a.seed);
    let fm = FeatureMatrix::with_default_ids(w.mapv(|v| v as f32))?;
    fm.save(&a.out)?;
    let truth_path = a.out.join("truth.tsv");
    write_matrix_tsv(&truth_path, &(0..a.dims).collect::<Vec<_>>(), w.view())?;
    m.output(&a.out);
    m.output(&truth_path);
    m.finish(json!({"n_objects": a.objects, "n_dims": a.dims}));
    Ok(())
}
