use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use xppg_core::acoustics::AcousticConfig;
use xppg_core::corpus::{
    encode_matrix_f64, load_corpus_bundles, load_manifest, read_wav, write_manifest, write_wav,
    AudioBuffer, Manifest,
};
use xppg_core::eval::{
    acoustic_measures, evaluate_methods, format_score, icc_2k, read_scores_csv,
    run_cross_matrix, run_noise_sweep, run_subsample_curve, summary_text, write_cross_csv,
    write_evaluation_csv, write_scores_csv, write_subsample_csv, write_sweep_csv, AcousticMeasure,
    AcousticScorer, AudioScorer, CorpusSpec, FusionSettings, RatingsMatrix, RefMetric, ScoreTable,
    SweepConfig, UtteranceScores, XppgScorer, XPPG_METHOD,
};
use xppg_core::extract::{SpectralConfig, SpectralExtractor};
use xppg_core::fusion::{FusedVector, MomentConfig};
use xppg_core::noise::{mix_utterance, NoiseSource};
use xppg_core::pca::{PcaModel, PcaOptions};
use xppg_core::pipeline::{fit_bundles, fuse_all, meta_for};
use xppg_core::refmetrics::{read_phoneme_file, read_subset_file, PhonemeSeq};
use xppg_core::synth::{generate, SynthConfig};
use xppg_core::Error;

use crate::args::*;

fn out_dir(o: &Out) -> Result<&Path> {
    fs::create_dir_all(&o.out).with_context(|| format!("creating {}", o.out.display()))?;
    Ok(&o.out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn settings(f: &Fusion) -> Result<FusionSettings> {
    Ok(FusionSettings {
        mode: f.mode,
        moments: MomentConfig::new(f.moments)?,
    })
}

fn pca_options(c: &Centering) -> PcaOptions {
    PcaOptions {
        centered: c.centering == Switch::On,
        ..PcaOptions::default()
    }
}

fn acoustic_config(a: &Acoustic) -> Result<AcousticConfig> {
    let mut cfg = AcousticConfig::default();
    if let Some(v) = a.frame_ms {
        cfg.frame_s = v / 1000.0;
    }
    if let Some(v) = a.hop_ms {
        cfg.hop_s = v / 1000.0;
    }
    if let Some(v) = a.f0_min {
        cfg.f0_min_hz = v;
    }
    if let Some(v) = a.f0_max {
        cfg.f0_max_hz = v;
    }
    if let Some(v) = a.voicing_threshold {
        cfg.voicing_threshold = v;
    }
    if let Some(v) = a.silence_threshold {
        cfg.silence_threshold = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn noise_source(n: &Noise) -> NoiseSource {
    match (&n.noise_dir, n.synthetic) {
        (Some(dir), _) => NoiseSource::Dir(dir.clone()),
        (None, Some(kind)) => NoiseSource::Synthetic(kind),
        (None, None) => unreachable!("clap requires one noise source"),
    }
}

fn read_audio(manifest: &Manifest) -> Result<Vec<AudioBuffer>> {
    Ok(manifest
        .records()
        .par_iter()
        .map(|r| read_wav(&r.wav_path))
        .collect::<xppg_core::Result<Vec<_>>>()?)
}

fn single_column(method: &str, values: Vec<(String, f64)>) -> Result<UtteranceScores> {
    let mut s = UtteranceScores::new(vec![method.to_string()])?;
    for (id, v) in values {
        s.push(id, vec![Some(v)])?;
    }
    Ok(s)
}

pub fn fuse(a: &FuseArgs) -> Result<()> {
    let manifest = load_manifest(&a.features.manifest)?;
    let s = settings(&a.fusion)?;
    let bundles = load_corpus_bundles(&manifest, &a.features.features)?;
    let meta = meta_for(&bundles, s.mode, s.moments)?;
    let fused = fuse_all(&bundles, s.mode, s.moments)?;
    let dim = fused[0].len();
    let flat: Vec<f64> = fused.iter().flat_map(|v| v.values().iter().copied()).collect();
    let out = out_dir(&a.out)?;
    let p = out.join("fused.xpgf");
    fs::write(&p, encode_matrix_f64(fused.len(), dim, &flat)?).with_context(|| format!("writing {}", p.display()))?;
    let mut ids = String::new();
    for r in manifest.records() {
        ids.push_str(&r.utterance_id);
        ids.push('\n');
    }
    write_text(&out.join("fused.ids"), &ids)?;
    let info = format!(
        "mode = {}\nmoments = {}\nxvec_dim = {}\nppg_units = {}\nrows = {}\ndim = {dim}\n",
        meta.mode,
        meta.moment_order,
        meta.xvec_dim,
        meta.ppg_units,
        fused.len()
    );
    write_text(&out.join("fused.meta"), &info)
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let manifest = load_manifest(&a.features.manifest)?;
    let s = settings(&a.fusion)?;
    let bundles = load_corpus_bundles(&manifest, &a.features.features)?;
    let pcafit = fit_bundles(&bundles, s.mode, s.moments, pca_options(&a.centering))?;
    let out = out_dir(&a.out)?;
    pcafit.model.save(&out.join("model.xpgpca"))?;
    let ids = manifest.records().iter().map(|r| r.utterance_id.clone());
    let scores = single_column(XPPG_METHOD, ids.zip(pcafit.train_projections).collect())?;
    write_scores_csv(&scores, &out.join("train_scores.csv"))?;
    Ok(())
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let model = PcaModel::load(&a.model)?;
    let meta = model.meta();
    let manifest = load_manifest(&a.features.manifest)?;
    let bundles = load_corpus_bundles(&manifest, &a.features.features)?;
    if let Some(b) = bundles.first() {
        if b.xvec_dim() != meta.xvec_dim || b.ppg_units() != meta.ppg_units {
            bail!(Error::InvalidInput(format!(
                "features have D_x = {}, K = {}; model was fitted on D_x = {}, K = {}",
                b.xvec_dim(),
                b.ppg_units(),
                meta.xvec_dim,
                meta.ppg_units
            )));
        }
    }
    let fused = fuse_all(&bundles, meta.mode, MomentConfig::new(meta.moment_order)?)?;
    let values = manifest
        .records()
        .iter()
        .zip(&fused)
        .map(|(r, v): (_, &FusedVector)| Ok((r.utterance_id.clone(), model.score(v)?)))
        .collect::<xppg_core::Result<Vec<_>>>()?;
    let out = out_dir(&a.out)?;
    write_scores_csv(&single_column(XPPG_METHOD, values)?, &out.join("scores.csv"))?;
    Ok(())
}

fn parse_measures(ids: &[String]) -> Result<Vec<AcousticMeasure>> {
    if ids.is_empty() {
        return Ok(AcousticMeasure::ALL.to_vec());
    }
    let mut out: Vec<AcousticMeasure> = Vec::new();
    for id in ids {
        let m: AcousticMeasure = id.parse()?;
        if out.contains(&m) {
            bail!(Error::InvalidInput(format!("measure `{id}` listed twice")));
        }
        out.push(m);
    }
    Ok(out)
}

pub fn baseline(a: &BaselineArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let measures = parse_measures(&a.measures)?;
    let cfg = acoustic_config(&a.acoustic)?;
    let rows: Vec<Vec<Option<f64>>> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let audio = read_wav(&r.wav_path)?;
            acoustic_measures(&measures, r, &audio, &cfg)
                .map_err(|e| Error::InvalidInput(format!("utterance `{}`: {e}", r.utterance_id)))
        })
        .collect::<xppg_core::Result<_>>()?;
    let mut scores = UtteranceScores::new(measures.iter().map(|m| m.id().to_string()).collect())?;
    for (r, row) in manifest.records().iter().zip(rows) {
        scores.push(r.utterance_id.clone(), row)?;
    }
    let out = out_dir(&a.out)?;
    write_scores_csv(&scores, &out.join("baseline_scores.csv"))?;
    Ok(())
}

pub fn refmetric(a: &RefmetricArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let hyps: HashMap<String, PhonemeSeq> = read_phoneme_file(&a.hyp)?.into_iter().collect();
    if let Some(id) = hyps.keys().filter(|id| manifest.get(id).is_none()).min() {
        return Err(Error::UnknownUtterance(id.clone())).context(format!("hypothesis file {}", a.hyp.display()));
    }
    let mut metrics = vec![RefMetric::Per];
    for (id, path) in [("consonant-er", &a.consonants), ("skt-er", &a.skt)] {
        if let Some(p) = path {
            metrics.push(RefMetric::Subset {
                id: id.to_string(),
                symbols: read_subset_file(p)?,
            });
        }
    }
    let mut scores = UtteranceScores::new(metrics.iter().map(|m| m.id().to_string()).collect())?;
    for r in manifest.records() {
        let hyp = hyps.get(&r.utterance_id).ok_or_else(|| {
            Error::InvalidInput(format!("utterance `{}` has no hypothesis in {}", r.utterance_id, a.hyp.display()))
        })?;
        let reference = PhonemeSeq::new(r.phoneme_ref.clone())?;
        if reference.is_empty() {
            bail!(Error::InvalidInput(format!("utterance `{}`: empty phoneme reference", r.utterance_id)));
        }
        let row = metrics
            .iter()
            .map(|m| m.percent(&reference, hyp))
            .collect::<xppg_core::Result<Vec<_>>>()?;
        scores.push(r.utterance_id.clone(), row)?;
    }
    let out = out_dir(&a.out)?;
    write_scores_csv(&scores, &out.join("refmetric_scores.csv"))?;
    Ok(())
}

/// Output gain policy shared by noise-mix and noise-sweep.
const NORMALIZATION: &str = "scale by 1/peak only when the mix peak exceeds 1";

pub fn noise_mix(a: &NoiseMixArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let source = noise_source(&a.noise);
    let out = out_dir(&a.out)?;
    let wav_dir = out.join("wav");
    fs::create_dir_all(&wav_dir).with_context(|| format!("creating {}", wav_dir.display()))?;
    let logs: Vec<String> = manifest
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let audio = read_wav(&r.wav_path)?;
            let mix = mix_utterance(&audio, i, a.snr, &source, a.seed)?;
            write_wav(&mix.mixed, &wav_dir.join(format!("{}.wav", r.utterance_id)))?;
            Ok(format!(
                "{},{},{},{},{},{}\n",
                r.utterance_id,
                format_score(a.snr),
                format_score(mix.component_snr_db()),
                format_score(mix.noise_gain),
                format_score(mix.output_gain),
                mix.noise_offset
            ))
        })
        .collect::<xppg_core::Result<_>>()?;
    let records = manifest
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.wav_path = wav_dir.join(format!("{}.wav", r.utterance_id));
            r
        })
        .collect();
    write_manifest(&Manifest::new(records)?, &out.join("manifest.csv"))?;
    let mut log = String::from("utterance_id,target_snr_db,component_snr_db,noise_gain,output_gain,noise_offset\n");
    logs.iter().for_each(|l| log.push_str(l));
    write_text(&out.join("mix_log.csv"), &log)?;
    write_text(
        &out.join("mix.meta"),
        &format!(
            "noise = {source}\nsnr_db = {}\nseed = {}\nnormalization = {NORMALIZATION}\n",
            format_score(a.snr),
            a.seed
        ),
    )
}

fn read_ratings(path: &Path) -> Result<RatingsMatrix> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("{}: row {}: `{c}` is not a number", path.display(), i + 1))
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(RatingsMatrix::new(rows)?)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let mut merged: Option<UtteranceScores> = None;
    for p in &a.scores {
        let s = read_scores_csv(p)?;
        merged = Some(match merged {
            None => s,
            Some(m) => m.merge(&s).with_context(|| format!("merging {}", p.display()))?,
        });
    }
    let scores = merged.ok_or_else(|| anyhow!(Error::InvalidInput("no score files".into())))?;
    let table = ScoreTable::build(&scores, &manifest)?;
    let results = evaluate_methods(&table);
    let out = out_dir(&a.out)?;
    write_evaluation_csv(&results, &out.join("evaluation.csv"))?;
    let mut summary = summary_text(&results);
    if let Some(p) = &a.ratings {
        let m = read_ratings(p)?;
        let icc = icc_2k(&m)?;
        let _ = writeln!(summary, "icc(2,k) = {icc:.4} ({} subjects, {} raters)", m.subjects(), m.raters());
    }
    write_text(&out.join("summary.txt"), &summary)
}

pub fn subsample(a: &SubsampleArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let scores = read_scores_csv(&a.scores)?;
    let column = scores.column(&a.method)?;
    let rows = run_subsample_curve(&column, &manifest, &a.n, a.repeats, a.seed)?;
    let out = out_dir(&a.out)?;
    write_subsample_csv(&rows, &out.join("subsample.csv"))?;
    Ok(())
}

fn parse_corpus(spec: &str) -> Result<(String, PathBuf, PathBuf)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
        bail!(Error::InvalidInput(format!("--corpus `{spec}`: expected NAME,MANIFEST,FEATURES")));
    }
    Ok((parts[0].to_string(), parts[1].into(), parts[2].into()))
}

fn select(all: &[CorpusSpec], names: &[String]) -> Result<Vec<CorpusSpec>> {
    if names.is_empty() {
        return Ok(all.to_vec());
    }
    names
        .iter()
        .map(|n| {
            all.iter()
                .find(|c| &c.name == n)
                .cloned()
                .ok_or_else(|| anyhow!(Error::InvalidInput(format!("no corpus named `{n}`"))))
        })
        .collect()
}

pub fn cross_matrix(a: &CrossMatrixArgs) -> Result<()> {
    let mut corpora: Vec<CorpusSpec> = Vec::new();
    for spec in &a.corpus {
        let (name, manifest, feature_dir) = parse_corpus(spec)?;
        if corpora.iter().any(|c| c.name == name) {
            bail!(Error::InvalidInput(format!("corpus name `{name}` given twice")));
        }
        let manifest = load_manifest(&manifest).map_err(|e| Error::in_corpus(&name, e))?;
        corpora.push(CorpusSpec {
            name,
            manifest,
            feature_dir,
        });
    }
    let train = select(&corpora, &a.train)?;
    let test = select(&corpora, &a.test)?;
    let cells = run_cross_matrix(&train, &test, settings(&a.fusion)?, pca_options(&a.centering))?;
    let out = out_dir(&a.out)?;
    write_cross_csv(&cells, &out.join("cross_matrix.csv"))?;
    Ok(())
}

pub fn synth_corpus(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        speakers: a.speakers,
        utterances: a.utterances,
        timepoints: a.timepoints,
        ..SynthConfig::new(a.seed)
    };
    let corpus = generate(&cfg)?;
    corpus.write(out_dir(&a.out)?)?;
    Ok(())
}

pub fn noise_sweep(a: &NoiseSweepArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let audio = read_audio(&manifest)?;
    let acoustic = acoustic_config(&a.acoustic)?;
    let mut scorers: Vec<Box<dyn AudioScorer>> = Vec::new();
    for id in &a.methods {
        if scorers.iter().any(|s| s.id() == id) {
            bail!(Error::InvalidInput(format!("method `{id}` listed twice")));
        }
        if id == XPPG_METHOD {
            let extractor = SpectralExtractor::new(SpectralConfig::default())?;
            let s = XppgScorer::train(extractor, settings(&a.fusion)?, pca_options(&a.centering), &audio)?;
            scorers.push(Box::new(s));
        } else {
            scorers.push(Box::new(AcousticScorer {
                measure: id.parse()?,
                config: acoustic,
            }));
        }
    }
    let refs: Vec<&dyn AudioScorer> = scorers.iter().map(|s| s.as_ref()).collect();
    let cfg = SweepConfig {
        snr_grid: a.snr_grid.clone(),
        noise: noise_source(&a.noise),
        seed: a.seed,
    };
    let rows = run_noise_sweep(&manifest, &audio, &refs, &cfg)?;
    let out = out_dir(&a.out)?;
    write_sweep_csv(&rows, &out.join("sweep.csv"))?;
    let meta = format!(
        "noise = {}\nseed = {}\ncorrelation_level = speaker-timepoint\nrmse_level = speaker-timepoint\nnormalization = {NORMALIZATION}\nxppg_features = spectral surrogate, model fitted on clean audio\n",
        cfg.noise, cfg.seed
    );
    write_text(&out.join("sweep.meta"), &meta)
}
