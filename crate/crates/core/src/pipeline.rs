//! Staged pipeline with file handoffs in one output directory.
//!
//! `synth` (optional) -> `label` -> `atlas` -> `score` -> `null` -> `stats`,
//! with `correlate` and `report` reading the same artifacts. Every file
//! written starts with a `#` line carrying the tool version, command, a hash
//! of the full configuration and the seed; all readers skip such lines.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atlas::{assign_hashtag_nationalities, read_atlas, write_atlas, write_distributions, Atlas, DEFAULT_ENTROPY_THRESHOLD};
use crate::attachment::{
    annotate_language, compute_scores, read_score_rows, read_scores, write_replicate_scores, write_scores, AccClass, AttachmentScore,
    Counting, LanguageCutoffs, LanguageTable, ScoreConfig, ScoreTable, DEFAULT_MIN_HASHTAGS,
};
use crate::corpus::{load_friends, load_posts, Canonicalizer, Post, DEFAULT_STRIP_SET};
use crate::covariates::{
    grouped_correlations, individual_correlations, join_covariates, CorrelationTable, CovariateSources, DeltaMode, ExtraTable,
    HofstedeTable, PairTable, DEFAULT_MIN_GROUP_SIZE,
};
use crate::error::{Error, Result};
use crate::io::open;
use crate::geo::{label_population_with_languages, read_profiles, write_lang_fractions, write_profiles, LabelConfig, NationalityWeights, Population};
use crate::nullmodel::{null_distribution, ShuffleScope, DEFAULT_REPLICATES};
use crate::report::{render_bundle, ReportInputs, DEFAULT_HISTOGRAM_BINS, DEFAULT_MIN_FLOW};
use crate::stats::{ks_two_sample, pearson, spearman, wilcoxon_rank_sum, wilcoxon_signed_rank, write_results, TestResult};
use crate::synth::{generate, PopulationSpec, SynthPaths};

pub const TOOL: &str = "mattach";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Artifact file names inside the output directory.
pub mod files {
    pub const PROFILES: &str = "profiles.csv";
    pub const LANG_FRACTIONS: &str = "lang_fractions.csv";
    pub const ATLAS: &str = "atlas.csv";
    pub const DISTRIBUTIONS: &str = "atlas_distributions.csv";
    pub const SCORES: &str = "scores.csv";
    pub const NULL_SCORES: &str = "null_scores.csv";
    pub const TESTS: &str = "tests.csv";
    pub const SUMMARY: &str = "summary.csv";
    pub const CORR_INDIVIDUAL: &str = "correlations_individual.csv";
    pub const CORR_GROUPED: &str = "correlations_grouped.csv";
    pub const REPORT_DIR: &str = "report";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Defaults to `<out>/posts.jsonl`.
    pub posts: Option<PathBuf>,
    /// Defaults to `<out>/friends.csv`.
    pub friends: Option<PathBuf>,
    /// Defaults to `<out>/hofstede.csv` when present, else the bundled table.
    pub hofstede: Option<PathBuf>,
    /// Defaults to `<out>/pairs.csv` when present, else no pair covariates.
    pub pairs: Option<PathBuf>,
    /// Merged over the bundled table; defaults to `<out>/dest_languages.csv` when present.
    pub dest_languages: Option<PathBuf>,
    /// Extra covariate tables keyed by `country` or `origin,destination`.
    pub covariates: Vec<PathBuf>,
    pub out: PathBuf,
    pub year: i32,
    pub entropy_threshold: f64,
    pub min_hashtags: usize,
    pub replicates: usize,
    pub seed: u64,
    pub counting: Counting,
    pub filter_basis: Counting,
    pub nationality_weights: NationalityWeights,
    pub min_evidence: usize,
    pub strip_set: String,
    pub shuffle_scope: ShuffleScope,
    pub delta_mode: DeltaMode,
    pub lang_hi: f64,
    pub lang_lo: f64,
    pub min_group: usize,
    pub min_flow: usize,
    pub histogram_bins: usize,
    pub synth: PopulationSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            posts: None,
            friends: None,
            hofstede: None,
            pairs: None,
            dest_languages: None,
            covariates: Vec::new(),
            out: PathBuf::from("out"),
            year: 2018,
            entropy_threshold: DEFAULT_ENTROPY_THRESHOLD,
            min_hashtags: DEFAULT_MIN_HASHTAGS,
            replicates: DEFAULT_REPLICATES,
            seed: 42,
            counting: Counting::Uses,
            filter_basis: Counting::Uses,
            nationality_weights: NationalityWeights::default(),
            min_evidence: 0,
            strip_set: DEFAULT_STRIP_SET.iter().collect(),
            shuffle_scope: ShuffleScope::ScoredMigrants,
            delta_mode: DeltaMode::Absolute,
            lang_hi: LanguageCutoffs::default().hi,
            lang_lo: LanguageCutoffs::default().lo,
            min_group: DEFAULT_MIN_GROUP_SIZE,
            min_flow: DEFAULT_MIN_FLOW,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            synth: PopulationSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.entropy_threshold) {
            return bad(format!("entropy threshold {} outside [0, 1]", self.entropy_threshold));
        }
        if self.min_hashtags == 0 {
            return bad("min hashtags must be at least 1".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(0.0..=self.lang_hi).contains(&self.lang_lo) || self.lang_hi > 1.0 {
            return bad(format!("language cutoffs need 0 <= lo <= hi <= 1 (got {}, {})", self.lang_lo, self.lang_hi));
        }
        if self.histogram_bins == 0 {
            return bad("histogram bins must be at least 1".into());
        }
        self.label_config().validate()
    }

    /// SHA-256 over the JSON form of every field except the output directory,
    /// so the same analysis gives the same bytes wherever it is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Header comment written at the top of every output.
    pub fn header(&self, command: &str) -> String {
        format!(
            "# tool={TOOL} version={VERSION} command={command} config_hash={} seed={}\n",
            self.hash(),
            self.seed
        )
    }

    pub fn label_config(&self) -> LabelConfig {
        LabelConfig {
            year: self.year,
            weights: self.nationality_weights,
            min_evidence: self.min_evidence,
        }
    }

    pub fn score_config(&self) -> ScoreConfig {
        ScoreConfig {
            year: self.year,
            min_hashtags: self.min_hashtags,
            counting: self.counting,
            filter_basis: self.filter_basis,
        }
    }

    pub fn canonicalizer(&self) -> Canonicalizer {
        Canonicalizer::with_strip_set(self.strip_set.chars())
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn posts_path(&self) -> PathBuf {
        self.posts.clone().unwrap_or_else(|| self.artifact("posts.jsonl"))
    }

    fn friends_path(&self) -> PathBuf {
        self.friends.clone().unwrap_or_else(|| self.artifact("friends.csv"))
    }

    /// Explicit path, or the named file in the output directory if it exists.
    fn optional_input(&self, explicit: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
        explicit.clone().or_else(|| Some(self.artifact(name)).filter(|p| p.exists()))
    }
}

fn require(path: &Path, artifact: &str, command: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            artifact: artifact.into(),
            path: path.to_path_buf(),
            command: command.into(),
        })
    }
}

/// Writes `header` followed by whatever `body` produces.
fn emit(path: &Path, header: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let mut buf = header.as_bytes().to_vec();
    body(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path.to_path_buf())
}

fn ensure_out(config: &RunConfig) -> Result<()> {
    config.validate()?;
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))
}

fn posts(config: &RunConfig) -> Result<Vec<Post>> {
    let path = config.posts_path();
    require(&path, "posts file", "synth` or pass `--posts")?;
    let load = load_posts(&path)?;
    log::info!(
        "{}: {} posts, {} malformed lines skipped",
        path.display(),
        load.stats.yielded,
        load.stats.skipped
    );
    Ok(load.posts)
}

fn languages(config: &RunConfig) -> Result<LanguageTable> {
    let mut t = LanguageTable::builtin();
    if let Some(p) = config.optional_input(&config.dest_languages, "dest_languages.csv") {
        t.merge(LanguageTable::read(open(&p)?)?);
    }
    Ok(t)
}

fn population(config: &RunConfig) -> Result<Population> {
    let path = config.artifact(files::PROFILES);
    require(&path, "profiles", "label")?;
    let langs = config.artifact(files::LANG_FRACTIONS);
    let langs = if langs.exists() { Some(open(&langs)?) } else { None };
    read_profiles(open(&path)?, langs)
}

fn atlas(config: &RunConfig) -> Result<Atlas> {
    let path = config.artifact(files::ATLAS);
    require(&path, "atlas", "atlas")?;
    let dists = config.artifact(files::DISTRIBUTIONS);
    let dists = if dists.exists() { Some(open(&dists)?) } else { None };
    read_atlas(open(&path)?, dists, config.entropy_threshold)
}

fn scores(config: &RunConfig) -> Result<ScoreTable> {
    let path = config.artifact(files::SCORES);
    require(&path, "scores", "score")?;
    read_scores(open(&path)?)
}

fn null_rows(config: &RunConfig) -> Result<Vec<(usize, AttachmentScore)>> {
    let path = config.artifact(files::NULL_SCORES);
    require(&path, "null-model scores", "null")?;
    Ok(read_score_rows(open(&path)?)?
        .into_iter()
        .map(|(r, s)| (r.unwrap_or(0), s))
        .collect())
}

/// Residence and nationality for every user.
pub fn cmd_label(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let posts = posts(config)?;
    let friends_path = config.friends_path();
    require(&friends_path, "friends file", "synth` or pass `--friends")?;
    let friends = load_friends(&friends_path)?;
    let langs = (config.nationality_weights.language != 0.0)
        .then(|| languages(config))
        .transpose()?;
    let pop = label_population_with_languages(&posts, &friends, &config.label_config(), langs.as_ref().map(|l| &l.0));
    let header = config.header("label");
    Ok(vec![
        emit(&config.artifact(files::PROFILES), &header, |b| write_profiles(b, &pop))?,
        emit(&config.artifact(files::LANG_FRACTIONS), &header, |b| write_lang_fractions(b, &pop))?,
    ])
}

/// Hashtag nationality assignments from natives' usage.
pub fn cmd_atlas(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let pop = population(config)?;
    let posts = posts(config)?;
    let atlas = assign_hashtag_nationalities(&posts, &pop, config.year, config.entropy_threshold, &config.canonicalizer())?;
    log::info!("atlas: {} hashtags, {} country-specific", atlas.len(), atlas.n_assigned());
    let header = config.header("atlas");
    Ok(vec![
        emit(&config.artifact(files::ATLAS), &header, |b| write_atlas(b, &atlas))?,
        emit(&config.artifact(files::DISTRIBUTIONS), &header, |b| write_distributions(b, &atlas))?,
    ])
}

fn language_cutoffs(config: &RunConfig) -> LanguageCutoffs {
    LanguageCutoffs {
        hi: config.lang_hi,
        lo: config.lang_lo,
    }
}

/// HA and DA per migrant, with quadrant classes and destination-language status.
pub fn cmd_score(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let pop = population(config)?;
    let atlas = atlas(config)?;
    let posts = posts(config)?;
    let mut table = compute_scores(&posts, &pop, &atlas, &config.score_config(), &config.canonicalizer());
    annotate_language(&mut table, &pop, &languages(config)?, language_cutoffs(config));
    log::info!(
        "scored {} migrants: mean HA {:.4}, mean DA {:.4}, splits HA {:.4} DA {:.4}",
        table.len(),
        table.mean_ha(),
        table.mean_da(),
        table.splits.ha,
        table.splits.da
    );
    let header = config.header("score");
    Ok(vec![emit(&config.artifact(files::SCORES), &header, |b| write_scores(b, &table))?])
}

/// Scores recomputed on shuffled hashtags, one block per replicate.
pub fn cmd_null(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let pop = population(config)?;
    let atlas = atlas(config)?;
    require(&config.artifact(files::SCORES), "scores", "score")?;
    let posts = posts(config)?;
    let model = null_distribution(
        &posts,
        &pop,
        &atlas,
        &config.score_config(),
        config.replicates,
        config.seed,
        config.shuffle_scope,
        &config.canonicalizer(),
    )?;
    let reps: Vec<(usize, &ScoreTable)> = model.runs.iter().map(|r| (r.replicate_index, &r.scores)).collect();
    let header = config.header("null");
    Ok(vec![emit(&config.artifact(files::NULL_SCORES), &header, |b| write_replicate_scores(b, &reps))?])
}

fn push_test(rows: &mut Vec<(String, TestResult)>, name: &str, r: Result<TestResult>) {
    match r {
        Ok(t) => rows.push((name.to_string(), t)),
        Err(e) => log::warn!("skipping {name}: {e}"),
    }
}

/// Real vs null, HA vs DA, and speakers vs non-speakers comparisons.
pub fn cmd_stats(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let table = scores(config)?;
    let null = null_rows(config)?;
    let ha: Vec<f64> = table.scores.iter().map(|s| s.ha).collect();
    let da: Vec<f64> = table.scores.iter().map(|s| s.da).collect();
    let ha0: Vec<f64> = null.iter().map(|(_, s)| s.ha).collect();
    let da0: Vec<f64> = null.iter().map(|(_, s)| s.da).collect();
    let cohort = |speaks: bool, f: fn(&AttachmentScore) -> f64| -> Vec<f64> {
        table
            .scores
            .iter()
            .filter(|s| s.speaks_dest_lang == Some(speaks))
            .map(f)
            .collect()
    };
    let (sp_ha, sp_da) = (cohort(true, |s| s.ha), cohort(true, |s| s.da));
    let (ns_ha, ns_da) = (cohort(false, |s| s.ha), cohort(false, |s| s.da));

    let mut rows = Vec::new();
    push_test(&mut rows, "ha_vs_null", wilcoxon_rank_sum(&ha, &ha0));
    push_test(&mut rows, "ha_vs_null", ks_two_sample(&ha, &ha0));
    push_test(&mut rows, "da_vs_null", wilcoxon_rank_sum(&da, &da0));
    push_test(&mut rows, "da_vs_null", ks_two_sample(&da, &da0));
    push_test(&mut rows, "ha_vs_da", pearson(&ha, &da));
    push_test(&mut rows, "ha_vs_da", spearman(&ha, &da));
    push_test(&mut rows, "ha_vs_da", wilcoxon_signed_rank(&ha, &da));
    push_test(&mut rows, "ha_speakers_vs_non", wilcoxon_rank_sum(&sp_ha, &ns_ha));
    push_test(&mut rows, "da_speakers_vs_non", wilcoxon_rank_sum(&sp_da, &ns_da));

    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut summary: Vec<(String, String)> = vec![
        ("n_scored".into(), table.len().to_string()),
        ("mean_ha".into(), mean(&ha).to_string()),
        ("mean_da".into(), mean(&da).to_string()),
        ("mean_ha_null".into(), mean(&ha0).to_string()),
        ("mean_da_null".into(), mean(&da0).to_string()),
        ("split_ha".into(), table.splits.ha.to_string()),
        ("split_da".into(), table.splits.da.to_string()),
        ("n_speakers".into(), sp_ha.len().to_string()),
        ("n_non_speakers".into(), ns_ha.len().to_string()),
        ("mean_ha_speakers".into(), mean(&sp_ha).to_string()),
        ("mean_da_speakers".into(), mean(&sp_da).to_string()),
        ("mean_ha_non_speakers".into(), mean(&ns_ha).to_string()),
        ("mean_da_non_speakers".into(), mean(&ns_da).to_string()),
    ];
    for c in AccClass::ALL {
        let n = table.scores.iter().filter(|s| s.acc_class == c).count();
        summary.push((format!("n_{c}"), n.to_string()));
    }
    let header = config.header("stats");
    Ok(vec![
        emit(&config.artifact(files::TESTS), &header, |b| write_results(b, &rows))?,
        emit(&config.artifact(files::SUMMARY), &header, |b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["quantity", "value"])?;
            for (k, v) in &summary {
                w.write_record([k, v])?;
            }
            w.flush()?;
            Ok(())
        })?,
    ])
}

/// Covariate sources named by the configuration.
pub fn covariate_sources(config: &RunConfig) -> Result<CovariateSources> {
    let hofstede = match config.optional_input(&config.hofstede, "hofstede.csv") {
        Some(p) => HofstedeTable::read(open(&p)?)?,
        None => HofstedeTable::builtin(),
    };
    let pairs = config
        .optional_input(&config.pairs, "pairs.csv")
        .map(|p| PairTable::read(open(&p)?))
        .transpose()?;
    let extras = config
        .covariates
        .iter()
        .map(|p| ExtraTable::read(open(p)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CovariateSources {
        hofstede: Some(hofstede),
        pairs,
        extras,
        delta_mode: config.delta_mode,
    })
}

/// Individual-level and grouped correlation tables.
pub fn cmd_correlate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let table = scores(config)?;
    let mut joined = join_covariates(&table.scores, &covariate_sources(config)?);
    log::info!("joined {} migrants to covariates, dropped {}", joined.rows.len(), joined.dropped);
    for c in joined.drop_constant_columns() {
        log::warn!("covariate {c} is constant over the joined migrants; left out");
    }
    let individual = individual_correlations(&joined)?;
    let grouped = match grouped_correlations(&joined, config.min_group) {
        Ok(t) => t,
        Err(e @ Error::InsufficientGroups { .. }) | Err(e @ Error::ZeroVariance(_)) => {
            log::warn!("grouped correlations not computed: {e}");
            CorrelationTable::default()
        }
        Err(e) => return Err(e),
    };
    let header = config.header("correlate");
    Ok(vec![
        emit(&config.artifact(files::CORR_INDIVIDUAL), &header, |b| individual.write(b))?,
        emit(&config.artifact(files::CORR_GROUPED), &header, |b| grouped.write(b))?,
    ])
}

/// The five plot-data tables under `<out>/report/`.
pub fn cmd_report(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let pop = population(config)?;
    let atlas = atlas(config)?;
    let table = scores(config)?;
    let null = null_rows(config)?;
    let dir = config.artifact(files::REPORT_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let header = config.header("report");
    let bundle = render_bundle(&ReportInputs {
        population: &pop,
        atlas: &atlas,
        scores: &table,
        null: &null,
        min_flow: config.min_flow,
        min_group: config.min_group,
        bins: config.histogram_bins,
    })?;
    bundle
        .into_iter()
        .map(|(name, body)| {
            emit(&dir.join(name), &header, |b| {
                b.extend_from_slice(&body);
                Ok(())
            })
        })
        .collect()
}

/// Synthetic corpus into the output directory; the run seed and year
/// override those in the population spec.
pub fn cmd_synth(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out(config)?;
    let mut spec = config.synth.clone();
    spec.seed = config.seed;
    spec.year = config.year;
    let corpus = generate(&spec)?;
    log::info!(
        "generated {} users ({} migrants), {} posts",
        corpus.truth.len(),
        corpus.migrants().count(),
        corpus.posts.len()
    );
    let SynthPaths {
        posts,
        friends,
        truth,
        hofstede,
        pairs,
        languages,
    } = corpus.write(&config.out, &config.header("synth"))?;
    Ok(vec![posts, friends, truth, hofstede, pairs, languages])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Label,
    Atlas,
    Score,
    Null,
    Stats,
    Correlate,
    Report,
    Synth,
}

impl Command {
    /// The analysis chain in dependency order (without `synth`).
    pub const CHAIN: [Command; 7] = [
        Command::Label,
        Command::Atlas,
        Command::Score,
        Command::Null,
        Command::Stats,
        Command::Correlate,
        Command::Report,
    ];

    pub fn run(self, config: &RunConfig) -> Result<Vec<PathBuf>> {
        match self {
            Command::Label => cmd_label(config),
            Command::Atlas => cmd_atlas(config),
            Command::Score => cmd_score(config),
            Command::Null => cmd_null(config),
            Command::Stats => cmd_stats(config),
            Command::Correlate => cmd_correlate(config),
            Command::Report => cmd_report(config),
            Command::Synth => cmd_synth(config),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.min_hashtags = 11;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.synth.noise = 0.5;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn toml_overrides_defaults() {
        let c = RunConfig::from_toml("year = 2017\nreplicates = 3\n[synth]\nn_users = 500\n").unwrap();
        assert_eq!((c.year, c.replicates, c.synth.n_users), (2017, 3, 500));
        assert_eq!(c.entropy_threshold, 0.5);
        assert!(RunConfig::from_toml("yaer = 2017").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.entropy_threshold = 1.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.replicates = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_upstream_names_command() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            out: dir.path().to_path_buf(),
            ..Default::default()
        };
        let err = cmd_score(&config).unwrap_err();
        assert!(matches!(err, Error::MissingArtifact { ref command, .. } if command == "label"));
        fs::write(config.artifact(files::PROFILES), "user_id,residence,nationality,is_migrant\n").unwrap();
        let err = cmd_score(&config).unwrap_err().to_string();
        assert!(err.contains("run `atlas` first"), "{err}");
    }
}
