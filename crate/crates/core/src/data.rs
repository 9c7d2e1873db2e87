//! Dataset ingestion and synthetic cross-domain generation.
//!
//! Input files are tab-separated, one interaction per line:
//! `user_key<TAB>item_key[<TAB>weight]`. Lines starting with `#` and blank
//! lines are ignored. Keys may not contain whitespace, since they end up as
//! tokens in the model file.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    system_stats, CrossDomainSystem, DomainGraph, DomainTag, GraphBuilder, NodeId, SystemStats,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Keep the weight column instead of binarizing to 1.0.
    pub keep_weights: bool,
    /// Log and drop malformed lines instead of failing.
    pub skip_bad_lines: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainIngestSummary {
    pub lines: usize,
    pub interactions: usize,
    pub duplicates: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source: DomainIngestSummary,
    pub target: DomainIngestSummary,
    pub stats: SystemStats,
}

fn parse_line(line: &str, keep_weights: bool) -> std::result::Result<(&str, &str, f64), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 2 || fields.len() > 3 {
        return Err(format!(
            "expected 2 or 3 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let (user, item) = (fields[0], fields[1]);
    for (what, key) in [("user", user), ("item", item)] {
        if key.is_empty() {
            return Err(format!("empty {what} key"));
        }
        if key.chars().any(char::is_whitespace) {
            return Err(format!("{what} key `{key}` contains whitespace"));
        }
    }
    let weight = match fields.get(2) {
        Some(raw) => {
            let w: f64 = raw
                .trim()
                .parse()
                .map_err(|_| format!("weight `{raw}` is not a number"))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(format!("weight {w} must be positive and finite"));
            }
            if keep_weights {
                w
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    Ok((user, item, weight))
}

/// Reads one domain from a TSV stream. `path` only labels errors.
pub fn read_domain<R: BufRead>(
    reader: R,
    tag: DomainTag,
    path: &Path,
    options: &IngestOptions,
) -> Result<(DomainGraph, DomainIngestSummary)> {
    let mut builder = GraphBuilder::new();
    let mut summary = DomainIngestSummary::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        summary.lines += 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(trimmed, options.keep_weights) {
            Ok((user, item, weight)) => {
                summary.interactions += 1;
                let fresh =
                    builder.add_edge(NodeId::user(tag, user), NodeId::item(item), weight)?;
                if !fresh {
                    summary.duplicates += 1;
                    log::warn!(
                        "{}:{lineno}: duplicate pair {user} {item} collapsed",
                        path.display()
                    );
                }
            }
            Err(reason) if options.skip_bad_lines => {
                summary.skipped += 1;
                log::warn!("{}:{lineno}: skipped: {reason}", path.display());
            }
            Err(reason) => {
                return Err(Error::Ingest {
                    path: path.to_path_buf(),
                    line: lineno,
                    reason,
                })
            }
        }
    }
    let domain = DomainGraph::new(tag, builder.build())?;
    if domain.edge_count() == 0 {
        return Err(Error::EmptyDomain(tag));
    }
    Ok((domain, summary))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        })
}

/// Loads and validates a source/target pair of TSV files.
pub fn ingest(
    source_path: &Path,
    target_path: &Path,
    options: &IngestOptions,
) -> Result<(CrossDomainSystem, IngestReport)> {
    let (source, s_summary) =
        read_domain(open(source_path)?, DomainTag::Source, source_path, options)?;
    let (target, t_summary) =
        read_domain(open(target_path)?, DomainTag::Target, target_path, options)?;
    let sys = CrossDomainSystem::new(source, target)?;
    let stats = system_stats(&sys);
    Ok((
        sys,
        IngestReport {
            source: s_summary,
            target: t_summary,
            stats,
        },
    ))
}

/// Writes a domain in the ingestion format. Weights equal to 1 are left
/// implicit; isolated nodes are not representable and are dropped.
pub fn write_domain_tsv<W: Write>(domain: &DomainGraph, mut out: W) -> Result<()> {
    let g = domain.graph();
    for u in domain.user_range() {
        for (&i, &w) in g.neighbor_indices(u).iter().zip(g.neighbor_weights(u)) {
            let user = &g.node(u).local_id;
            let item = &g.node(i as usize).local_id;
            if w == 1.0 {
                writeln!(out, "{user}\t{item}")?;
            } else {
                writeln!(out, "{user}\t{item}\t{w}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users_s: usize,
    pub users_t: usize,
    pub items_s: usize,
    pub items_t: usize,
    /// Fraction of target items that also belong to the source catalog.
    pub overlap_ratio: f64,
    pub latent_dims: usize,
    /// Mean interactions per source user (geometric, at least 1).
    pub interactions_per_user_s: f64,
    /// Mean interactions per target user (geometric, at least 1).
    pub interactions_per_user_t: f64,
    /// Standard deviation of the Gaussian perturbation on affinity scores.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// A large source domain and a target with a quarter of its density.
    fn default() -> Self {
        SynthConfig {
            users_s: 2000,
            users_t: 500,
            items_s: 1500,
            items_t: 800,
            overlap_ratio: 0.4,
            latent_dims: 8,
            interactions_per_user_s: 40.0,
            interactions_per_user_t: 40.0 * 800.0 / 1500.0 / 4.0,
            noise: 0.1,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn shared_count(&self) -> usize {
        (self.overlap_ratio * self.items_t as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.users_s == 0 || self.users_t == 0 || self.items_s == 0 || self.items_t == 0 {
            return bad("user and item counts must be positive".into());
        }
        if self.latent_dims == 0 {
            return bad("latent_dims must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.overlap_ratio) {
            return bad(format!(
                "overlap_ratio {} outside [0, 1]",
                self.overlap_ratio
            ));
        }
        if self.shared_count() > self.items_s.min(self.items_t) {
            return bad(format!(
                "{} shared items do not fit both catalogs",
                self.shared_count()
            ));
        }
        for (name, mean, items) in [
            (
                "interactions_per_user_s",
                self.interactions_per_user_s,
                self.items_s,
            ),
            (
                "interactions_per_user_t",
                self.interactions_per_user_t,
                self.items_t,
            ),
        ] {
            if !(mean.is_finite() && mean >= 1.0) {
                return bad(format!("{name} must be >= 1, got {mean}"));
            }
            if mean > items as f64 {
                return bad(format!(
                    "{name} = {mean} exceeds the {items} available items"
                ));
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        Ok(())
    }
}

/// Hidden latent factors behind a synthetic system. Diagnostics only;
/// trainers never see these.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub dims: usize,
    pub users: Vec<(NodeId, Vec<f64>)>,
    pub items: Vec<(NodeId, Vec<f64>)>,
}

impl GroundTruth {
    pub fn item(&self, id: &NodeId) -> Option<&[f64]> {
        self.items
            .binary_search_by(|(n, _)| n.cmp(id))
            .ok()
            .map(|k| self.items[k].1.as_slice())
    }

    pub fn user(&self, id: &NodeId) -> Option<&[f64]> {
        self.users
            .binary_search_by(|(n, _)| n.cmp(id))
            .ok()
            .map(|k| self.users[k].1.as_slice())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub system: CrossDomainSystem,
    pub truth: GroundTruth,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dims: usize) -> Vec<f64> {
    (0..dims).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Latent-factor cross-domain generator.
///
/// Users and items draw standard Gaussian latent vectors. Each user picks
/// its top-scoring items of its own domain, where the score is cosine
/// affinity plus Gaussian noise. Shared items hold one latent vector in both
/// domains, which is the only signal linking them. Item keys are `i<n>`
/// (shared first, then source-only, then target-only); user keys are `u<n>`
/// within each domain.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shared = cfg.shared_count();
    let total_items = cfg.items_s + cfg.items_t - shared;
    let width = total_items.to_string().len();
    let item_key = |n: usize| format!("i{n:0width$}");

    let item_latents: Vec<Vec<f64>> = (0..total_items)
        .map(|_| gaussian_vec(&mut rng, cfg.latent_dims))
        .collect();
    let source_items: Vec<usize> = (0..cfg.items_s).collect();
    let target_items: Vec<usize> = (0..shared)
        .chain(cfg.items_s..cfg.items_s + cfg.items_t - shared)
        .collect();

    let mut truth_users = Vec::new();
    let mut domains = Vec::new();
    for (tag, users, catalog, mean) in [
        (
            DomainTag::Source,
            cfg.users_s,
            &source_items,
            cfg.interactions_per_user_s,
        ),
        (
            DomainTag::Target,
            cfg.users_t,
            &target_items,
            cfg.interactions_per_user_t,
        ),
    ] {
        let uwidth = users.to_string().len();
        let geometric = Geometric::new(1.0 / mean)
            .map_err(|e| Error::InvalidParam(format!("interaction mean {mean}: {e}")))?;
        let mut builder = GraphBuilder::new();
        for n in 0..users {
            let user = NodeId::user(tag, format!("u{n:0uwidth$}"));
            let latent = gaussian_vec(&mut rng, cfg.latent_dims);
            let count = (1 + geometric.sample(&mut rng) as usize).min(catalog.len());
            let mut scored: Vec<(f64, usize)> = catalog
                .iter()
                .map(|&i| {
                    let eps: f64 = rng.sample(StandardNormal);
                    (cosine(&latent, &item_latents[i]) + cfg.noise * eps, i)
                })
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, i) in &scored[..count] {
                builder.add_edge(user.clone(), NodeId::item(item_key(i)), 1.0)?;
            }
            truth_users.push((user, latent));
        }
        domains.push(DomainGraph::new(tag, builder.build())?);
    }
    let target = domains.pop().unwrap();
    let source = domains.pop().unwrap();
    let system = CrossDomainSystem::new(source, target)?;

    let mut items: Vec<(NodeId, Vec<f64>)> = item_latents
        .into_iter()
        .enumerate()
        .map(|(i, v)| (NodeId::item(item_key(i)), v))
        .collect();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    truth_users.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SyntheticData {
        system,
        truth: GroundTruth {
            dims: cfg.latent_dims,
            users: truth_users,
            items,
        },
    })
}

/// Writes `source.tsv` and `target.tsv` into `dir`.
pub fn export_tsv(sys: &CrossDomainSystem, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let s = dir.join("source.tsv");
    let t = dir.join("target.tsv");
    write_domain_tsv(sys.source(), std::io::BufWriter::new(File::create(&s)?))?;
    write_domain_tsv(sys.target(), std::io::BufWriter::new(File::create(&t)?))?;
    Ok((s, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn read(text: &str, options: IngestOptions) -> Result<(DomainGraph, DomainIngestSummary)> {
        read_domain(
            Cursor::new(text),
            DomainTag::Target,
            Path::new("mem.tsv"),
            &options,
        )
    }

    #[test]
    fn three_line_file() {
        let (d, s) = read(
            "# header\nu1\ti1\nu1\ti2\nu2\ti1\n",
            IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(d.edge_count(), 3);
        assert_eq!(d.users().len(), 2);
        assert_eq!(d.items().len(), 2);
        assert_eq!(s.interactions, 3);
    }

    #[test]
    fn duplicate_pair_collapses() {
        let (d, s) = read("u1\ti1\nu1\ti1\n", IngestOptions::default()).unwrap();
        assert_eq!(d.edge_count(), 1);
        assert_eq!(s.duplicates, 1);
    }

    #[test]
    fn weights_binarize_unless_kept() {
        let (d, _) = read("u1\ti1\t4.5\n", IngestOptions::default()).unwrap();
        assert_eq!(d.neighbors(&NodeId::item("i1")).unwrap()[0].1, 1.0);
        let opts = IngestOptions {
            keep_weights: true,
            ..Default::default()
        };
        let (d, _) = read("u1\ti1\t4.5\nu1\ti1\t2\n", opts).unwrap();
        assert_eq!(d.neighbors(&NodeId::item("i1")).unwrap()[0].1, 4.5);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = read("u1\ti1\nbroken\nu2\ti2\n", IngestOptions::default()).unwrap_err();
        match err {
            Error::Ingest { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        for bad in [
            "u\ti\tx\n",
            "u\ti\t-1\n",
            "u\ti\t0\n",
            "u\t\n",
            "u x\ti\n",
            "a\tb\tc\td\n",
        ] {
            assert!(read(bad, IngestOptions::default()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn skip_bad_lines_tolerates_garbage() {
        let opts = IngestOptions {
            skip_bad_lines: true,
            ..Default::default()
        };
        let (d, s) = read("u1\ti1\nbroken\nu2\ti2\n", opts).unwrap();
        assert_eq!(d.edge_count(), 2);
        assert_eq!(s.skipped, 1);
    }

    #[test]
    fn empty_domain_is_an_error() {
        assert!(matches!(
            read("# nothing\n\n", IngestOptions::default()),
            Err(Error::EmptyDomain(DomainTag::Target))
        ));
    }

    fn small(overlap: f64) -> SynthConfig {
        SynthConfig {
            users_s: 30,
            users_t: 20,
            items_s: 25,
            items_t: 20,
            overlap_ratio: overlap,
            latent_dims: 3,
            interactions_per_user_s: 5.0,
            interactions_per_user_t: 3.0,
            noise: 0.2,
            seed: 9,
        }
    }

    #[test]
    fn zero_overlap_has_no_shared_items() {
        let data = generate_synthetic(&small(0.0)).unwrap();
        assert!(data.system.shared_items().is_empty());
        assert!(matches!(
            crate::construct::identify_candidates(&data.system, DomainTag::Source, 0.5),
            Err(Error::EmptySharedItems)
        ));
    }

    #[test]
    fn full_overlap_shares_every_target_item() {
        let mut cfg = small(1.0);
        cfg.items_s = 20;
        let data = generate_synthetic(&cfg).unwrap();
        assert_eq!(data.system.shared_items(), data.system.target().items());
    }

    #[test]
    fn shared_count_matches_rounding() {
        let cfg = small(0.4);
        let data = generate_synthetic(&cfg).unwrap();
        assert!(data.system.shared_items().len() <= cfg.shared_count());
        assert_eq!(cfg.shared_count(), 8);
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let mut cfg = small(0.5);
        cfg.interactions_per_user_t = 21.0;
        assert!(matches!(
            generate_synthetic(&cfg),
            Err(Error::InvalidParam(_))
        ));
        let mut cfg = small(0.5);
        cfg.overlap_ratio = 1.0;
        cfg.items_s = 10;
        assert!(matches!(
            generate_synthetic(&cfg),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn noiseless_users_pick_their_exact_top_items() {
        let cfg = SynthConfig {
            users_s: 50,
            users_t: 50,
            items_s: 40,
            items_t: 30,
            overlap_ratio: 0.5,
            latent_dims: 2,
            interactions_per_user_s: 4.0,
            interactions_per_user_t: 4.0,
            noise: 0.0,
            seed: 3,
        };
        let data = generate_synthetic(&cfg).unwrap();
        for domain in [data.system.source(), data.system.target()] {
            let catalog = domain.items();
            for user in domain.users() {
                let latent = data.truth.user(user).unwrap();
                let mine: Vec<NodeId> = domain
                    .neighbors(user)
                    .unwrap()
                    .into_iter()
                    .map(|x| x.0)
                    .collect();
                // Exact nearest-neighbor oracle over the user's own catalog.
                let mut ranked: Vec<(f64, &NodeId)> = catalog
                    .iter()
                    .map(|i| (cosine(latent, data.truth.item(i).unwrap()), i))
                    .collect();
                ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut top: Vec<NodeId> =
                    ranked[..mine.len()].iter().map(|x| x.1.clone()).collect();
                top.sort();
                assert_eq!(mine, top, "{user}");
            }
        }
    }

    #[test]
    fn regeneration_is_identical() {
        let a = generate_synthetic(&small(0.4)).unwrap();
        let b = generate_synthetic(&small(0.4)).unwrap();
        assert_eq!(a.system, b.system);
        assert_eq!(a.truth, b.truth);
    }
}
