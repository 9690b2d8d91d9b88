//! Post and friend-graph ingestion, and hashtag canonicalization.
//!
//! Posts arrive as line-delimited JSON objects:
//!
//! ```text
//! {"user_id":"u1","ts":"2018-03-01T12:00:00Z","cc":"IT","lang":"it","tags":["#Roma"]}
//! ```
//!
//! Malformed lines are skipped and counted; they never abort a load.
//! Friend graphs are CSV files with a `user_id,friend_id` header.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::country::CountryCode;
use crate::error::{Error, Result};

/// Characters removed from raw hashtags before comparison.
pub const DEFAULT_STRIP_SET: &[char] = &[',', '"', '\'', ';', '/', '\\', '#'];

/// A lowercase hashtag token with punctuation stripped, at least two characters long.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalHashtag(String);

impl CanonicalHashtag {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CanonicalHashtag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for CanonicalHashtag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl AsRef<str> for CanonicalHashtag {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Hashtag cleaner with a configurable strip set.
#[derive(Clone, Debug)]
pub struct Canonicalizer {
    strip: Vec<char>,
}

impl Default for Canonicalizer {
    fn default() -> Self {
        Canonicalizer {
            strip: DEFAULT_STRIP_SET.to_vec(),
        }
    }
}

impl Canonicalizer {
    pub fn with_strip_set(strip: impl IntoIterator<Item = char>) -> Self {
        Canonicalizer {
            strip: strip.into_iter().collect(),
        }
    }

    pub fn strip_set(&self) -> &[char] {
        &self.strip
    }

    pub fn canonicalize(&self, raw: &str) -> Option<CanonicalHashtag> {
        let stripped: String = raw
            .chars()
            .filter(|c| !self.strip.contains(c))
            .collect::<String>()
            .to_lowercase();
        let token = stripped.trim();
        if token.chars().count() < 2 {
            None
        } else {
            Some(CanonicalHashtag(token.to_string()))
        }
    }
}

/// Canonicalizes with the default strip set.
pub fn canonicalize_hashtag(raw: &str) -> Option<CanonicalHashtag> {
    Canonicalizer::default().canonicalize(raw)
}

/// One geo-tagged (or untagged) social-media message.
#[derive(Clone, Debug, PartialEq)]
pub struct Post {
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub country: Option<CountryCode>,
    pub language: Option<String>,
    pub hashtags: Vec<String>,
}

impl Post {
    pub fn year(&self) -> i32 {
        self.timestamp.year()
    }

    /// Canonical tokens of this post, in order, with rejected tags dropped.
    pub fn canonical_tags<'a>(
        &'a self,
        canon: &'a Canonicalizer,
    ) -> impl Iterator<Item = CanonicalHashtag> + 'a {
        self.hashtags.iter().filter_map(|t| canon.canonicalize(t))
    }
}

#[derive(Deserialize)]
struct RawPost {
    user_id: String,
    ts: String,
    #[serde(default)]
    cc: Option<String>,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Serialize)]
struct OutPost<'a> {
    user_id: &'a str,
    ts: String,
    cc: Option<&'a str>,
    lang: Option<&'a str>,
    tags: &'a [String],
}

fn valid_range() -> (DateTime<Utc>, DateTime<Utc>) {
    (
        Utc.with_ymd_and_hms(1970, 1, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2100, 1, 1, 0, 0, 0).unwrap(),
    )
}

/// Lowercased primary subtag of a BCP-47 tag ("en-GB" -> "en").
pub fn primary_language(tag: &str) -> Option<String> {
    let primary = tag.trim().split(['-', '_']).next()?.to_ascii_lowercase();
    if primary.is_empty() || primary == "und" {
        None
    } else {
        Some(primary)
    }
}

/// Parses one JSON line into a validated post.
pub fn parse_post_line(line: &str) -> std::result::Result<Post, String> {
    let raw: RawPost = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.user_id.is_empty() {
        return Err("empty user_id".into());
    }
    let timestamp = DateTime::parse_from_rfc3339(raw.ts.trim())
        .map_err(|e| format!("bad timestamp {:?}: {e}", raw.ts))?
        .with_timezone(&Utc);
    let (lo, hi) = valid_range();
    if timestamp < lo || timestamp >= hi {
        return Err(format!("timestamp {} out of range", raw.ts));
    }
    let country = match raw.cc.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(code) => Some(CountryCode::parse(code).map_err(|e| e.to_string())?),
    };
    Ok(Post {
        user_id: raw.user_id,
        timestamp,
        country,
        language: raw.lang.as_deref().and_then(primary_language),
        hashtags: raw.tags,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: u64,
    pub yielded: u64,
    pub skipped: u64,
}

/// Streaming reader over a posts file.
pub struct PostReader<R> {
    source: R,
    path: PathBuf,
    buf: String,
    stats: LoadStats,
}

impl PostReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(PostReader::new(BufReader::new(file), path))
    }
}

impl<R: BufRead> PostReader<R> {
    pub fn new(source: R, path: impl Into<PathBuf>) -> Self {
        PostReader {
            source,
            path: path.into(),
            buf: String::new(),
            stats: LoadStats::default(),
        }
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = Result<Post>;

    fn next(&mut self) -> Option<Result<Post>> {
        loop {
            self.buf.clear();
            match self.source.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
            self.stats.lines += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_post_line(line) {
                Ok(post) => {
                    self.stats.yielded += 1;
                    return Some(Ok(post));
                }
                Err(reason) => {
                    self.stats.skipped += 1;
                    log::warn!(
                        "{}:{}: skipping malformed post: {reason}",
                        self.path.display(),
                        self.stats.lines
                    );
                }
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct PostLoad {
    pub posts: Vec<Post>,
    pub stats: LoadStats,
}

/// Reads a whole posts file into memory.
pub fn load_posts(path: impl AsRef<Path>) -> Result<PostLoad> {
    let mut reader = PostReader::open(path)?;
    let posts = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok(PostLoad {
        posts,
        stats: reader.stats(),
    })
}

pub fn write_posts(path: impl AsRef<Path>, posts: &[Post]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_posts_to(BufWriter::new(file), posts).map_err(|e| match e {
        Error::IoData(e) => Error::io(path, e),
        other => other,
    })
}

/// One JSON object per line, timestamps at second resolution.
pub fn write_posts_to<W: Write>(mut w: W, posts: &[Post]) -> Result<()> {
    for p in posts {
        let out = OutPost {
            user_id: &p.user_id,
            ts: p.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            cc: p.country.as_ref().map(CountryCode::as_str),
            lang: p.language.as_deref(),
            tags: &p.hashtags,
        };
        let line = serde_json::to_string(&out).expect("post serializes");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// A directed "follows" edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FriendEdge {
    pub user_id: String,
    pub friend_id: String,
}

/// Deduplicated directed adjacency.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FriendGraph {
    pub adjacency: BTreeMap<String, BTreeSet<String>>,
    pub self_loops: usize,
    pub duplicates: usize,
}

impl FriendGraph {
    pub fn from_edges(edges: impl IntoIterator<Item = FriendEdge>) -> Self {
        let mut g = FriendGraph::default();
        for e in edges {
            g.insert(e);
        }
        g
    }

    pub fn insert(&mut self, edge: FriendEdge) {
        if edge.user_id == edge.friend_id {
            self.self_loops += 1;
            return;
        }
        if !self
            .adjacency
            .entry(edge.user_id)
            .or_default()
            .insert(edge.friend_id)
        {
            self.duplicates += 1;
        }
    }

    pub fn friends_of(&self, user: &str) -> impl Iterator<Item = &str> {
        self.adjacency
            .get(user)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = FriendEdge> + '_ {
        self.adjacency.iter().flat_map(|(u, fs)| {
            fs.iter().map(move |f| FriendEdge {
                user_id: u.clone(),
                friend_id: f.clone(),
            })
        })
    }
}

pub fn load_friends(path: impl AsRef<Path>) -> Result<FriendGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut graph = FriendGraph::default();
    for rec in rdr.deserialize::<FriendEdge>() {
        let edge = rec.map_err(|e| Error::csv(path, e))?;
        graph.insert(edge);
    }
    Ok(graph)
}

pub fn write_friends(path: impl AsRef<Path>, graph: &FriendGraph) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_friends_to(BufWriter::new(file), graph).map_err(|e| match e {
        Error::IoData(e) => Error::io(path, e),
        Error::CsvData(e) => Error::csv(path, e),
        other => other,
    })
}

pub fn write_friends_to<W: Write>(w: W, graph: &FriendGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["user_id", "friend_id"])?;
    for e in graph.edges() {
        w.write_record([&e.user_id, &e.friend_id])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn edge(a: &str, b: &str) -> FriendEdge {
        FriendEdge {
            user_id: a.into(),
            friend_id: b.into(),
        }
    }

    /// Character-by-character reference for the default strip rule.
    fn reference_canon(raw: &str) -> Option<String> {
        let mut out = String::new();
        for ch in raw.chars() {
            if matches!(ch, ',' | '"' | '\'' | ';' | '/' | '\\' | '#') {
                continue;
            }
            for lc in ch.to_lowercase() {
                out.push(lc);
            }
        }
        let t = out.trim().to_string();
        (t.chars().count() >= 2).then_some(t)
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonicalize_hashtag("#Brexit").unwrap().as_str(), "brexit");
        assert_eq!(canonicalize_hashtag("a"), None);
        assert_eq!(canonicalize_hashtag("It'aly;").unwrap().as_str(), "italy");
        assert_eq!(reference_canon("It'aly;").as_deref(), Some("italy"));
        assert_eq!(canonicalize_hashtag("a/"), None);
        assert_eq!(canonicalize_hashtag("  #Über  ").unwrap().as_str(), "über");
    }

    #[test]
    fn custom_strip_set() {
        let c = Canonicalizer::with_strip_set(['-', '#']);
        assert_eq!(c.canonicalize("#Foo-Bar").unwrap().as_str(), "foobar");
        assert_eq!(c.canonicalize("a,b").unwrap().as_str(), "a,b");
    }

    proptest! {
        #[test]
        fn canonicalize_matches_reference(raw in "\\PC{0,12}") {
            prop_assert_eq!(canonicalize_hashtag(&raw).map(|t| t.into_string()), reference_canon(&raw));
        }

        #[test]
        fn canonicalize_is_idempotent(raw in "[#A-Za-z0-9,;'/\\\\ ÄÖÜéß\"]{0,12}") {
            if let Some(t) = canonicalize_hashtag(&raw) {
                let again = canonicalize_hashtag(t.as_str());
                prop_assert_eq!(again.as_ref(), Some(&t));
                prop_assert!(!t.as_str().chars().any(|c| c.is_uppercase() || DEFAULT_STRIP_SET.contains(&c)));
                prop_assert!(t.as_str().chars().count() >= 2);
            }
        }
    }

    fn read(text: &str) -> (Vec<Post>, LoadStats) {
        let mut r = PostReader::new(Cursor::new(text.to_string()), "mem");
        let posts = r.by_ref().collect::<Result<Vec<_>>>().unwrap();
        (posts, r.stats())
    }

    const LINE: &str = r##"{"user_id":"u1","ts":"2018-03-01T12:00:00Z","cc":"IT","lang":"it","tags":["#Roma"],"extra":1}"##;

    #[test]
    fn load_three_valid() {
        let (posts, stats) = read(&format!("{LINE}\n{LINE}\n{LINE}\n"));
        assert_eq!(posts.len(), 3);
        assert_eq!(stats.skipped, 0);
        assert_eq!(posts[0].country.unwrap().as_str(), "IT");
        assert_eq!(posts[0].language.as_deref(), Some("it"));
    }

    #[test]
    fn load_skips_truncated() {
        let (posts, stats) = read(&format!("{LINE}\n{}\n{LINE}", &LINE[..30]));
        assert_eq!(posts.len(), 2);
        assert_eq!(stats.skipped, 1);
        assert_eq!(stats.lines, stats.yielded + stats.skipped);
    }

    #[test]
    fn load_empty() {
        let (posts, stats) = read("");
        assert!(posts.is_empty());
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn rejects_bad_fields() {
        for bad in [
            r#"{"user_id":"u","ts":"2100-01-01T00:00:00Z","cc":null,"lang":null,"tags":[]}"#,
            r#"{"user_id":"u","ts":"1969-12-31T23:59:59Z","cc":null,"lang":null,"tags":[]}"#,
            r#"{"user_id":"u","ts":"2018-01-01T00:00:00Z","cc":"XX","lang":null,"tags":[]}"#,
            r#"{"user_id":"u","ts":"yesterday","cc":null,"lang":null,"tags":[]}"#,
        ] {
            assert!(parse_post_line(bad).is_err(), "{bad}");
        }
        let ok = parse_post_line(r#"{"user_id":"u","ts":"2018-01-01T00:00:00Z","cc":null,"lang":"en-GB","tags":[]}"#).unwrap();
        assert_eq!(ok.country, None);
        assert_eq!(ok.language.as_deref(), Some("en"));
    }

    #[test]
    fn posts_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let (posts, _) = read(&format!("{LINE}\n"));
        write_posts(&path, &posts).unwrap();
        assert_eq!(load_posts(&path).unwrap().posts, posts);
    }

    #[test]
    fn missing_posts_file_is_fatal() {
        assert!(matches!(load_posts("/nonexistent/posts.jsonl"), Err(Error::Io { .. })));
    }

    #[test]
    fn friend_dedup_and_self_loops() {
        let g = FriendGraph::from_edges([edge("a", "b"), edge("a", "b")]);
        assert_eq!(g.friends_of("a").collect::<Vec<_>>(), vec!["b"]);
        assert_eq!(g.duplicates, 1);

        let g = FriendGraph::from_edges([edge("a", "a")]);
        assert!(g.adjacency.is_empty());
        assert_eq!(g.self_loops, 1);

        let g = FriendGraph::from_edges([edge("a", "b"), edge("b", "a")]);
        assert_eq!(g.friends_of("a").collect::<Vec<_>>(), vec!["b"]);
        assert_eq!(g.friends_of("b").collect::<Vec<_>>(), vec!["a"]);
    }

    #[test]
    fn friends_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "user_id,friend_id\na,b\na,b\nc,c\nb,a\n").unwrap();
        let g = load_friends(&path).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.self_loops, 1);
        let out = dir.path().join("g.csv");
        write_friends(&out, &g).unwrap();
        assert_eq!(load_friends(&out).unwrap().adjacency, g.adjacency);
    }
}
