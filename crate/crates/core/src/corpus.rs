//! Author-profile and comment ingestion, trait derivation, and the
//! username join that binds every comment to its author's traits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

/// The seven binary sensitive attributes, in the fixed order used for
/// enumeration and reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trait {
    IsFemale,
    CountryUs,
    #[serde(rename = "age_under_25")]
    AgeUnder25,
    Perceiving,
    Thinking,
    Introverted,
    Intuitive,
}

impl Trait {
    pub const ALL: [Trait; 7] = [
        Trait::IsFemale,
        Trait::CountryUs,
        Trait::AgeUnder25,
        Trait::Perceiving,
        Trait::Thinking,
        Trait::Introverted,
        Trait::Intuitive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Trait::IsFemale => "is_female",
            Trait::CountryUs => "country_us",
            Trait::AgeUnder25 => "age_under_25",
            Trait::Perceiving => "perceiving",
            Trait::Thinking => "thinking",
            Trait::Introverted => "introverted",
            Trait::Intuitive => "intuitive",
        }
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trait {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Trait::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or(CorpusError::UnknownTrait(s))
    }
}

/// A validated four-letter MBTI code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mbti {
    pub introverted: bool,
    pub intuitive: bool,
    pub thinking: bool,
    pub perceiving: bool,
}

impl Mbti {
    pub fn parse(code: &str) -> Option<Mbti> {
        let upper = code.trim().to_ascii_uppercase();
        let b = upper.as_bytes();
        if b.len() != 4 {
            return None;
        }
        let axis = |c: u8, yes: u8, no: u8| match c {
            c if c == yes => Some(true),
            c if c == no => Some(false),
            _ => None,
        };
        Some(Mbti {
            introverted: axis(b[0], b'I', b'E')?,
            intuitive: axis(b[1], b'N', b'S')?,
            thinking: axis(b[2], b'T', b'F')?,
            perceiving: axis(b[3], b'P', b'J')?,
        })
    }

    pub fn code(&self) -> String {
        [
            if self.introverted { 'I' } else { 'E' },
            if self.intuitive { 'N' } else { 'S' },
            if self.thinking { 'T' } else { 'F' },
            if self.perceiving { 'P' } else { 'J' },
        ]
        .iter()
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorProfile {
    pub username: String,
    /// Raw flair code. Codes that do not parse leave the MBTI traits unset.
    pub mbti: Option<String>,
    pub gender: Option<String>,
    pub age: Option<u32>,
    pub country: Option<String>,
}

/// Derived binary attributes; `None` means the source field was missing or
/// could not be interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitVector {
    pub introverted: Option<bool>,
    pub intuitive: Option<bool>,
    pub thinking: Option<bool>,
    pub perceiving: Option<bool>,
    pub is_female: Option<bool>,
    pub age_under_25: Option<bool>,
    pub country_us: Option<bool>,
}

impl TraitVector {
    pub fn get(&self, t: Trait) -> Option<bool> {
        match t {
            Trait::IsFemale => self.is_female,
            Trait::CountryUs => self.country_us,
            Trait::AgeUnder25 => self.age_under_25,
            Trait::Perceiving => self.perceiving,
            Trait::Thinking => self.thinking,
            Trait::Introverted => self.introverted,
            Trait::Intuitive => self.intuitive,
        }
    }
}

const FEMALE_TOKENS: [&str; 4] = ["f", "female", "woman", "w"];
const MALE_TOKENS: [&str; 3] = ["m", "male", "man"];
const US_ALIASES: [&str; 5] = ["us", "usa", "united states", "united states of america", "america"];

pub const MAX_AGE: u32 = 150;

/// Map a profile to its trait vector. Pure.
pub fn derive_traits(profile: &AuthorProfile) -> TraitVector {
    let mbti = profile.mbti.as_deref().and_then(Mbti::parse);
    let gender = profile.gender.as_deref().map(|g| g.trim().to_lowercase());
    let is_female = gender.and_then(|g| {
        if FEMALE_TOKENS.contains(&g.as_str()) {
            Some(true)
        } else if MALE_TOKENS.contains(&g.as_str()) {
            Some(false)
        } else {
            None
        }
    });
    let country_us = profile.country.as_deref().map(|c| {
        let c = c.trim().to_lowercase();
        US_ALIASES.contains(&c.as_str())
    });
    TraitVector {
        introverted: mbti.map(|m| m.introverted),
        intuitive: mbti.map(|m| m.intuitive),
        thinking: mbti.map(|m| m.thinking),
        perceiving: mbti.map(|m| m.perceiving),
        is_female,
        age_under_25: profile.age.map(|a| a < 25),
        country_us,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: String,
    pub username: String,
    pub subreddit: String,
    pub body: String,
    pub created: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledComment {
    pub comment: Comment,
    pub traits: TraitVector,
}

/// Row accounting for one ingested file. `rows_total == rows_emitted + rows_skipped`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows_total: u64,
    pub rows_emitted: u64,
    pub rows_skipped: u64,
    pub duplicates: u64,
}

impl IngestSummary {
    fn emit(&mut self) {
        self.rows_total += 1;
        self.rows_emitted += 1;
    }

    fn skip(&mut self) {
        self.rows_total += 1;
        self.rows_skipped += 1;
    }
}

/// Loaded `author_profiles` table keyed by username.
#[derive(Clone, Debug, Default)]
pub struct ProfileTable {
    pub profiles: BTreeMap<String, AuthorProfile>,
    pub summary: IngestSummary,
    /// Profiles whose non-empty MBTI field is not one of the 16 codes.
    pub mbti_unparsed: u64,
    /// Non-empty age fields that were not an integer below [`MAX_AGE`].
    pub age_unparsed: u64,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
}

fn optional_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn non_empty(record: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    idx.and_then(|i| record.get(i)).map(str::trim).filter(|s| !s.is_empty())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).from_reader(reader)
}

pub fn load_author_profiles(path: impl AsRef<Path>) -> Result<ProfileTable, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_author_profiles(file)
}

pub fn read_author_profiles<R: Read>(reader: R) -> Result<ProfileTable, CorpusError> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let username_col = column(&headers, "username")?;
    let mbti_col = optional_column(&headers, "mbti");
    let gender_col = optional_column(&headers, "gender");
    let age_col = optional_column(&headers, "age");
    let country_col = optional_column(&headers, "country");

    let mut table = ProfileTable::default();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                table.summary.skip();
                continue;
            }
        };
        let Some(username) = non_empty(&record, Some(username_col)) else {
            table.summary.skip();
            continue;
        };
        if table.profiles.contains_key(username) {
            return Err(CorpusError::DuplicateUsername(username.to_string()));
        }
        let mbti = non_empty(&record, mbti_col).map(str::to_string);
        if mbti.as_deref().is_some_and(|m| Mbti::parse(m).is_none()) {
            table.mbti_unparsed += 1;
        }
        let age = match non_empty(&record, age_col) {
            None => None,
            Some(raw) => match raw.parse::<u32>() {
                Ok(a) if a < MAX_AGE => Some(a),
                _ => {
                    table.age_unparsed += 1;
                    None
                }
            },
        };
        let profile = AuthorProfile {
            username: username.to_string(),
            mbti,
            gender: non_empty(&record, gender_col).map(str::to_string),
            age,
            country: non_empty(&record, country_col).map(str::to_string),
        };
        table.profiles.insert(profile.username.clone(), profile);
        table.summary.emit();
    }
    Ok(table)
}

/// Streaming reader over a `comments` table.
///
/// Malformed rows (missing id, author, subreddit or body field, unparseable
/// `created`, or a repeated `comment_id`) are skipped and counted, as are rows
/// excluded by the subreddit filter.
pub struct CommentReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    cols: CommentColumns,
    filter: Option<HashSet<String>>,
    seen: HashSet<String>,
    summary: IngestSummary,
    malformed: u64,
    filtered: u64,
    io_error: Option<csv::Error>,
}

struct CommentColumns {
    id: usize,
    username: usize,
    subreddit: usize,
    created: Option<usize>,
    body: usize,
}

impl CommentReader<File> {
    pub fn open(path: impl AsRef<Path>, subreddit_filter: Option<&[String]>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        CommentReader::new(file, subreddit_filter)
    }
}

impl<R: Read> CommentReader<R> {
    pub fn new(reader: R, subreddit_filter: Option<&[String]>) -> Result<Self, CorpusError> {
        let mut rdr = csv_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols = CommentColumns {
            id: column(&headers, "comment_id")?,
            username: column(&headers, "username")?,
            subreddit: column(&headers, "subreddit")?,
            created: optional_column(&headers, "created"),
            body: column(&headers, "body")?,
        };
        let filter = subreddit_filter.map(|f| f.iter().map(|s| s.trim().to_lowercase()).collect());
        Ok(CommentReader {
            records: rdr.into_records(),
            cols,
            filter,
            seen: HashSet::new(),
            summary: IngestSummary::default(),
            malformed: 0,
            filtered: 0,
            io_error: None,
        })
    }

    pub fn summary(&self) -> IngestSummary {
        self.summary
    }

    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    pub fn filtered(&self) -> u64 {
        self.filtered
    }

    /// Surface an I/O failure hit mid-stream; the iterator stops at the first one.
    pub fn finish(self) -> Result<IngestSummary, CorpusError> {
        match self.io_error {
            Some(e) => Err(e.into()),
            None => Ok(self.summary),
        }
    }

    fn parse(&self, record: &csv::StringRecord) -> Option<Comment> {
        let c = &self.cols;
        let comment_id = non_empty(record, Some(c.id))?;
        let username = non_empty(record, Some(c.username))?;
        let subreddit = non_empty(record, Some(c.subreddit))?;
        // An empty body is allowed; a missing field is not.
        let body = record.get(c.body)?;
        let created = match non_empty(record, c.created) {
            None => None,
            Some(raw) => Some(raw.parse::<i64>().ok()?),
        };
        Some(Comment {
            comment_id: comment_id.to_string(),
            username: username.to_string(),
            subreddit: subreddit.to_string(),
            body: body.to_string(),
            created,
        })
    }
}

impl<R: Read> Iterator for CommentReader<R> {
    type Item = Comment;

    fn next(&mut self) -> Option<Comment> {
        if self.io_error.is_some() {
            return None;
        }
        loop {
            let record = match self.records.next()? {
                Ok(r) => r,
                Err(e) if e.is_io_error() => {
                    self.io_error = Some(e);
                    return None;
                }
                Err(_) => {
                    self.summary.skip();
                    self.malformed += 1;
                    continue;
                }
            };
            let Some(comment) = self.parse(&record) else {
                self.summary.skip();
                self.malformed += 1;
                continue;
            };
            if let Some(filter) = &self.filter {
                if !filter.contains(&comment.subreddit.to_lowercase()) {
                    self.summary.skip();
                    self.filtered += 1;
                    continue;
                }
            }
            if !self.seen.insert(comment.comment_id.clone()) {
                self.summary.skip();
                self.malformed += 1;
                continue;
            }
            self.summary.emit();
            return Some(comment);
        }
    }
}

/// Read a whole comments file into memory.
pub fn load_comments(
    path: impl AsRef<Path>,
    subreddit_filter: Option<&[String]>,
) -> Result<(Vec<Comment>, IngestSummary), CorpusError> {
    let mut reader = CommentReader::open(path, subreddit_filter)?;
    let comments: Vec<Comment> = reader.by_ref().collect();
    let summary = reader.finish()?;
    Ok((comments, summary))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinSummary {
    pub joined: u64,
    pub dropped_unprofiled: u64,
}

/// Attach traits to each comment whose author has a profile; order is preserved.
pub fn join_labeled<I>(comments: I, profiles: &BTreeMap<String, AuthorProfile>) -> (Vec<LabeledComment>, JoinSummary)
where
    I: IntoIterator<Item = Comment>,
{
    let mut summary = JoinSummary::default();
    let mut out = Vec::new();
    for comment in comments {
        match profiles.get(&comment.username) {
            Some(profile) => {
                summary.joined += 1;
                out.push(LabeledComment {
                    traits: derive_traits(profile),
                    comment,
                });
            }
            None => summary.dropped_unprofiled += 1,
        }
    }
    (out, summary)
}

/// Everything downstream stages need from one ingest.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub labeled: Vec<LabeledComment>,
    pub profiles: ProfileTable,
    pub comments: IngestSummary,
    pub join: JoinSummary,
}

impl Corpus {
    pub fn load(profiles: impl AsRef<Path>, comments: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
        let table = load_author_profiles(profiles)?;
        let (raw, comment_summary) = load_comments(comments, None)?;
        let (labeled, join) = join_labeled(raw, &table.profiles);
        Ok(Corpus {
            labeled,
            profiles: table,
            comments: comment_summary,
            join,
        })
    }
}
