//! Aggregate evaluation results into per-trait, per-subreddit and pairwise
//! tables, plus deterministic SVG bar charts.
//!
//! Every aggregate first averages the probes within a pairing, so the number
//! of probes run never weights a summary. Sums are taken over sorted values,
//! making every table independent of input order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::Pairing;
use crate::corpus::Trait;
use crate::error::ReportError;
use crate::evaluate::EvaluationResult;
use crate::io::atomic_write;

fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance (divide by n).
pub fn population_variance(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let m = mean(&mut v);
    let mut sq: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    mean(&mut sq)
}

/// Probe-averaged lift for each pairing.
pub fn pairing_lifts(results: &[EvaluationResult]) -> BTreeMap<Pairing, f64> {
    let mut grouped: BTreeMap<Pairing, Vec<f64>> = BTreeMap::new();
    for r in results {
        grouped
            .entry(Pairing::new(&r.subreddit, r.trait_))
            .or_default()
            .push(r.macro_f1_lift);
    }
    grouped
        .into_iter()
        .map(|(p, mut lifts)| (p, mean(&mut lifts)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitRow {
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub mean_lift: f64,
    pub n_pairings: usize,
}

/// Mean lift per trait across pairings, highest first. Ties keep the fixed
/// trait order.
pub fn trait_summary(results: &[EvaluationResult]) -> Result<Vec<TraitRow>, ReportError> {
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut by_trait: BTreeMap<Trait, Vec<f64>> = BTreeMap::new();
    for (p, lift) in pairing_lifts(results) {
        by_trait.entry(p.trait_).or_default().push(lift);
    }
    let mut rows: Vec<TraitRow> = by_trait
        .into_iter()
        .map(|(trait_, mut lifts)| TraitRow {
            trait_,
            n_pairings: lifts.len(),
            mean_lift: mean(&mut lifts),
        })
        .collect();
    rows.sort_by(|a, b| b.mean_lift.total_cmp(&a.mean_lift));
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankGroup {
    Top,
    Bottom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub subreddit: String,
    pub mean_lift: f64,
    pub n_traits: usize,
    pub group: RankGroup,
}

fn subreddit_lifts(results: &[EvaluationResult]) -> BTreeMap<String, Vec<f64>> {
    let mut by_sub: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (p, lift) in pairing_lifts(results) {
        by_sub.entry(p.subreddit).or_default().push(lift);
    }
    by_sub
}

/// Top `top_k` and bottom `bottom_k` subreddits by mean lift. Both groups are
/// listed highest first; ties break by name. When the groups would overlap
/// every subreddit is returned once.
pub fn subreddit_ranking(
    results: &[EvaluationResult],
    top_k: usize,
    bottom_k: usize,
) -> Result<Vec<RankingRow>, ReportError> {
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut rows: Vec<(String, f64, usize)> = subreddit_lifts(results)
        .into_iter()
        .map(|(s, mut lifts)| (s, mean(&mut lifts), lifts.len()))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let n = rows.len();
    let top = top_k.min(n);
    let bottom_start = n - bottom_k.min(n - top);
    Ok(rows
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i < top || *i >= bottom_start)
        .map(|(i, (subreddit, mean_lift, n_traits))| RankingRow {
            subreddit,
            mean_lift,
            n_traits,
            group: if i < top { RankGroup::Top } else { RankGroup::Bottom },
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub subreddit: String,
    pub mean_lift: f64,
    pub variance_lift: f64,
    pub n_traits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    /// Subreddits with fewer than two trait lifts.
    pub excluded: usize,
}

/// The `top_k` subreddits with the most spread in per-trait lift.
pub fn subreddit_variance(results: &[EvaluationResult], top_k: usize) -> Result<VarianceReport, ReportError> {
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut excluded = 0;
    let mut rows = Vec::new();
    for (subreddit, mut lifts) in subreddit_lifts(results) {
        if lifts.len() < 2 {
            excluded += 1;
            continue;
        }
        rows.push(VarianceRow {
            subreddit,
            variance_lift: population_variance(&lifts),
            n_traits: lifts.len(),
            mean_lift: mean(&mut lifts),
        });
    }
    rows.sort_by(|a, b| {
        b.variance_lift
            .total_cmp(&a.variance_lift)
            .then_with(|| a.subreddit.cmp(&b.subreddit))
    });
    rows.truncate(top_k);
    Ok(VarianceReport { rows, excluded })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    #[serde(rename = "trait")]
    pub trait_: Trait,
    /// One cell per requested subreddit; `None` when the pairing is absent.
    pub lifts: [Option<f64>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTable {
    pub subreddits: [String; 2],
    pub rows: Vec<PairwiseRow>,
}

pub fn pairwise_table(results: &[EvaluationResult], subreddits: [&str; 2], traits: &[Trait]) -> PairwiseTable {
    let lifts = pairing_lifts(results);
    let cell = |sub: &str, t: Trait| lifts.get(&Pairing::new(sub, t)).copied();
    PairwiseTable {
        subreddits: subreddits.map(|s| s.trim().to_lowercase()),
        rows: traits
            .iter()
            .map(|&t| PairwiseRow {
                trait_: t,
                lifts: [cell(subreddits[0], t), cell(subreddits[1], t)],
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingLift {
    pub subreddit: String,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub lift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n_pairings: usize,
    pub mean_lift: f64,
    pub max: PairingLift,
    pub min: PairingLift,
}

/// Overall mean lift with the strongest and weakest pairing. Ties go to the
/// first pairing in (subreddit, trait) order.
pub fn summary_stats(results: &[EvaluationResult]) -> Result<SummaryStats, ReportError> {
    let lifts = pairing_lifts(results);
    let first = lifts.iter().next().ok_or(ReportError::Empty)?;
    let as_row = |(p, l): (&Pairing, &f64)| PairingLift {
        subreddit: p.subreddit.clone(),
        trait_: p.trait_,
        lift: *l,
    };
    let mut max = first;
    let mut min = first;
    for entry in &lifts {
        if entry.1 > max.1 {
            max = entry;
        }
        if entry.1 < min.1 {
            min = entry;
        }
    }
    let mut all: Vec<f64> = lifts.values().copied().collect();
    Ok(SummaryStats {
        n_pairings: lifts.len(),
        mean_lift: mean(&mut all),
        max: as_row(max),
        min: as_row(min),
    })
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ReportError::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn trait_summary_csv(rows: &[TraitRow]) -> Result<String, ReportError> {
    csv_string(rows)
}

pub fn ranking_csv(rows: &[RankingRow]) -> Result<String, ReportError> {
    csv_string(rows)
}

pub fn variance_csv(rows: &[VarianceRow]) -> Result<String, ReportError> {
    csv_string(rows)
}

/// `trait,<a>,<b>` with empty cells for missing pairings.
pub fn pairwise_csv(table: &PairwiseTable) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| ReportError::Io(std::io::Error::other(e));
    w.write_record(["trait", table.subreddits[0].as_str(), table.subreddits[1].as_str()])
        .map_err(io)?;
    for row in &table.rows {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([row.trait_.name().to_string(), cell(row.lifts[0]), cell(row.lifts[1])])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Every table the `report` command emits, keyed by file name.
pub fn report_files(
    results: &[EvaluationResult],
    top_k: usize,
    bottom_k: usize,
) -> Result<BTreeMap<String, String>, ReportError> {
    let traits = trait_summary(results)?;
    let ranking = subreddit_ranking(results, top_k, bottom_k)?;
    let variance = subreddit_variance(results, top_k)?;
    let stats = summary_stats(results)?;
    let mut files = BTreeMap::new();
    files.insert("trait_summary.csv".into(), trait_summary_csv(&traits)?);
    files.insert("trait_summary.json".into(), json_string(&traits));
    files.insert("subreddit_ranking.csv".into(), ranking_csv(&ranking)?);
    files.insert("subreddit_ranking.json".into(), json_string(&ranking));
    files.insert("subreddit_variance.csv".into(), variance_csv(&variance.rows)?);
    files.insert("subreddit_variance.json".into(), json_string(&variance));
    files.insert("summary.json".into(), json_string(&stats));
    Ok(files)
}

pub fn write_files(dir: &Path, files: &BTreeMap<String, String>) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        atomic_write(dir.join(name), body.as_bytes())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarRow {
    pub label: String,
    pub value: f64,
    pub group: Option<RankGroup>,
}

impl From<&TraitRow> for BarRow {
    fn from(r: &TraitRow) -> Self {
        BarRow {
            label: r.trait_.name().into(),
            value: r.mean_lift,
            group: None,
        }
    }
}

impl From<&RankingRow> for BarRow {
    fn from(r: &RankingRow) -> Self {
        BarRow {
            label: r.subreddit.clone(),
            value: r.mean_lift,
            group: Some(r.group),
        }
    }
}

impl From<&VarianceRow> for BarRow {
    fn from(r: &VarianceRow) -> Self {
        BarRow {
            label: r.subreddit.clone(),
            value: r.variance_lift,
            group: None,
        }
    }
}

const SVG_WIDTH: f64 = 800.0;
const LABEL_WIDTH: f64 = 200.0;
const VALUE_WIDTH: f64 = 90.0;
const BAR_AREA: f64 = SVG_WIDTH - LABEL_WIDTH - VALUE_WIDTH;
const ROW_HEIGHT: f64 = 28.0;
const TITLE_HEIGHT: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal bar chart. Bar length is `|value| / max |value|` of the bar
/// area, so the largest bar always spans it. Ranking groups are green (top)
/// and red (bottom); ungrouped bars are blue, negative values grey.
pub fn render_bar_chart(title: &str, rows: &[BarRow]) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let scale = rows.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    let height = TITLE_HEIGHT + ROW_HEIGHT * rows.len() as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{height}" viewBox="0 0 {SVG_WIDTH} {height}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="16" font-weight="bold">{}</text>"#,
        10,
        escape(title)
    );
    for (i, row) in rows.iter().enumerate() {
        let y = TITLE_HEIGHT + ROW_HEIGHT * i as f64;
        let width = if scale > 0.0 {
            BAR_AREA * row.value.abs() / scale
        } else {
            0.0
        };
        let color = match (row.group, row.value < 0.0) {
            (_, true) => "#9e9e9e",
            (Some(RankGroup::Top), _) => "#2e7d32",
            (Some(RankGroup::Bottom), _) => "#c62828",
            (None, _) => "#1565c0",
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 8.0,
            y + 18.0,
            escape(&row.label)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LABEL_WIDTH:.1}" y="{:.1}" width="{width:.2}" height="{:.1}" fill="{color}"/>"#,
            y + 4.0,
            ROW_HEIGHT - 8.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}">{:.6}</text>"#,
            LABEL_WIDTH + width + 6.0,
            y + 18.0,
            row.value
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_bar_chart(path: impl AsRef<Path>, title: &str, rows: &[BarRow]) -> Result<(), ReportError> {
    let svg = render_bar_chart(title, rows)?;
    atomic_write(path, svg.as_bytes())?;
    Ok(())
}

/// The three standard charts, keyed by file name.
pub fn chart_files(
    results: &[EvaluationResult],
    top_k: usize,
    bottom_k: usize,
) -> Result<BTreeMap<String, String>, ReportError> {
    let traits: Vec<BarRow> = trait_summary(results)?.iter().map(BarRow::from).collect();
    let ranking: Vec<BarRow> = subreddit_ranking(results, top_k, bottom_k)?
        .iter()
        .map(BarRow::from)
        .collect();
    let variance: Vec<BarRow> = subreddit_variance(results, top_k)?
        .rows
        .iter()
        .map(BarRow::from)
        .collect();
    let mut files = BTreeMap::new();
    files.insert(
        "trait_summary.svg".into(),
        render_bar_chart("Mean macro-F1 lift by trait", &traits)?,
    );
    files.insert(
        "subreddit_ranking.svg".into(),
        render_bar_chart("Top vs bottom subreddits by mean lift", &ranking)?,
    );
    if !variance.is_empty() {
        files.insert(
            "subreddit_variance.svg".into(),
            render_bar_chart("Subreddits by trait-lift variance", &variance)?,
        );
    }
    Ok(files)
}
