use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::packets::{Source, CRITERIA};
use super::{aligned, EvalError};

pub const SCORE_RANGE: std::ops::RangeInclusive<i64> = 1..=4;

/// One row of the ratings CSV. Scores are kept as read so that
/// out-of-range values can be counted rather than failing the parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub packet_id: String,
    pub rater_id: String,
    pub style: i64,
    pub content: i64,
    pub strategy: i64,
    pub overall: i64,
}

impl RatingRecord {
    pub fn scores(&self) -> [i64; 4] {
        [self.style, self.content, self.strategy, self.overall]
    }

    pub fn in_range(&self) -> bool {
        self.scores().iter().all(|s| SCORE_RANGE.contains(s))
    }
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatingRecord>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(EvalError::from)).collect()
}

/// Appends to `path`, writing the header if the file is new or empty.
pub fn write_ratings(records: &[RatingRecord], path: &Path) -> Result<(), EvalError> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let fresh = file.metadata()?.len() == 0;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionStats {
    pub source: Source,
    pub criterion: String,
    pub n: u64,
    pub mean: f64,
    pub std: f64,
    /// False when the spread is undefined for `n` (reported as 0).
    pub std_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rows: Vec<CriterionStats>,
    pub input: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Earlier rows superseded by a later one from the same rater.
    pub duplicates: usize,
    pub population: bool,
}

#[derive(Default)]
struct Moments {
    n: u64,
    sum: i64,
    sum_sq: i64,
}

impl Moments {
    fn stats(&self, population: bool) -> (f64, f64, bool) {
        let n = self.n as i64;
        let mean = self.sum as f64 / n as f64;
        // n Σx² − (Σx)² is exact in integers, so the result does not depend on row order
        let spread = (n * self.sum_sq - self.sum * self.sum) as f64;
        let denom = if population { n * n } else { n * (n - 1) };
        if denom == 0 {
            (mean, 0.0, false)
        } else {
            (mean, (spread / denom as f64).max(0.0).sqrt(), true)
        }
    }
}

/// Mean and standard deviation per source and criterion. Out-of-range rows
/// are rejected; among valid rows a repeated (rater, packet) keeps the last.
/// `population` switches from the sample (n − 1) to the population spread.
pub fn aggregate_ratings(
    records: &[RatingRecord],
    key: &BTreeMap<String, Source>,
    population: bool,
) -> Result<AggregateReport, EvalError> {
    if let Some(r) = records.iter().find(|r| !key.contains_key(&r.packet_id)) {
        return Err(EvalError::UnknownPacket(r.packet_id.clone()));
    }
    let valid: Vec<&RatingRecord> = records.iter().filter(|r| r.in_range()).collect();
    let rejected = records.len() - valid.len();

    let mut latest: HashMap<(&str, &str), usize> = HashMap::new();
    for (i, r) in valid.iter().enumerate() {
        latest.insert((r.rater_id.as_str(), r.packet_id.as_str()), i);
    }
    let duplicates = valid.len() - latest.len();

    let mut moments: BTreeMap<(Source, usize), Moments> = BTreeMap::new();
    for &i in latest.values() {
        let r = valid[i];
        let source = key[&r.packet_id];
        for (c, s) in r.scores().into_iter().enumerate() {
            let m = moments.entry((source, c)).or_default();
            m.n += 1;
            m.sum += s;
            m.sum_sq += s * s;
        }
    }
    let rows = moments
        .iter()
        .map(|(&(source, c), m)| {
            let (mean, std, std_defined) = m.stats(population);
            CriterionStats { source, criterion: CRITERIA[c].0.to_string(), n: m.n, mean, std, std_defined }
        })
        .collect();
    Ok(AggregateReport { rows, input: records.len(), accepted: latest.len(), rejected, duplicates, population })
}

impl AggregateReport {
    pub fn get(&self, source: Source, criterion: &str) -> Option<&CriterionStats> {
        self.rows.iter().find(|r| r.source == source && r.criterion == criterion)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One line per criterion, one `mean ± std` column per source.
    pub fn to_text(&self) -> String {
        let cell = |s: Source, c: &str| match self.get(s, c) {
            Some(r) if r.std_defined => format!("{:.3} ± {:.3}", r.mean, r.std),
            Some(r) => format!("{:.3} ± n/a", r.mean),
            None => "-".into(),
        };
        let rows: Vec<[String; 3]> = CRITERIA
            .iter()
            .map(|(c, _)| [c.to_string(), cell(Source::Human, c), cell(Source::Generated, c)])
            .collect();
        let mut out = aligned(&["criterion", "human", "generated"], &rows);
        out.push_str(&format!(
            "accepted {} of {} ratings ({} out of range, {} superseded)\n",
            self.accepted, self.input, self.rejected, self.duplicates
        ));
        out
    }
}
