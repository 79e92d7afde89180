//! CSV ingestion and export.
//!
//! Outcome encoding: in bucket `(i, j)` a `1` means the second-listed agent
//! `j` won. For match logs `i` is the home team, so a home win is a `0`.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::ComparisonDataset;
use crate::error::{Error, Result};
use crate::graph::ObservationGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchRecord {
    pub date: Option<String>,
    pub home: String,
    pub away: String,
    pub winner: String,
}

fn is_tie(winner: &str) -> bool {
    let w = winner.trim().to_ascii_lowercase();
    w.is_empty() || w == "draw" || w == "tie"
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Reads `date,home,away,winner` rows (`date` optional). Ties are an error
/// unless `drop_ties` is set, in which case they are skipped.
pub fn read_match_records<R: Read>(reader: R, drop_ties: bool) -> Result<Vec<MatchRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let need = |name: &str| column(&headers, name).ok_or_else(|| Error::Parse { line: 1, message: format!("missing column `{name}`") });
    let (home, away, winner) = (need("home")?, need("away")?, need("winner")?);
    let date = column(&headers, "date");
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        let row = row?;
        let field = |c: usize| row.get(c).map(str::to_string).ok_or_else(|| Error::Parse { line, message: "short row".into() });
        let rec = MatchRecord {
            date: date.and_then(|c| row.get(c)).filter(|d| !d.is_empty()).map(str::to_string),
            home: field(home)?,
            away: field(away)?,
            winner: field(winner)?,
        };
        if rec.home == rec.away {
            return Err(Error::Parse { line, message: format!("`{}` plays itself", rec.home) });
        }
        if is_tie(&rec.winner) {
            if drop_ties {
                continue;
            }
            return Err(Error::Parse { line, message: "tied match; pass --drop-ties to skip ties".into() });
        }
        if rec.winner != rec.home && rec.winner != rec.away {
            return Err(Error::Parse { line, message: format!("winner `{}` is neither `{}` nor `{}`", rec.winner, rec.home, rec.away) });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Agents are indexed by first appearance; the graph has an edge wherever
/// either orientation was played.
pub fn dataset_from_matches(records: &[MatchRecord]) -> Result<ComparisonDataset> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut id = |name: &str| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        names.push(name.to_string());
        index.insert(name.to_string(), names.len() - 1);
        names.len() - 1
    };
    let outcomes: Vec<(usize, usize, bool)> = records.iter().map(|r| (id(&r.home), id(&r.away), r.winner == r.away)).collect();
    build(names, outcomes.iter().map(|&(i, j, w)| (i, j, usize::from(w), 1)))
}

fn build(names: Vec<String>, cells: impl Iterator<Item = (usize, usize, usize, usize)> + Clone) -> Result<ComparisonDataset> {
    let n = names.len();
    if n < 2 {
        return Err(Error::InvalidSize(format!("need at least two agents, found {n}")));
    }
    let edges: Vec<(usize, usize)> = cells.clone().map(|(i, j, _, _)| (i, j)).collect();
    let graph = ObservationGraph::from_edges(n, edges)?;
    let mut data = ComparisonDataset::with_names(graph, names)?;
    for (i, j, z, k) in cells {
        data.push_counts(i, j, k, z)?;
    }
    Ok(data)
}

pub fn load_matches(path: &Path, drop_ties: bool) -> Result<ComparisonDataset> {
    dataset_from_matches(&read_match_records(std::fs::File::open(path)?, drop_ties)?)
}

/// Reads `i,j,k,z` rows. Duplicate rows are summed, and every pair must be
/// present in both orientations.
pub fn read_aggregated<R: Read>(reader: R) -> Result<ComparisonDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = ["i", "j", "k", "z"]
        .iter()
        .map(|name| column(&headers, name).ok_or_else(|| Error::Parse { line: 1, message: format!("missing column `{name}`") }))
        .collect::<Result<_>>()?;
    let mut names: Vec<String> = Vec::new();
    let mut counts: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        let row = row?;
        let get = |c: usize| row.get(cols[c]).ok_or_else(|| Error::Parse { line, message: "short row".into() });
        let mut id = |name: &str| match names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                names.push(name.to_string());
                names.len() - 1
            }
        };
        let (i, j) = (id(get(0)?), id(get(1)?));
        if i == j {
            return Err(Error::Parse { line, message: "self comparison".into() });
        }
        let num = |c: usize| -> Result<usize> {
            let v = get(c)?;
            v.parse().map_err(|e| Error::Parse { line, message: format!("`{v}`: {e}") })
        };
        let (k, z) = (num(2)?, num(3)?);
        if z > k {
            return Err(Error::Validation(format!("line {line}: z = {z} exceeds k = {k}")));
        }
        let c = counts.entry((i, j)).or_default();
        c.0 += k;
        c.1 += z;
    }
    if let Some(&(i, j)) = counts.keys().find(|(i, j)| !counts.contains_key(&(*j, *i))) {
        return Err(Error::Validation(format!("pair ({}, {}) has no reverse orientation", names[i], names[j])));
    }
    build(names, counts.iter().map(|(&(i, j), &(k, z))| (i, j, z, k)))
}

pub fn load_aggregated(path: &Path) -> Result<ComparisonDataset> {
    read_aggregated(std::fs::File::open(path)?)
}

/// Detects the format from the header line.
pub fn read_dataset(text: &str, drop_ties: bool) -> Result<ComparisonDataset> {
    let header = text.lines().next().unwrap_or("");
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.contains(&"home") {
        dataset_from_matches(&read_match_records(text.as_bytes(), drop_ties)?)
    } else if ["i", "j", "k", "z"].iter().all(|c| cols.contains(c)) {
        read_aggregated(text.as_bytes())
    } else {
        Err(Error::Parse { line: 1, message: format!("unrecognized header `{header}`") })
    }
}

/// One `date,home,away,winner` row per observation, bucket by bucket.
pub fn write_matches<W: Write>(data: &ComparisonDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "home", "away", "winner"])?;
    let names = data.names();
    for (i, j) in data.graph().edges() {
        let (k, z) = (data.k(i, j), data.z(i, j));
        for t in 0..k {
            let winner = if t < z { &names[j] } else { &names[i] };
            w.write_record(["", &names[i], &names[j], winner])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One `i,j,k,z` row per directed edge.
pub fn write_aggregated<W: Write>(data: &ComparisonDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "j", "k", "z"])?;
    let names = data.names();
    for (i, j) in data.graph().edges() {
        w.write_record([names[i].as_str(), names[j].as_str(), &data.k(i, j).to_string(), &data.z(i, j).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts_by_name(d: &ComparisonDataset) -> BTreeMap<(String, String), (usize, usize)> {
        let names = d.names();
        d.graph().edges().map(|(i, j)| ((names[i].clone(), names[j].clone()), (d.k(i, j), d.z(i, j)))).collect()
    }

    #[test]
    fn home_wins_encode_zero() {
        let text = "date,home,away,winner\n2020-01-01,A,B,A\n2020-01-02,B,A,B\n";
        let d = read_dataset(text, false).unwrap();
        assert_eq!(d.names(), &["A", "B"]);
        assert_eq!((d.k(0, 1), d.z(0, 1), d.k(1, 0), d.z(1, 0)), (1, 0, 1, 0));
    }

    #[test]
    fn bad_winner_reports_line() {
        let text = "home,away,winner\nA,B,A\nA,B,C\n";
        match read_match_records(text.as_bytes(), false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ties_rejected_or_dropped() {
        let text = "home,away,winner\nA,B,A\nB,A,draw\nB,A,\nB,A,A\n";
        assert!(matches!(read_match_records(text.as_bytes(), false), Err(Error::Parse { line: 3, .. })));
        assert_eq!(read_match_records(text.as_bytes(), true).unwrap().len(), 2);
    }

    #[test]
    fn disconnected_log_lists_components() {
        let text = "home,away,winner\nA,B,A\nC,D,D\n";
        match read_dataset(text, false) {
            Err(Error::Disconnected { components, .. }) => assert_eq!(components, vec![vec![0, 1], vec![2, 3]]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn aggregated_rules() {
        let d = read_dataset("i,j,k,z\nA,B,10,7\nB,A,4,1\nA,B,2,2\n", false).unwrap();
        assert_eq!((d.k(0, 1), d.z(0, 1)), (12, 9));
        assert!(matches!(read_aggregated("i,j,k,z\nA,B,3,4\nB,A,1,0\n".as_bytes()), Err(Error::Validation(_))));
        assert!(matches!(read_aggregated("i,j,k,z\nA,B,3,1\n".as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn round_trips() {
        let text = "home,away,winner\nA,B,A\nB,C,C\nC,A,A\nA,C,C\nB,A,A\nC,B,B\n";
        let d = read_dataset(text, false).unwrap();
        let mut buf = Vec::new();
        write_matches(&d, &mut buf).unwrap();
        let back = read_dataset(std::str::from_utf8(&buf).unwrap(), false).unwrap();
        assert_eq!(counts_by_name(&back), counts_by_name(&d));
        assert_eq!(back.total_observations(), 6);

        let mut buf = Vec::new();
        write_aggregated(&d, &mut buf).unwrap();
        let back = read_dataset(std::str::from_utf8(&buf).unwrap(), false).unwrap();
        assert_eq!(counts_by_name(&back), counts_by_name(&d));
    }

    #[test]
    fn unknown_header() {
        assert!(matches!(read_dataset("a,b\n1,2\n", false), Err(Error::Parse { line: 1, .. })));
    }
}
