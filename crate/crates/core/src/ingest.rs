//! Parsing, validation, expansion and map filtering of team-composition records.
//!
//! Two physical layouts are accepted:
//!
//! * **wide**: one row per composition with `agent_1`..`agent_5` columns;
//! * **long**: one row per agent, rows sharing the metadata columns and a
//!   `composition_key` form one composition.
//!
//! Agent names are matched on a folded key (lowercase, alphanumerics only) so
//! that `KAY/O`, `Kay/o` and `Kayo` refer to the same agent. The first spelling
//! seen in the file is kept for display.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TEAM_SIZE: usize = 5;

const META_COLUMNS: [&str; 5] = ["tournament", "stage", "match_type", "map", "team"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Wide,
    Long,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wide" => Ok(InputFormat::Wide),
            "long" => Ok(InputFormat::Long),
            other => Err(format!("unknown input format `{other}` (expected wide or long)")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Wide => "wide",
            InputFormat::Long => "long",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    #[default]
    Strict,
    /// Skip malformed rows and invalid groups instead of aborting.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub format: InputFormat,
    /// Field delimiter. `None` sniffs the header: tab if it contains a tab and no comma.
    pub delimiter: Option<u8>,
    pub strictness: Strictness,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            format: InputFormat::Wide,
            delimiter: None,
            strictness: Strictness::Strict,
        }
    }
}

/// One team-composition entry as found in the source, before expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// Source line of the row (wide) or of the group's first row (long).
    pub line: u64,
    pub tournament: String,
    pub stage: String,
    pub match_type: String,
    pub map: String,
    pub team: String,
    /// Exactly five agents, sorted by folded key.
    pub agents: Vec<String>,
    pub wins: u64,
    pub losses: u64,
    pub maps_played: u64,
}

/// A row or group that was rejected in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<RawRecord>,
    pub rows_read: usize,
    pub skipped: Vec<Issue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositionId {
    pub record: usize,
    pub copy: u64,
}

impl fmt::Display for CompositionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}.{}", self.record, self.copy)
    }
}

/// One observed team of five distinct agents on one map instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamComposition {
    pub id: CompositionId,
    pub map: String,
    pub team: String,
    /// Exactly five distinct agents, sorted by folded key.
    pub agents: Vec<String>,
}

/// Sorted, deduplicated list of agents with a name to position index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    agents: Vec<String>,
    index: HashMap<String, usize>,
}

impl Roster {
    /// Builds a roster from arbitrary names; duplicates (by folded key) keep the first spelling.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut by_key: Vec<(String, String)> = Vec::new();
        let mut seen = HashMap::new();
        for name in names {
            let name = name.into().trim().to_string();
            let key = agent_key(&name);
            if seen.insert(key.clone(), ()).is_none() {
                by_key.push((key, name));
            }
        }
        by_key.sort();
        let index = by_key
            .iter()
            .enumerate()
            .map(|(i, (key, _))| (key.clone(), i))
            .collect();
        Roster {
            agents: by_key.into_iter().map(|(_, name)| name).collect(),
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.agents
    }

    pub fn name(&self, position: usize) -> &str {
        &self.agents[position]
    }

    /// Position of `name`, matched on the folded key.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(&agent_key(name)).copied()
    }
}

/// Counts collected between parsing and expansion, reported alongside every analysis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DataQuality {
    pub rows_read: usize,
    pub records_parsed: usize,
    pub skipped: Vec<Issue>,
    pub records_retained: usize,
    pub dropped_other_map: usize,
    pub dropped_blank_map: usize,
    pub blank_map_retained: usize,
    pub compositions: usize,
}

/// Folded matching key for an agent name.
pub fn agent_key(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn column_key(name: &str) -> String {
    name.trim()
        .trim_start_matches('\u{feff}')
        .to_ascii_lowercase()
        .replace([' ', '-'], "_")
}

fn canonical_column(name: &str) -> String {
    let key = column_key(name);
    match key.as_str() {
        "total_wins_by_map" | "wins_by_map" => "wins".into(),
        "total_loss_by_map" | "total_losses_by_map" | "losses_by_map" => "losses".into(),
        "total_maps_played" => "maps_played".into(),
        _ => key,
    }
}

struct Columns {
    meta: [usize; 5],
    agents: Vec<usize>,
    composition_key: Option<usize>,
    wins: usize,
    losses: usize,
    maps_played: usize,
}

impl Columns {
    fn resolve(header: &csv::StringRecord, format: InputFormat) -> Result<Self> {
        let names: Vec<String> = header.iter().map(canonical_column).collect();
        let find = |col: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == col)
                .ok_or_else(|| Error::MissingColumn(col.to_string()))
        };
        let mut meta = [0; 5];
        for (slot, col) in meta.iter_mut().zip(META_COLUMNS) {
            *slot = find(col)?;
        }
        let (agents, composition_key) = match format {
            InputFormat::Wide => (
                (1..=TEAM_SIZE)
                    .map(|i| find(&format!("agent_{i}")))
                    .collect::<Result<Vec<_>>>()?,
                None,
            ),
            InputFormat::Long => (vec![find("agent")?], Some(find("composition_key")?)),
        };
        Ok(Columns {
            meta,
            agents,
            composition_key,
            wins: find("wins")?,
            losses: find("losses")?,
            maps_played: find("maps_played")?,
        })
    }
}

struct Row {
    line: u64,
    meta: [String; 5],
    agents: Vec<String>,
    composition_key: String,
    wins: u64,
    losses: u64,
    maps_played: u64,
}

fn parse_count(field: &str, column: &str, line: u64) -> Result<u64> {
    field.trim().parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("`{column}` must be a nonnegative integer, got `{}`", field.trim()),
    })
}

fn parse_row(record: &csv::StringRecord, cols: &Columns, width: usize) -> Result<Row> {
    let line = record.position().map_or(0, |p| p.line());
    if record.len() != width {
        return Err(Error::Parse {
            line,
            message: format!("expected {width} fields, found {}", record.len()),
        });
    }
    let get = |i: usize| record.get(i).unwrap_or("").trim().to_string();
    Ok(Row {
        line,
        meta: cols.meta.map(get),
        agents: cols.agents.iter().map(|&i| get(i)).collect(),
        composition_key: cols.composition_key.map(get).unwrap_or_default(),
        wins: parse_count(&get(cols.wins), "wins", line)?,
        losses: parse_count(&get(cols.losses), "losses", line)?,
        maps_played: parse_count(&get(cols.maps_played), "maps_played", line)?,
    })
}

fn validate_group(group: &str, agents: &[String], maps_played: u64) -> Result<Vec<String>> {
    let invalid = |message: String| Error::Validation {
        group: group.to_string(),
        message,
    };
    if agents.len() != TEAM_SIZE {
        return Err(invalid(format!("expected {TEAM_SIZE} agents, found {}", agents.len())));
    }
    let mut keyed: Vec<(String, String)> = Vec::with_capacity(TEAM_SIZE);
    for agent in agents {
        let key = agent_key(agent);
        if key.is_empty() {
            return Err(invalid("blank agent name".into()));
        }
        if keyed.iter().any(|(k, _)| *k == key) {
            return Err(invalid(format!("duplicate agent `{agent}`")));
        }
        keyed.push((key, agent.clone()));
    }
    if maps_played == 0 {
        return Err(invalid("maps_played must be at least 1".into()));
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, name)| name).collect())
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') && !header.contains(',') {
        b'\t'
    } else {
        b','
    }
}

/// Reads delimited text into validated records.
///
/// In strict mode the first malformed row or invalid group aborts with an
/// error carrying its line number or group identity. In lenient mode such
/// rows and groups are skipped and reported in [`ParsedRecords::skipped`].
/// Empty input yields no records.
pub fn parse_records<R: Read>(mut source: R, options: &ParseOptions) -> Result<ParsedRecords> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Ok(ParsedRecords::default());
    }
    let delimiter = options.delimiter.unwrap_or_else(|| sniff_delimiter(&text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let cols = Columns::resolve(&header, options.format)?;
    let lenient = options.strictness == Strictness::Lenient;

    let mut parsed = ParsedRecords::default();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                let err = Error::Parse {
                    line,
                    message: e.to_string(),
                };
                parsed.rows_read += 1;
                if lenient {
                    parsed.skipped.push(Issue {
                        line,
                        message: err.to_string(),
                    });
                    continue;
                }
                return Err(err);
            }
        };
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        parsed.rows_read += 1;
        match parse_row(&record, &cols, header.len()) {
            Ok(row) => rows.push(row),
            Err(err) if lenient => {
                let line = record.position().map_or(0, |p| p.line());
                parsed.skipped.push(Issue {
                    line,
                    message: err.to_string(),
                });
            }
            Err(err) => return Err(err),
        }
    }

    let groups = match options.format {
        InputFormat::Wide => rows
            .into_iter()
            .map(|row| {
                let label = format!("line {} ({} on {})", row.line, row.meta[4], row.meta[3]);
                (label, vec![row])
            })
            .collect(),
        InputFormat::Long => group_long_rows(rows),
    };

    for (label, rows) in groups {
        match assemble(&label, rows) {
            Ok(record) => parsed.records.push(record),
            Err((line, err)) if lenient => {
                parsed.skipped.push(Issue {
                    line,
                    message: err.to_string(),
                });
            }
            Err((_, err)) => return Err(err),
        }
    }
    canonicalize_spellings(&mut parsed.records);
    Ok(parsed)
}

fn group_long_rows(rows: Vec<Row>) -> Vec<(String, Vec<Row>)> {
    let mut order: Vec<(String, Vec<Row>)> = Vec::new();
    let mut slot: HashMap<(Vec<String>, String), usize> = HashMap::new();
    for row in rows {
        let key = (
            row.meta.iter().map(|m| m.to_lowercase()).collect::<Vec<_>>(),
            row.composition_key.clone(),
        );
        let i = *slot.entry(key).or_insert_with(|| {
            let label = format!("{}/{}", row.meta.join("/"), row.composition_key);
            order.push((label, Vec::new()));
            order.len() - 1
        });
        order[i].1.push(row);
    }
    order
}

fn assemble(label: &str, rows: Vec<Row>) -> std::result::Result<RawRecord, (u64, Error)> {
    let first = &rows[0];
    let line = first.line;
    if rows
        .iter()
        .any(|r| (r.wins, r.losses, r.maps_played) != (first.wins, first.losses, first.maps_played))
    {
        return Err((
            line,
            Error::Validation {
                group: label.to_string(),
                message: "inconsistent wins/losses/maps_played across rows".into(),
            },
        ));
    }
    let agents: Vec<String> = rows.iter().flat_map(|r| r.agents.iter().cloned()).collect();
    let agents = validate_group(label, &agents, first.maps_played).map_err(|e| (line, e))?;
    let [tournament, stage, match_type, map, team] = first.meta.clone();
    Ok(RawRecord {
        line,
        tournament,
        stage,
        match_type,
        map,
        team,
        agents,
        wins: first.wins,
        losses: first.losses,
        maps_played: first.maps_played,
    })
}

fn canonicalize_spellings(records: &mut [RawRecord]) {
    let mut display: HashMap<String, String> = HashMap::new();
    for record in records.iter() {
        for agent in &record.agents {
            display.entry(agent_key(agent)).or_insert_with(|| agent.clone());
        }
    }
    for record in records.iter_mut() {
        for agent in record.agents.iter_mut() {
            *agent = display[&agent_key(agent)].clone();
        }
    }
}

/// Records kept by a map filter, with drop counts for the data-quality summary.
#[derive(Debug, Clone, Default)]
pub struct FilteredRecords {
    pub retained: Vec<RawRecord>,
    pub dropped_other_map: usize,
    pub dropped_blank_map: usize,
    pub blank_map_retained: usize,
}

/// Applies an optional case-insensitive map filter. Blank maps are dropped
/// when a filter is set and retained (but counted) otherwise.
pub fn filter_records(records: &[RawRecord], map_filter: Option<&str>) -> FilteredRecords {
    let wanted = map_filter.map(|m| m.trim().to_lowercase());
    let mut out = FilteredRecords::default();
    for record in records {
        let map = record.map.trim();
        match (&wanted, map.is_empty()) {
            (Some(_), true) => out.dropped_blank_map += 1,
            (Some(w), false) if map.to_lowercase() != *w => out.dropped_other_map += 1,
            (None, true) => {
                out.blank_map_retained += 1;
                out.retained.push(record.clone());
            }
            _ => out.retained.push(record.clone()),
        }
    }
    out
}

/// Expands each record into `maps_played` compositions.
pub fn expand(records: &[RawRecord]) -> Vec<TeamComposition> {
    records
        .iter()
        .enumerate()
        .flat_map(|(record, r)| {
            (0..r.maps_played).map(move |copy| TeamComposition {
                id: CompositionId { record, copy },
                map: r.map.clone(),
                team: r.team.clone(),
                agents: r.agents.clone(),
            })
        })
        .collect()
}

/// Filters by map, then expands every retained record by its play count.
pub fn expand_and_filter(records: &[RawRecord], map_filter: Option<&str>) -> Vec<TeamComposition> {
    expand(&filter_records(records, map_filter).retained)
}

/// Every agent appearing in any composition, sorted and deduplicated.
pub fn build_roster(comps: &[TeamComposition]) -> Result<Roster> {
    if comps.is_empty() {
        return Err(Error::NoCompositions);
    }
    let mut seen = BTreeSet::new();
    let mut names = Vec::new();
    for agent in comps.iter().flat_map(|c| &c.agents) {
        if seen.insert(agent_key(agent)) {
            names.push(agent.clone());
        }
    }
    Ok(Roster::new(names))
}

/// Writes records in the wide layout accepted by [`parse_records`].
pub fn write_wide<W: Write>(records: &[RawRecord], sink: W, delimiter: u8) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=TEAM_SIZE).map(|i| format!("agent_{i}")));
    header.extend(["wins", "losses", "maps_played"].map(String::from));
    writer.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.tournament.clone(),
            r.stage.clone(),
            r.match_type.clone(),
            r.map.clone(),
            r.team.clone(),
        ];
        row.extend(r.agents.iter().cloned());
        row.extend([r.wins, r.losses, r.maps_played].map(|n| n.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
