//! CSV ingestion and export of task and volunteer tables.
//!
//! `tasks.csv`: `id,budget,skills,arrival,duration`
//! `volunteers.csv`: `id,expense,skills,arrival,departure,willingness,bias,rating`
//!
//! Skill cells are `|`-separated.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;

use crate::domain::{validate_world, SkillCatalog, SkillSet, Task, Volunteer};
use crate::error::{Result, WcbError};

pub const TASK_HEADER: [&str; 5] = ["id", "budget", "skills", "arrival", "duration"];
pub const VOLUNTEER_HEADER: [&str; 8] = [
    "id",
    "expense",
    "skills",
    "arrival",
    "departure",
    "willingness",
    "bias",
    "rating",
];

pub fn parse_skills(cell: &str) -> SkillSet {
    cell.split('|').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

pub fn format_skills(skills: &SkillSet) -> String {
    skills.iter().map(String::as_str).collect::<Vec<_>>().join("|")
}

struct Rows {
    path: std::path::PathBuf,
    records: Vec<(u64, csv::StringRecord)>,
}

fn read_rows<R: Read>(reader: R, path: &Path, header: &[&str]) -> Result<Rows> {
    let parse_err = |line: u64, message: String| WcbError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        records.push((line, record));
    }
    Ok(Rows {
        path: path.to_path_buf(),
        records,
    })
}

impl Rows {
    fn number(&self, line: u64, record: &csv::StringRecord, col: usize, name: &str) -> Result<f64> {
        record[col].parse::<f64>().map_err(|e| WcbError::Parse {
            path: self.path.clone(),
            line,
            message: format!("column {name}: {e} ({:?})", &record[col]),
        })
    }
}

fn parse_tasks<R: Read>(reader: R, path: &Path) -> Result<Vec<Task>> {
    let rows = read_rows(reader, path, &TASK_HEADER)?;
    rows.records
        .iter()
        .map(|(line, r)| {
            Ok(Task {
                id: r[0].to_string(),
                budget: rows.number(*line, r, 1, "budget")?,
                required_skills: parse_skills(&r[2]),
                arrival: rows.number(*line, r, 3, "arrival")?,
                duration: rows.number(*line, r, 4, "duration")?,
            })
        })
        .collect()
}

fn parse_volunteers<R: Read>(reader: R, path: &Path) -> Result<Vec<Volunteer>> {
    let rows = read_rows(reader, path, &VOLUNTEER_HEADER)?;
    rows.records
        .iter()
        .map(|(line, r)| {
            Ok(Volunteer {
                id: r[0].to_string(),
                expense: rows.number(*line, r, 1, "expense")?,
                skills: parse_skills(&r[2]),
                arrival: rows.number(*line, r, 3, "arrival")?,
                departure: rows.number(*line, r, 4, "departure")?,
                willingness: rows.number(*line, r, 5, "willingness")?,
                bias: rows.number(*line, r, 6, "bias")?,
                rating: rows.number(*line, r, 7, "rating")?,
            })
        })
        .collect()
}

pub fn read_tasks(path: &Path) -> Result<Vec<Task>> {
    let file = File::open(path).map_err(|e| WcbError::io(path, e))?;
    parse_tasks(file, path)
}

pub fn read_volunteers(path: &Path) -> Result<Vec<Volunteer>> {
    let file = File::open(path).map_err(|e| WcbError::io(path, e))?;
    parse_volunteers(file, path)
}

/// Keeps the first row of each id and reports the rest.
fn dedup_by_id<T>(items: Vec<T>, id: impl Fn(&T) -> &str, kind: &str) -> Vec<T> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        if seen.insert(id(&item).to_string()) {
            out.push(item);
        } else {
            warn!("dropping duplicate {kind} {}", id(&item));
        }
    }
    out
}

/// A loaded, de-duplicated and validated dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: SkillCatalog,
    pub tasks: Vec<Task>,
    pub volunteers: Vec<Volunteer>,
    pub duplicates_removed: usize,
}

pub fn load_dataset(tasks_path: &Path, volunteers_path: &Path) -> Result<Dataset> {
    let raw_tasks = read_tasks(tasks_path)?;
    let raw_volunteers = read_volunteers(volunteers_path)?;
    let before = raw_tasks.len() + raw_volunteers.len();
    let tasks = dedup_by_id(raw_tasks, |t| &t.id, "task");
    let volunteers = dedup_by_id(raw_volunteers, |v| &v.id, "volunteer");
    let duplicates_removed = before - tasks.len() - volunteers.len();

    let catalog = if tasks.is_empty() && volunteers.is_empty() {
        // Placeholder so an empty dataset still yields a usable world.
        SkillCatalog::new(["none"])?
    } else {
        SkillCatalog::from_world(&tasks, &volunteers)
            .map_err(|_| WcbError::Validation(vec![crate::domain::Violation::new("dataset", "no skills at all")]))?
    };
    let violations = validate_world(&catalog, &tasks, &volunteers);
    if !violations.is_empty() {
        return Err(WcbError::Validation(violations));
    }
    Ok(Dataset {
        catalog,
        tasks,
        volunteers,
        duplicates_removed,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> WcbError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => WcbError::io(path, io),
        other => WcbError::Invalid(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_tasks<W: Write>(out: W, tasks: &[Task], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TASK_HEADER).map_err(|e| csv_error(path, e))?;
    for t in tasks {
        w.write_record([
            t.id.clone(),
            t.budget.to_string(),
            format_skills(&t.required_skills),
            t.arrival.to_string(),
            t.duration.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| WcbError::io(path, e))
}

pub fn write_volunteers<W: Write>(out: W, volunteers: &[Volunteer], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(VOLUNTEER_HEADER).map_err(|e| csv_error(path, e))?;
    for v in volunteers {
        w.write_record([
            v.id.clone(),
            v.expense.to_string(),
            format_skills(&v.skills),
            v.arrival.to_string(),
            v.departure.to_string(),
            v.willingness.to_string(),
            v.bias.to_string(),
            v.rating.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| WcbError::io(path, e))
}

pub fn save_dataset(dir: &Path, tasks: &[Task], volunteers: &[Volunteer]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| WcbError::io(dir, e))?;
    let tp = dir.join("tasks.csv");
    let vp = dir.join("volunteers.csv");
    write_tasks(File::create(&tp).map_err(|e| WcbError::io(&tp, e))?, tasks, &tp)?;
    write_volunteers(File::create(&vp).map_err(|e| WcbError::io(&vp, e))?, volunteers, &vp)
}
