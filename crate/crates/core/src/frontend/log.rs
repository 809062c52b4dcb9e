use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::evolution::GenerationReport;

use super::FORMAT_VERSION;

/// One CSV row per generation. Timing columns are left empty when timings are off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationLogRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub worst_fitness: f64,
    pub team_count: usize,
    pub edge_count: usize,
    pub mean_program_length: f64,
    pub evaluation_ms: Option<f64>,
    pub mutation_ms: Option<f64>,
}

impl GenerationLogRow {
    pub fn from_report(report: &GenerationReport, timings: bool) -> Self {
        let ms = |d: std::time::Duration| timings.then_some(d.as_secs_f64() * 1e3);
        Self {
            generation: report.generation,
            best_fitness: report.best_fitness,
            mean_fitness: report.mean_fitness,
            worst_fitness: report.worst_fitness,
            team_count: report.team_count,
            edge_count: report.edge_count,
            mean_program_length: report.mean_program_length,
            evaluation_ms: ms(report.evaluation_time),
            mutation_ms: ms(report.mutation_time),
        }
    }
}

/// Streams generation rows as CSV, preceded by a `# formatVersion=1` comment.
pub struct CsvLogger<W: Write> {
    writer: csv::Writer<W>,
    timings: bool,
}

impl<W: Write> CsvLogger<W> {
    pub fn new(mut inner: W, timings: bool) -> std::io::Result<Self> {
        writeln!(inner, "# formatVersion={FORMAT_VERSION}")?;
        Ok(Self {
            writer: csv::Writer::from_writer(inner),
            timings,
        })
    }

    pub fn log(&mut self, report: &GenerationReport) -> Result<(), csv::Error> {
        self.writer.serialize(GenerationLogRow::from_report(report, self.timings))?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.writer.into_inner().map_err(|e| e.into_error()).expect("flushed after every row")
    }
}

pub fn read_log(reader: impl Read) -> Result<Vec<GenerationLogRow>, csv::Error> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader)
        .deserialize()
        .collect()
}
