//! CSV writing with `#` metadata headers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::ChannelConfig;

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub struct Csv<W: Write> {
    out: W,
}

impl<W: Write> Csv<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    /// Tool name, version and command.
    pub fn banner(&mut self, command: &str) -> io::Result<()> {
        writeln!(self.out, "# channelfj {} {command}", env!("CARGO_PKG_VERSION"))
    }

    pub fn config(&mut self, label: Option<&str>, cfg: &ChannelConfig) -> io::Result<()> {
        match label {
            Some(l) => writeln!(self.out, "# config[{l}]: {}", cfg.to_json()),
            None => writeln!(self.out, "# config: {}", cfg.to_json()),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> io::Result<()> {
        writeln!(self.out, "# {key}: {value}")
    }

    pub fn columns(&mut self, names: &[&str]) -> io::Result<()> {
        writeln!(self.out, "{}", names.join(","))
    }

    pub fn row(&mut self, fields: &[Field]) -> io::Result<()> {
        let parts: Vec<String> = fields.iter().map(Field::render).collect();
        writeln!(self.out, "{}", parts.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub enum Field<'a> {
    Num(f64),
    Int(usize),
    Text(&'a str),
}

impl Field<'_> {
    fn render(&self) -> String {
        match self {
            Field::Num(x) => format!("{x:e}"),
            Field::Int(i) => i.to_string(),
            Field::Text(s) => s.to_string(),
        }
    }
}
