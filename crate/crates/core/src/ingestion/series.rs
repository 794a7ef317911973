use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Per-link traffic values, rows = links, columns = time intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSeries {
    links: Vec<String>,
    intervals: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
    pub interval_minutes: Option<f64>,
}

impl LinkSeries {
    pub fn new(
        links: Vec<String>,
        intervals: usize,
        values: Vec<f64>,
        missing: Vec<bool>,
        interval_minutes: Option<f64>,
    ) -> Result<Self> {
        let n = links.len() * intervals;
        if values.len() != n {
            return Err(Error::dim("link series values", n, values.len()));
        }
        if missing.len() != n {
            return Err(Error::dim("link series mask", n, missing.len()));
        }
        Ok(LinkSeries {
            links,
            intervals,
            values,
            missing,
            interval_minutes,
        })
    }

    pub fn links(&self) -> &[String] {
        &self.links
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_intervals(&self) -> usize {
        self.intervals
    }

    pub fn link_row(&self, link: usize) -> &[f64] {
        &self.values[link * self.intervals..(link + 1) * self.intervals]
    }

    pub fn value(&self, link: usize, t: usize) -> f64 {
        self.values[link * self.intervals + t]
    }

    pub fn is_missing(&self, link: usize, t: usize) -> bool {
        self.missing[link * self.intervals + t]
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when any link lacks a value at interval `t`.
    pub fn interval_has_gap(&self, t: usize) -> bool {
        (0..self.links.len()).any(|l| self.is_missing(l, t))
    }
}

/// Reads the CSV link-series format: header of link names, one row per
/// interval, empty cell = missing.
pub fn read_csv_series<R: Read>(reader: R, context: &str) -> Result<LinkSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let err = |message: String| Error::Parse {
        context: context.to_string(),
        message,
    };
    let links: Vec<String> = rdr
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if links.is_empty() || links.iter().any(|l| l.is_empty()) {
        return Err(err("header must name every link column".into()));
    }
    let n = links.len();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| err(format!("row {line}: {e}")))?;
        if record.len() != n {
            return Err(err(format!(
                "row {line}: expected {n} fields, found {}",
                record.len()
            )));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let cell = cell.trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| {
                        err(format!("row {line}, column `{}`: `{cell}` is not a number", links[c]))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let t = rows.len();
    let mut values = vec![0.0; n * t];
    let mut missing = vec![false; n * t];
    for (col, row) in rows.iter().enumerate() {
        for (link, cell) in row.iter().enumerate() {
            match cell {
                Some(v) => values[link * t + col] = *v,
                None => missing[link * t + col] = true,
            }
        }
    }
    LinkSeries::new(links, t, values, missing, None)
}

pub fn load_csv_series(path: &Path) -> Result<LinkSeries> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    read_csv_series(file, &path.display().to_string())
}

/// Writes the CSV link-series format. Values use the shortest roundtrip
/// representation, so re-reading is exact.
pub fn write_csv_series<W: Write>(series: &LinkSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(series.links()).map_err(csv_err)?;
    let mut row = Vec::with_capacity(series.num_links());
    for t in 0..series.num_intervals() {
        row.clear();
        for l in 0..series.num_links() {
            row.push(if series.is_missing(l, t) {
                String::new()
            } else {
                format!("{:?}", series.value(l, t))
            });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One window as a table: `link,x0,..,x{d-1}`, one row per link.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowTable {
    pub links: Vec<String>,
    pub window: usize,
    /// `N x d`, row-major.
    pub values: Vec<f64>,
}

pub fn write_window_csv<W: Write>(table: &WindowTable, writer: W) -> Result<()> {
    let d = table.window;
    if table.values.len() != table.links.len() * d {
        return Err(Error::dim("window table values", table.links.len() * d, table.values.len()));
    }
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    let mut header = vec!["link".to_string()];
    header.extend((0..d).map(|t| format!("x{t}")));
    w.write_record(&header).map_err(csv_err)?;
    for (l, link) in table.links.iter().enumerate() {
        let mut row = vec![link.clone()];
        row.extend(table.values[l * d..(l + 1) * d].iter().map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_window_csv<R: Read>(reader: R, context: &str) -> Result<WindowTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let err = |message: String| Error::Parse {
        context: context.to_string(),
        message,
    };
    let cols = rdr.headers().map_err(|e| err(e.to_string()))?.len();
    if cols < 2 {
        return Err(err("expected a link column and at least one value column".into()));
    }
    let window = cols - 1;
    let mut links = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| err(format!("row {line}: {e}")))?;
        if record.len() != cols {
            return Err(err(format!("row {line}: expected {cols} fields, found {}", record.len())));
        }
        links.push(record[0].trim().to_string());
        for cell in record.iter().skip(1) {
            let cell = cell.trim();
            values.push(
                cell.parse::<f64>()
                    .map_err(|_| err(format!("row {line}: `{cell}` is not a number")))?,
            );
        }
    }
    if links.is_empty() {
        return Err(err("no link rows".into()));
    }
    Ok(WindowTable { links, window, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_table_roundtrip() {
        let t = WindowTable {
            links: vec!["a->b".into(), "b->a".into()],
            window: 3,
            values: vec![0.1, 1e-300, 3.0, -4.5, 1.0 / 3.0, 7e12],
        };
        let mut buf = Vec::new();
        write_window_csv(&t, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("link,x0,x1,x2\n"));
        assert_eq!(read_window_csv(buf.as_slice(), "w").unwrap(), t);
        assert!(read_window_csv("link,x0\na,zz\n".as_bytes(), "w").is_err());
    }

    #[test]
    fn two_links_three_intervals() {
        let s = read_csv_series("a->b,b->a\n1,2\n3,4\n5,6\n".as_bytes(), "t").unwrap();
        assert_eq!((s.num_links(), s.num_intervals()), (2, 3));
        assert_eq!(s.link_row(0), &[1.0, 3.0, 5.0]);
        assert_eq!(s.link_row(1), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn empty_cell_is_masked() {
        let s = read_csv_series("a,b\n1,\n3,4\n".as_bytes(), "t").unwrap();
        let masked: Vec<bool> = s.missing_mask().to_vec();
        assert_eq!(masked, vec![false, false, true, false]);
        assert!(s.is_missing(1, 0));
    }

    #[test]
    fn ragged_row_names_its_row() {
        let err = read_csv_series("a,b\n1,2\n3\n".as_bytes(), "f.csv").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn roundtrip_is_exact() {
        let values = vec![0.1, 1e-300, -2.5, 3.0 / 7.0, 12345.678, f64::MAX];
        let missing = vec![false, true, false, false, false, true];
        let s = LinkSeries::new(vec!["x->y".into(), "y->x".into()], 3, values, missing, None).unwrap();
        let mut buf = Vec::new();
        write_csv_series(&s, &mut buf).unwrap();
        let back = read_csv_series(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.missing_mask(), s.missing_mask());
        for l in 0..2 {
            for t in 0..3 {
                if !s.is_missing(l, t) {
                    assert_eq!(back.value(l, t).to_bits(), s.value(l, t).to_bits());
                }
            }
        }
    }
}
