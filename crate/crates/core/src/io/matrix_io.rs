use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Orientation, PairMatrix};

/// Whether the first CSV row holds item labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Header {
    Present,
    Absent,
    /// A header is assumed when some cell of the first row is neither blank
    /// nor a number.
    #[default]
    Detect,
}

fn parse_cell(cell: &str, x: usize, y: usize) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Parse(format!("entry ({x}, {y}) is not a number: {cell:?}")))
}

/// Reads a dense square CSV table.
pub fn read_matrix_csv<R: Read>(reader: R, orientation: Orientation, header: Header) -> Result<PairMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        records.push(rec?);
    }
    let has_header = match header {
        Header::Present => true,
        Header::Absent => false,
        Header::Detect => records.first().is_some_and(|r| {
            r.iter().any(|c| !c.is_empty() && c.parse::<f64>().is_err())
        }),
    };
    let labels = if has_header && !records.is_empty() {
        Some(records.remove(0).iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };
    let raw = records
        .iter()
        .enumerate()
        .map(|(x, r)| r.iter().enumerate().map(|(y, c)| parse_cell(c, x, y)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    PairMatrix::ingest(raw, orientation, labels)
}

/// Writes the matrix as CSV using the shortest round-tripping decimal form
/// of every entry, so reading it back is bit-identical.
pub fn write_matrix_csv<W: Write>(m: &PairMatrix, writer: W, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    if header {
        w.write_record(m.all_labels())?;
    }
    for x in 0..m.k() {
        w.write_record(m.row(x).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// The JSON matrix format. `null` is accepted on the diagonal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    pub matrix: Vec<Vec<Option<f64>>>,
}

impl MatrixDocument {
    /// `orientation` must come from the document, the caller, or both in
    /// agreement.
    pub fn into_matrix(self, orientation: Option<Orientation>) -> Result<PairMatrix> {
        let o = match (self.orientation, orientation) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::InvalidParameter(format!(
                    "document orientation {a} conflicts with requested {b}"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "orientation must be given explicitly".into(),
                ))
            }
        };
        PairMatrix::ingest(self.matrix, o, self.labels)
    }
}

pub fn read_matrix_json<R: Read>(reader: R, orientation: Option<Orientation>) -> Result<PairMatrix> {
    let doc: MatrixDocument = serde_json::from_reader(reader)?;
    doc.into_matrix(orientation)
}

pub fn matrix_to_json(m: &PairMatrix) -> serde_json::Value {
    let doc = MatrixDocument {
        labels: m.labels().map(<[String]>::to_vec),
        orientation: Some(m.orientation()),
        matrix: m
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect(),
    };
    serde_json::to_value(doc).expect("matrix serializes")
}

/// Reads a `.json` file as a JSON matrix and anything else as CSV.
pub fn read_matrix(path: &Path, orientation: Option<Orientation>, header: Header) -> Result<PairMatrix> {
    let file = std::fs::File::open(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        read_matrix_json(file, orientation)
    } else {
        let o = orientation
            .ok_or_else(|| Error::InvalidParameter("orientation must be given explicitly".into()))?;
        read_matrix_csv(file, o, header)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "3,2,2,1,1\n2,3,2,1,1\n2,2,3,1,1\n1,1,1,3,2\n1,1,1,2,3\n";

    #[test]
    fn plain_csv() {
        let m = read_matrix_csv(EXAMPLE.as_bytes(), Orientation::Similarity, Header::Detect).unwrap();
        assert_eq!(m.k(), 5);
        assert!(m.labels().is_none());
        assert_eq!(m.get(3, 4), 2.0);
    }

    #[test]
    fn header_and_blank_diagonal() {
        let text = "a,b,c\n,4,15\n4,,15\n15,15,\n";
        let m = read_matrix_csv(text.as_bytes(), Orientation::Dissimilarity, Header::Detect).unwrap();
        assert_eq!(m.labels().unwrap(), ["a", "b", "c"]);
        assert_eq!(m.get(0, 0), 3.0);
        let forced = read_matrix_csv("1,2\n2,1\n".as_bytes(), Orientation::Dissimilarity, Header::Present);
        assert!(forced.is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_identical() {
        let mut rng = crate::random::trial_rng(5, 0);
        let m = crate::random::random_matrix(&mut rng, 7, Orientation::Similarity)
            .with_labels(Some((0..7).map(|i| format!("item {i}")).collect()))
            .unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf, true).unwrap();
        let back = read_matrix_csv(buf.as_slice(), Orientation::Similarity, Header::Present).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_csv() {
        assert!(matches!(
            read_matrix_csv("1,2\n2\n".as_bytes(), Orientation::Dissimilarity, Header::Absent),
            Err(Error::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            read_matrix_csv("0,x\n1,0\n".as_bytes(), Orientation::Dissimilarity, Header::Absent),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_matrix_csv("0,1\n2,0\n".as_bytes(), Orientation::Dissimilarity, Header::Absent),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn json_matrix() {
        let text = r#"{"labels":["p","q"],"orientation":"similarity","matrix":[[null,1],[1,null]]}"#;
        let m = read_matrix_json(text.as_bytes(), None).unwrap();
        assert_eq!(m.get(0, 0), 2.0);
        assert!(read_matrix_json(text.as_bytes(), Some(Orientation::Dissimilarity)).is_err());
        let bare = r#"{"matrix":[[0,1],[1,0]]}"#;
        assert!(read_matrix_json(bare.as_bytes(), None).is_err());
        let again = read_matrix_json(matrix_to_json(&m).to_string().as_bytes(), None).unwrap();
        assert_eq!(again, m);
    }
}
