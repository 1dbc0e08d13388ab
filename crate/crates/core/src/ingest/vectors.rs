use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Feature vectors keyed by node id, all of one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorTable {
    dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<()> {
        let id = id.into();
        if v.len() != self.dim {
            return Err(Error::shape(format!("vector for {id}"), self.dim, v.len()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data(format!("non-finite value in vector for {id}")));
        }
        self.rows.insert(id, v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.rows.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Reads `id,dim,v1..vN`; `N` comes from the header and every row must agree.
pub fn load_vectors(path: &Path) -> Result<VectorTable> {
    let mut r = super::open(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "dim" {
        return Err(Error::Schema(format!("{}: header must start with `id,dim,`", path.display())));
    }
    let dim = header.len() - 2;
    let mut table = VectorTable::new(dim);
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let declared: usize = super::number(&rec, 1, path, line)?;
        if declared != dim || rec.len() != dim + 2 {
            return Err(Error::Schema(format!(
                "{}:{line}: row dimension {declared} ({} values) disagrees with header dimension {dim}",
                path.display(),
                rec.len().saturating_sub(2)
            )));
        }
        let v = (0..dim)
            .map(|c| super::number::<f64>(&rec, c + 2, path, line))
            .collect::<Result<Vec<_>>>()?;
        table.insert(&rec[0], v)?;
    }
    Ok(table)
}

pub fn write_vectors(table: &VectorTable, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["id".to_string(), "dim".to_string()];
    header.extend((1..=table.dim).map(|i| format!("v{i}")));
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (id, v) in table.iter() {
        let mut row = vec![id.to_string(), table.dim.to_string()];
        row.extend(v.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_round_trip_exactly() {
        let mut t = VectorTable::new(3);
        t.insert("u1", vec![0.1, -2.5e-7, 1.0 / 3.0]).unwrap();
        t.insert("psychic attack", vec![0.0, 1.0, 2.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        write_vectors(&t, &p).unwrap();
        assert_eq!(load_vectors(&p).unwrap(), t);
    }

    #[test]
    fn dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        std::fs::write(&p, "id,dim,v1,v2\na,2,0.1,0.2\nb,3,0.1,0.2,0.3\n").unwrap();
        assert!(matches!(load_vectors(&p), Err(Error::Schema(_))));
        let mut t = VectorTable::new(2);
        assert!(t.insert("x", vec![1.0]).is_err());
    }
}
