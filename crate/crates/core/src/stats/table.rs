use std::io::{Read, Write};
use std::path::Path;

use super::StatsError;

const FIXED: [&str; 4] = ["subject_id", "age", "sex", "motion"];

/// Per-subject covariates plus named thickness columns (mm).
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectTable {
    pub subject_ids: Vec<String>,
    pub age: Vec<f64>,
    /// 0/1 coded; see [`super::SEX_CODING`].
    pub sex: Vec<f64>,
    pub motion: Vec<f64>,
    pub thickness_names: Vec<String>,
    /// One vector per thickness column, each of length `rows()`.
    pub thickness: Vec<Vec<f64>>,
}

impl SubjectTable {
    pub fn new(
        subject_ids: Vec<String>,
        age: Vec<f64>,
        sex: Vec<f64>,
        motion: Vec<f64>,
        thickness_names: Vec<String>,
        thickness: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        let n = subject_ids.len();
        if age.len() != n || sex.len() != n || motion.len() != n {
            return Err(StatsError::Length("covariate columns differ in length".into()));
        }
        if thickness_names.len() != thickness.len() {
            return Err(StatsError::Length("thickness names and columns differ in count".into()));
        }
        if let Some((name, _)) = thickness_names.iter().zip(&thickness).find(|(_, c)| c.len() != n) {
            return Err(StatsError::Length(format!("thickness column '{name}' has the wrong length")));
        }
        if let Some(i) = sex.iter().position(|&s| s != 0.0 && s != 1.0) {
            return Err(StatsError::Parse(format!("row {}: sex must be 0 or 1, got {}", i + 1, sex[i])));
        }
        Ok(Self { subject_ids, age, sex, motion, thickness_names, thickness })
    }

    pub fn rows(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.thickness_names.iter().position(|n| n == name).map(|i| self.thickness[i].as_slice())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, StatsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| StatsError::Parse(e.to_string()))?.clone();
        let header: Vec<&str> = headers.iter().collect();
        let mut fixed_idx = [0usize; 4];
        for (slot, name) in fixed_idx.iter_mut().zip(FIXED) {
            *slot = header.iter().position(|h| *h == name).ok_or_else(|| StatsError::MissingColumn(name.into()))?;
        }
        let thick_idx: Vec<usize> = (0..header.len()).filter(|i| !fixed_idx.contains(i)).collect();
        let thickness_names: Vec<String> = thick_idx.iter().map(|&i| header[i].to_string()).collect();

        let mut ids = Vec::new();
        let (mut age, mut sex, mut motion) = (Vec::new(), Vec::new(), Vec::new());
        let mut thickness = vec![Vec::new(); thick_idx.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| StatsError::Parse(e.to_string()))?;
            let line = row + 2;
            let num = |i: usize| -> Result<f64, StatsError> {
                let raw = rec.get(i).unwrap_or("");
                let v: f64 = raw.parse().map_err(|_| {
                    StatsError::Parse(format!("line {line}, column '{}': cannot parse '{raw}'", header[i]))
                })?;
                if !v.is_finite() {
                    return Err(StatsError::NonFinite(format!("line {line}, column '{}'", header[i])));
                }
                Ok(v)
            };
            ids.push(rec.get(fixed_idx[0]).unwrap_or("").to_string());
            age.push(num(fixed_idx[1])?);
            sex.push(num(fixed_idx[2])?);
            motion.push(num(fixed_idx[3])?);
            for (col, &i) in thickness.iter_mut().zip(&thick_idx) {
                col.push(num(i)?);
            }
        }
        Self::new(ids, age, sex, motion, thickness_names, thickness)
    }

    pub fn from_path(path: &Path) -> Result<Self, StatsError> {
        let f = std::fs::File::open(path).map_err(|e| StatsError::Parse(format!("{}: {e}", path.display())))?;
        Self::read_csv(f)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), StatsError> {
        let err = |e: csv::Error| StatsError::Parse(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = FIXED.to_vec();
        header.extend(self.thickness_names.iter().map(String::as_str));
        w.write_record(&header).map_err(err)?;
        for i in 0..self.rows() {
            let mut rec = vec![
                self.subject_ids[i].clone(),
                self.age[i].to_string(),
                self.sex[i].to_string(),
                self.motion[i].to_string(),
            ];
            rec.extend(self.thickness.iter().map(|c| c[i].to_string()));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| StatsError::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "subject_id,age,sex,motion,mean_lh,precentral\n\
                       s1,30,0,0.5,2.5,2.6\n\
                       s2,45,1,1.2,2.4,2.5\n\
                       s3,60,1,2.0,2.3,2.35\n";

    #[test]
    fn parse_and_round_trip() {
        let t = SubjectTable::read_csv(CSV.as_bytes()).unwrap();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.thickness_names, ["mean_lh", "precentral"]);
        assert_eq!(t.column("precentral").unwrap(), [2.6, 2.5, 2.35]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(SubjectTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn missing_motion_is_named() {
        let csv = "subject_id,age,sex,mean_lh\ns1,30,0,2.5\n";
        assert_eq!(SubjectTable::read_csv(csv.as_bytes()), Err(StatsError::MissingColumn("motion".into())));
    }

    #[test]
    fn bad_cells_name_line_and_column() {
        let csv = "subject_id,age,sex,motion,mean_lh\ns1,30,0,0.5,abc\n";
        match SubjectTable::read_csv(csv.as_bytes()) {
            Err(StatsError::Parse(msg)) => assert!(msg.contains("line 2") && msg.contains("mean_lh"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let csv = "subject_id,age,sex,motion,mean_lh\ns1,NaN,0,0.5,2.0\n";
        assert!(matches!(SubjectTable::read_csv(csv.as_bytes()), Err(StatsError::NonFinite(_))));
        let csv = "subject_id,age,sex,motion,mean_lh\ns1,30,2,0.5,2.0\n";
        assert!(matches!(SubjectTable::read_csv(csv.as_bytes()), Err(StatsError::Parse(_))));
    }
}
