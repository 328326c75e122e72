//! Plain-text instance files.
//!
//! ```text
//! quadratic n d m
//! d_1 ... d_m
//! <for each component: d rows of A_i, then b_i, then c_i>
//! ```
//!
//! Sigmoid instances use the header `sigmoid n d m` followed by one line per
//! component holding the label and then the data row. Floats are written with
//! 17 significant digits so a write/read cycle is exact.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{QuadraticFiniteSum, SigmoidClassification};
use crate::block::BlockPartition;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug)]
pub enum Instance {
    Quadratic(QuadraticFiniteSum),
    Sigmoid(SigmoidClassification),
}

fn push_row(out: &mut String, values: &[f64]) {
    for (t, v) in values.iter().enumerate() {
        if t > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn write_instance<W: Write>(instance: &Instance, mut w: W) -> Result<()> {
    let mut out = String::new();
    let (kind, n, partition) = match instance {
        Instance::Quadratic(q) => ("quadratic", q.n(), crate::problems::Objective::partition(q)),
        Instance::Sigmoid(s) => ("sigmoid", s.n(), crate::problems::Objective::partition(s)),
    };
    writeln!(out, "{kind} {n} {} {}", partition.dim(), partition.num_blocks()).unwrap();
    let sizes: Vec<String> = partition.sizes().iter().map(|s| s.to_string()).collect();
    out.push_str(&sizes.join(" "));
    out.push('\n');
    match instance {
        Instance::Quadratic(q) => {
            for i in 0..n {
                let a = q.component_matrix(i);
                for r in 0..a.rows() {
                    push_row(&mut out, a.row(r));
                }
                push_row(&mut out, q.component_linear(i));
                push_row(&mut out, &[q.component_constant(i)]);
            }
        }
        Instance::Sigmoid(s) => {
            let mut line = Vec::with_capacity(partition.dim() + 1);
            for i in 0..n {
                line.clear();
                line.push(s.labels()[i]);
                line.extend_from_slice(s.rows().row(i));
                push_row(&mut out, &line);
            }
        }
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.error("unexpected end of file")),
            }
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Format { line: self.line, msg: msg.into() }
    }

    fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let l = self.next_line()?;
        let values = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| self.error(format!("bad number {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return Err(self.error(format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }
}

pub fn read_instance<R: BufRead>(r: R) -> Result<Instance> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let header = lines.next_line()?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(lines.error("header must be `<kind> n d m`"));
    }
    let parse = |s: &str, lines: &Lines<R>| s.parse::<usize>().map_err(|_| lines.error(format!("bad integer {s:?}")));
    let (n, d, m) = (parse(fields[1], &lines)?, parse(fields[2], &lines)?, parse(fields[3], &lines)?);
    let size_line = lines.next_line()?;
    let sizes = size_line.split_whitespace().map(|s| parse(s, &lines)).collect::<Result<Vec<_>>>()?;
    if sizes.len() != m {
        return Err(lines.error(format!("expected {m} block sizes, found {}", sizes.len())));
    }
    let partition = BlockPartition::new(&sizes).map_err(|e| lines.error(e.to_string()))?;
    if partition.dim() != d {
        return Err(lines.error(format!("block sizes sum to {}, header says d = {d}", partition.dim())));
    }
    match fields[0] {
        "quadratic" => {
            let (mut a, mut b, mut c) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                let mut data = Vec::with_capacity(d * d);
                for _ in 0..d {
                    data.extend(lines.floats(d)?);
                }
                a.push(Matrix::from_row_major(d, d, data)?);
                b.push(lines.floats(d)?);
                c.push(lines.floats(1)?[0]);
            }
            Ok(Instance::Quadratic(QuadraticFiniteSum::new(partition, a, b, c)?))
        }
        "sigmoid" => {
            let mut data = Vec::with_capacity(n * d);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let row = lines.floats(d + 1)?;
                labels.push(row[0]);
                data.extend_from_slice(&row[1..]);
            }
            Ok(Instance::Sigmoid(SigmoidClassification::new(partition, Matrix::from_row_major(n, d, data)?, labels)?))
        }
        other => Err(Error::Format { line: 1, msg: format!("unknown instance kind {other:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(inst: &Instance) -> (Vec<u8>, Instance) {
        let mut buf = Vec::new();
        write_instance(inst, &mut buf).unwrap();
        let back = read_instance(buf.as_slice()).unwrap();
        (buf, back)
    }

    #[test]
    fn header_errors_carry_line_numbers() {
        let err = read_instance("quadratic 1 2 1\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
        let err = read_instance("cubic 1 1 1\n1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        let err = read_instance("sigmoid 1 2 1\n2\n1.0 0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn quadratic_roundtrip_is_exact(seed in any::<u64>(), n in 1usize..4, d in 1usize..6, convex in any::<bool>()) {
            let part = BlockPartition::uniform(d, d.div_ceil(2)).unwrap();
            let q = QuadraticFiniteSum::generate(seed, n, part, 7.0, convex).unwrap();
            let inst = Instance::Quadratic(q.clone());
            let (bytes, back) = roundtrip(&inst);
            let Instance::Quadratic(r) = back else { panic!("kind changed") };
            for i in 0..n {
                prop_assert_eq!(q.component_matrix(i), r.component_matrix(i));
                prop_assert_eq!(q.component_linear(i), r.component_linear(i));
            }
            let (again, _) = roundtrip(&Instance::Quadratic(r));
            prop_assert_eq!(bytes, again);
        }

        #[test]
        fn sigmoid_roundtrip_is_exact(seed in any::<u64>(), n in 1usize..8, d in 1usize..6) {
            let part = BlockPartition::uniform(d, 1).unwrap();
            let s = SigmoidClassification::generate(seed, n, part, 2.0).unwrap();
            let (_, back) = roundtrip(&Instance::Sigmoid(s.clone()));
            let Instance::Sigmoid(r) = back else { panic!("kind changed") };
            prop_assert_eq!(s.rows(), r.rows());
            prop_assert_eq!(s.labels(), r.labels());
        }
    }
}
