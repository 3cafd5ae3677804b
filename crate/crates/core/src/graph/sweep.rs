//! Scattering matrices over a grid of wave numbers.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

use super::scattering::{contract_scattering, graph_scattering_unchecked, MetricGraph};

/// One wave number of a sweep; `s` is `None` at a resonance.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub k: f64,
    pub s: Option<CMatrix>,
}

impl SweepRow {
    pub fn resonant(&self) -> bool {
        self.s.is_none()
    }
}

/// Evaluates the graph scattering matrix at every `k`, in parallel, keeping input order.
///
/// Resonant wave numbers yield a row without data; other failures abort the sweep.
pub fn sweep(g: &MetricGraph, k_values: &[f64]) -> Result<Vec<SweepRow>> {
    g.validate()?;
    if let Some(&k) = k_values.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidProblem(format!(
            "k must be positive, got {k}"
        )));
    }
    k_values
        .par_iter()
        .map(
            |&k| match graph_scattering_unchecked(g, k, contract_scattering) {
                Ok(s) => Ok(SweepRow { k, s: Some(s) }),
                Err(Error::SingularMatrix { .. }) => Ok(SweepRow { k, s: None }),
                Err(e) => Err(e),
            },
        )
        .collect()
}

/// `steps` evenly spaced points from `k_min` to `k_max` inclusive.
pub fn k_grid(k_min: f64, k_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(k_min > 0.0 && k_min <= k_max && k_max.is_finite()) || steps == 0 {
        return Err(Error::InvalidProblem(format!(
            "k grid needs 0 < k_min <= k_max and steps >= 1, got {k_min}..{k_max} in {steps}"
        )));
    }
    if steps == 1 {
        return Ok(vec![k_min]);
    }
    let h = (k_max - k_min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                k_max
            } else {
                k_min + h * i as f64
            }
        })
        .collect())
}

/// Writes a sweep as CSV: `k`, then `re(S_i_j)`, `im(S_i_j)` for each entry in row-major
/// order (indices 1-based), then `resonant`. Resonant rows leave the matrix fields empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], leads: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    for i in 1..=leads {
        for j in 1..=leads {
            header.push(format!("re(S_{i}_{j})"));
            header.push(format!("im(S_{i}_{j})"));
        }
    }
    header.push("resonant".into());
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![format!("{:.16e}", row.k)];
        match &row.s {
            Some(s) => {
                for z in s.to_row_major() {
                    rec.push(format!("{:.16e}", z.re));
                    rec.push(format!("{:.16e}", z.im));
                }
                rec.push("0".into());
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 2 * leads * leads));
                rec.push("1".into());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EndRef, GraphVertex, InternalEdge, VertexConditions};

    fn self_loop() -> MetricGraph {
        MetricGraph {
            vertices: vec![GraphVertex {
                id: "v".into(),
                conditions: VertexConditions::kirchhoff(3),
            }],
            internal_edges: vec![InternalEdge {
                a: EndRef { vertex: 0, slot: 1 },
                b: EndRef { vertex: 0, slot: 2 },
                length: 1.0,
            }],
            leads: vec![EndRef { vertex: 0, slot: 0 }],
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = k_grid(0.1, 10.0, 100).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[99], 10.0);
        assert!(k_grid(0.0, 1.0, 3).is_err());
        assert!(k_grid(1.0, 0.5, 3).is_err());
        assert!(k_grid(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn resonant_row_is_flagged_and_order_kept() {
        let tau = 2.0 * std::f64::consts::PI;
        let ks = [0.5, tau, 1.5, 2.5];
        let rows = sweep(&self_loop(), &ks).unwrap();
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), ks);
        assert!(rows[1].resonant());
        for r in [&rows[0], &rows[2], &rows[3]] {
            assert!(r.s.as_ref().unwrap().unitarity_residual() < 1e-10);
        }
        assert!(sweep(&self_loop(), &[]).unwrap().is_empty());
    }

    #[test]
    fn csv_layout() {
        let rows = sweep(&self_loop(), &[0.5, 2.0 * std::f64::consts::PI]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, 1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,re(S_1_1),im(S_1_1),resonant");
        assert!(lines[1].ends_with(",0"));
        assert!(lines[2].ends_with(",,,1"));
    }
}
