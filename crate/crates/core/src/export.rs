//! JSON emission with a fixed float format so outputs are byte-for-byte reproducible.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::bounds::rows;
use crate::certificates::LyapunovCertificate;

/// Compact JSON, floats as `{:.16e}` (17 significant digits, exact round trip).
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes `value` followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut w, Digits17);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    w.write_all(b"\n")
}

impl LyapunovCertificate {
    pub fn write_json<W: Write>(&self, w: W) -> io::Result<()> {
        #[derive(Serialize)]
        struct Residuals<'a> {
            asymmetry: f64,
            pd_margin: f64,
            lyapunov_max_eigenvalues: &'a [f64],
            lyapunov_tolerances: &'a [f64],
        }
        #[derive(Serialize)]
        struct Solver<'a> {
            status: &'a str,
            iterations: usize,
            primal_infeasibility: f64,
            dual_infeasibility: f64,
            relative_gap: f64,
            epigraph_value: Option<f64>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            level: usize,
            alpha: f64,
            dim: usize,
            vertices: Vec<Vec<Vec<f64>>>,
            #[serde(rename = "P")]
            p: Vec<Vec<f64>>,
            objective_value: Option<f64>,
            residuals: Residuals<'a>,
            solver: Solver<'a>,
        }
        let r = &self.report;
        let doc = Doc {
            level: self.level,
            alpha: self.alpha,
            dim: self.dim(),
            vertices: self.vertices.iter().map(rows).collect(),
            p: rows(&self.p_mat),
            objective_value: self.objective_value,
            residuals: Residuals {
                asymmetry: r.residuals.asymmetry,
                pd_margin: r.residuals.pd_margin,
                lyapunov_max_eigenvalues: &r.residuals.lyapunov_max_eigenvalues,
                lyapunov_tolerances: &r.residuals.lyapunov_tolerances,
            },
            solver: Solver {
                status: &r.status,
                iterations: r.iterations,
                primal_infeasibility: r.primal_infeasibility,
                dual_infeasibility: r.dual_infeasibility,
                relative_gap: r.relative_gap,
                epigraph_value: r.epigraph_value,
            },
        };
        write_json(w, &doc)
    }
}
