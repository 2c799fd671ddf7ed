use std::time::Instant;

use exact_engine::{line_graph_traces, non_backtracking_counts, series_counts, zeta_ihara, zeta_radius};
use graph_model::EnergyForm;

use crate::{timed, Check, VerificationReport, VerifyError, TOL_LINALG};

const INTEGER_TOL: f64 = 1e-6;

/// Non-backtracking counts three ways, based-loop counts two ways, and the
/// zeta function from the vertex and edge determinants.
pub fn verify_zeta(e: &EnergyForm, fixture: &str, m_max: usize) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let mut r = VerificationReport::new("zeta", fixture, 0, 0);
    let (n_series, l_series) = series_counts(e, m_max)?;
    let n_line = line_graph_traces(e, m_max)?;
    let (n_enum, l_enum) = non_backtracking_counts(e, m_max)?;
    for m in 1..=m_max {
        let i = m - 1;
        let want = n_enum[i] as f64;
        r.push(Check::residual(format!("N{m}_series_vs_enumeration"), want, n_series[i] as f64, INTEGER_TOL));
        r.push(Check::residual(format!("N{m}_line_graph_vs_enumeration"), want, n_line[i] as f64, INTEGER_TOL));
        r.push(Check::residual(format!("L{m}_series_vs_enumeration"), l_enum[i] as f64, l_series[i] as f64, INTEGER_TOL));
    }
    let rad = zeta_radius(e);
    let grid: Vec<f64> = [0.2, 0.5, 0.8].iter().map(|f| f * rad).collect();
    let z = zeta_ihara(e, &grid, m_max)?;
    for p in &z.grid {
        r.push(Check::relative(format!("IZ_vertex_vs_edge[u={:.4}]", p.u), p.iz_line, p.iz, TOL_LINALG));
        r.push(Check::upper(format!("IZ_series_tail[u={:.4}]", p.u), 0.0, (p.iz.ln() - p.iz_series.ln()).abs(), p.series_tail));
    }
    Ok(timed(r.finalize(), start))
}
