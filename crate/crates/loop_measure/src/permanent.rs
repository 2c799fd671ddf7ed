use nalgebra::DMatrix;

use crate::LoopError;

pub const PERMANENT_MAX: usize = 10;

/// Coefficients `c_m = Σ_{σ: m(σ) = m} ∏ M_{i,σ(i)}`, so that
/// `Per_α(M) = Σ_m c_m α^m`. With `fixed_point_free`, permutations with a
/// fixed point are dropped (the centered `Per⁰_α`).
pub fn alpha_permanent_coeffs(m: &DMatrix<f64>, fixed_point_free: bool) -> Result<Vec<f64>, LoopError> {
    let k = m.nrows();
    if m.ncols() != k {
        return Err(LoopError::Invalid("permanent of a non-square matrix".into()));
    }
    if k > PERMANENT_MAX {
        return Err(LoopError::GuardExceeded(format!("permanent of size {k} > {PERMANENT_MAX}")));
    }
    let mut coeffs = vec![0.0; k + 1];
    if k == 0 {
        coeffs[0] = 1.0;
        return Ok(coeffs);
    }
    let mut used = vec![false; k];
    used[0] = true;
    let mut st = State { m, fpf: fixed_point_free, used, coeffs };
    st.grow(0, 0, 1, 0, 1.0);
    Ok(st.coeffs)
}

struct State<'a> {
    m: &'a DMatrix<f64>,
    fpf: bool,
    used: Vec<bool>,
    coeffs: Vec<f64>,
}

impl State<'_> {
    /// Extends the open cycle started at `start`, currently at `cur`.
    fn grow(&mut self, start: usize, cur: usize, cycle_len: usize, cycles: usize, w: f64) {
        let k = self.m.nrows();
        if !(self.fpf && cycle_len == 1) {
            let wc = w * self.m[(cur, start)];
            if wc != 0.0 {
                match (0..k).find(|&i| !self.used[i]) {
                    None => self.coeffs[cycles + 1] += wc,
                    Some(next) => {
                        self.used[next] = true;
                        self.grow(next, next, 1, cycles + 1, wc);
                        self.used[next] = false;
                    }
                }
            }
        }
        for j in 0..k {
            if self.used[j] {
                continue;
            }
            let wj = w * self.m[(cur, j)];
            if wj == 0.0 {
                continue;
            }
            self.used[j] = true;
            self.grow(start, j, cycle_len + 1, cycles, wj);
            self.used[j] = false;
        }
    }
}

/// `Per_α(M) = Σ_σ α^{m(σ)} ∏ M_{i,σ(i)}`.
pub fn alpha_permanent(m: &DMatrix<f64>, alpha: f64, fixed_point_free: bool) -> Result<f64, LoopError> {
    let c = alpha_permanent_coeffs(m, fixed_point_free)?;
    Ok(c.iter().rev().fold(0.0, |acc, &v| acc * alpha + v))
}
