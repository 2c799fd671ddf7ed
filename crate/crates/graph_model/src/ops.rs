use nalgebra::{DMatrix, DVector};

use crate::{EnergyForm, GraphError, VertexSubset};

/// Name given to the cemetery point by [`recurrent_extension`].
pub const CEMETERY: &str = "Δ";

/// Default bound on the number of wreath-product states.
pub const WREATH_STATE_LIMIT: usize = 4096;

/// Chain killed at the exit of `d`: conductances to the outside become killing.
pub fn restrict(e: &EnergyForm, d: &VertexSubset) -> Result<EnergyForm, GraphError> {
    if d.is_empty() {
        return Err(GraphError::EmptySet);
    }
    if d.len() == e.len() {
        return Ok(e.clone());
    }
    let idx = d.members();
    let inside = d.mask();
    let c = e.conductance();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| c[(idx[a], idx[b])]);
    let kappa = DVector::from_fn(idx.len(), |a, _| {
        let x = idx[a];
        e.killing()[x] + (0..e.len()).filter(|&y| !inside[y]).map(|y| c[(x, y)]).sum::<f64>()
    });
    let names = idx.iter().map(|&i| e.name(i).to_string()).collect();
    EnergyForm::new_allow_disconnected(names, sub, kappa)
}

/// Kill a (recurrent or transient) chain at vertex `v`.
pub fn kill_at(e: &EnergyForm, v: usize) -> Result<EnergyForm, GraphError> {
    restrict(e, &VertexSubset::singleton(e.len(), v).complement())
}

/// Adds the cemetery `Δ` with `C_{x,Δ} = κ_x`; the result is recurrent.
pub fn recurrent_extension(e: &EnergyForm) -> Result<EnergyForm, GraphError> {
    if !e.is_transient() {
        return Err(GraphError::Recurrent);
    }
    if e.index_of(CEMETERY).is_some() {
        return Err(GraphError::Invalid(format!("vertex name {CEMETERY} is reserved")));
    }
    let n = e.len();
    let mut c = DMatrix::zeros(n + 1, n + 1);
    c.view_mut((0, 0), (n, n)).copy_from(e.conductance());
    for x in 0..n {
        c[(x, n)] = e.killing()[x];
        c[(n, x)] = e.killing()[x];
    }
    let mut names = e.names().to_vec();
    names.push(CEMETERY.to_string());
    EnergyForm::new(names, c, DVector::zeros(n + 1))
}

/// Trace of the chain on `f`:
/// `C^{F} = C_FF + C_FD G^D C_DF` off the diagonal and
/// `λ^{F} = λ_F - diag(C_FD G^D C_DF)`.
pub fn trace_on(e: &EnergyForm, f: &VertexSubset) -> Result<EnergyForm, GraphError> {
    if f.is_empty() {
        return Err(GraphError::EmptySet);
    }
    if f.len() == e.len() {
        return Ok(e.clone());
    }
    let fi = f.members();
    let d = f.complement();
    let di = d.members();
    let c = e.conductance();
    let lap = e.laplacian();
    let lap_d = DMatrix::from_fn(di.len(), di.len(), |a, b| lap[(di[a], di[b])]);
    let g_d = lap_d
        .cholesky()
        .ok_or_else(|| GraphError::Invalid("restriction to the complement is not transient".into()))?
        .inverse();
    let c_fd = DMatrix::from_fn(fi.len(), di.len(), |a, b| c[(fi[a], di[b])]);
    let s = &c_fd * g_d * c_fd.transpose();
    let m = fi.len();
    let mut ct = DMatrix::zeros(m, m);
    let mut lam = DVector::zeros(m);
    for a in 0..m {
        lam[a] = e.lambda()[fi[a]] - s[(a, a)];
        for b in 0..m {
            if a != b {
                // symmetrize against rounding in the triple product
                ct[(a, b)] = c[(fi[a], fi[b])] + 0.5 * (s[(a, b)] + s[(b, a)]);
            }
        }
    }
    let kappa = DVector::from_fn(m, |a, _| {
        let k = lam[a] - ct.row(a).sum();
        if k < 0.0 && k.abs() <= 1e-10 * lam[a] {
            0.0
        } else {
            k
        }
    });
    let names = fi.iter().map(|&i| e.name(i).to_string()).collect();
    EnergyForm::new(names, ct, kappa)
}

/// Wreath product with `Z/n_x` fibres; see [`build_wreath_with_limit`].
pub fn build_wreath(e: &EnergyForm, n: &[usize]) -> Result<EnergyForm, GraphError> {
    build_wreath_with_limit(e, n, WREATH_STATE_LIMIT)
}

/// Chain on `X × ∏ Z/n_x`: a jump `x → x'` resamples `z_x` and `z_{x'}`
/// uniformly and leaves the other coordinates alone.
/// State `(x, z)` has index `x * |Z| + code(z)` with `z_0` the fastest digit.
pub fn build_wreath_with_limit(e: &EnergyForm, n: &[usize], limit: usize) -> Result<EnergyForm, GraphError> {
    let nx = e.len();
    if n.len() != nx {
        return Err(GraphError::Malformed(format!("{} fibre sizes for {} vertices", n.len(), nx)));
    }
    if n.iter().any(|&k| k == 0) {
        return Err(GraphError::Invalid("fibre sizes must be positive".into()));
    }
    let total: u128 = n.iter().fold(nx as u128, |acc, &k| acc.saturating_mul(k as u128));
    if total > limit as u128 {
        let states = usize::try_from(total).unwrap_or(usize::MAX);
        return Err(GraphError::WreathTooLarge { states, limit });
    }
    let states = total as usize;
    let zsize = states / nx;
    let mut stride = vec![1usize; nx];
    for y in 1..nx {
        stride[y] = stride[y - 1] * n[y - 1];
    }
    let digit = |code: usize, y: usize| (code / stride[y]) % n[y];
    let mut ct = DMatrix::zeros(states, states);
    for (x, xp, w) in e.edges() {
        let wt = w / (n[x] * n[xp]) as f64;
        for z in 0..zsize {
            let base = z - digit(z, x) * stride[x] - digit(z, xp) * stride[xp];
            for a in 0..n[x] {
                for b in 0..n[xp] {
                    let zp = base + a * stride[x] + b * stride[xp];
                    ct[(x * zsize + z, xp * zsize + zp)] = wt;
                    ct[(xp * zsize + zp, x * zsize + z)] = wt;
                }
            }
        }
    }
    let kappa = DVector::from_fn(states, |s, _| e.killing()[s / zsize]);
    let names = (0..states)
        .map(|s| {
            let x = s / zsize;
            let z: Vec<String> = (0..nx).map(|y| digit(s % zsize, y).to_string()).collect();
            format!("{}[{}]", e.name(x), z.join("."))
        })
        .collect();
    EnergyForm::new(names, ct, kappa)
}
