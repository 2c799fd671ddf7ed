use std::time::Instant;

use exact_engine::{green, Root};
use graph_model::EnergyForm;
use samplers::{wilson_sample, LoopEnsemble};

use super::{require_transient, soups};
use crate::stats::{difference, mean_se};
use crate::{draw_many, purpose, timed, Check, VerificationReport, VerifyError};

/// Loops erased by Wilson's algorithm (with the holding times left on the
/// tree as their trivial part) against the α = 1 soup and the exact values
/// `E[N_{x,y}] = G^{xy} C_{xy}`, `E[L̂^x] = G^{xx}`.
pub fn verify_erased_loops(e: &EnergyForm, fixture: &str, n: usize, seed: u64) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    require_transient(e)?;
    let g = green(e)?.g;
    let mut r = VerificationReport::new("erased_loops", fixture, n, seed);
    if n == 0 {
        return Ok(timed(r.finalize(), start));
    }
    let erased: Vec<LoopEnsemble> = draw_many(seed, purpose::WILSON, n, |rng| Ok(wilson_sample(e, Root::Cemetery, None, rng)?.erased))?;
    let soup = soups(e, 1.0, n, seed, purpose::SOUP)?;
    let summarize = |ens: &[LoopEnsemble]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let edges = e.edges();
        let mut nxy = vec![Vec::with_capacity(ens.len()); edges.len()];
        let mut occ = vec![Vec::with_capacity(ens.len()); e.len()];
        for s in ens {
            let t = s.traversals();
            for (k, &(x, y, _)) in edges.iter().enumerate() {
                nxy[k].push(t[(x, y)] as f64);
            }
            let l = s.occupation();
            for x in 0..e.len() {
                occ[x].push(l[x]);
            }
        }
        (nxy, occ)
    };
    let (wn, wl) = summarize(&erased);
    let (sn, sl) = summarize(&soup);
    for (k, &(x, y, c)) in e.edges().iter().enumerate() {
        let want = g[(x, y)] * c;
        let tag = format!("{},{}", e.name(x), e.name(y));
        let a = mean_se(&wn[k]);
        r.push(Check::z(format!("erased_N[{tag}]"), want, a.0, a.1));
        let (d, sd) = difference(a, mean_se(&sn[k]));
        r.push(Check::z(format!("erased_vs_soup_N[{tag}]"), 0.0, d, sd));
    }
    for x in 0..e.len() {
        let a = mean_se(&wl[x]);
        r.push(Check::z(format!("erased_occupation[{}]", e.name(x)), g[(x, x)], a.0, a.1));
        let (d, sd) = difference(a, mean_se(&sl[x]));
        r.push(Check::z(format!("erased_vs_soup_occupation[{}]", e.name(x)), 0.0, d, sd));
    }
    Ok(timed(r.finalize(), start))
}
