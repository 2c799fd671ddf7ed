use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use exact_engine::{green, green_chi, transfer_matrix, tree_edges, zeta_ihara, zeta_radius, OneForm, Root};
use graph_model::{fixtures, read_graph, EnergyForm, GraphDocument, VertexSubset};
use loop_measure::{
    alpha_permanent, cross_hitting_series, enumerate_loops, mu_hit_avoid, mu_nontrivial_total, occupation_laplace,
    occupation_moment,
};
use nalgebra::DMatrix;
use samplers::{run_sharded, trivial_occupation, GffSampler, LoopEnsemble, LoopSampler, SampleError, SpanningTree};
use serde_json::{json, Value};
use verify::{Check, Reflection, VerificationReport, Variation, TOL_LINALG};

use crate::args::{Command, MuOp, Output, Suite, VerifyArgs};
use crate::parse;
use crate::CliError;

// stream purposes, matching the verification harness
const SOUP: u32 = 1;
const GFF: u32 = 2;
const WILSON: u32 = 4;

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Green { graph, chi, out } => green_cmd(&graph, chi.as_deref(), &out),
        Command::Mu { op } => mu_cmd(op),
        Command::Sample { graph, alpha, k_cap, run, out } => sample_cmd(&graph, alpha, k_cap, run.samples, run.seed, &out),
        Command::Wilson { graph, root, run, out } => wilson_cmd(&graph, root.as_deref(), run.samples, run.seed, &out),
        Command::Gff { graph, run, out } => gff_cmd(&graph, run.samples, run.seed, &out),
        Command::Zeta { graph, u_grid, m_max, out } => zeta_cmd(&graph, u_grid, m_max, &out),
        Command::Verify(v) => verify_cmd(v),
        Command::Fixtures { dir } => fixtures_cmd(&dir),
    }
}

fn load(path: &Path) -> Result<(GraphDocument, EnergyForm), CliError> {
    read_graph(path).map_err(|e| CliError::Usage(format!("graph {}: {e}", path.display())))
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn say(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into())
}

/// JSON to `-o` if given; stdout gets JSON with `--json`, the table otherwise.
fn emit(out: &Output, value: &Value, table: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    if let Some(p) = &out.output {
        fs::write(p, format!("{text}\n"))?;
    }
    if out.json {
        say(&format!("{text}\n"));
    } else {
        say(table);
    }
    Ok(())
}

/// For sampler commands `-o` takes the CSV dump, so stdout carries the summary.
fn summarize(out: &Output, value: &Value, table: &str) {
    if out.json {
        say(&format!("{}\n", serde_json::to_string_pretty(value).expect("json value serializes")));
    } else {
        say(table);
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_table(e: &EnergyForm, title: &str, m: &DMatrix<f64>) -> String {
    let mut s = format!("{title}\n{:>10}", "");
    for j in 0..e.len() {
        let _ = write!(s, " {:>12}", e.name(j));
    }
    s.push('\n');
    for i in 0..e.len() {
        let _ = write!(s, "{:>10}", e.name(i));
        for j in 0..e.len() {
            let _ = write!(s, " {:>12.8}", m[(i, j)]);
        }
        s.push('\n');
    }
    s
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    let var = if n > 1 { xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
    (mean, (var / nf).sqrt())
}

fn require_samples(n: usize) -> Result<(), CliError> {
    if n == 0 {
        Err(CliError::Usage("-n/--samples must be positive".into()))
    } else {
        Ok(())
    }
}

fn green_cmd(path: &Path, chi: Option<&str>, out: &Output) -> Result<(), CliError> {
    let (_, e) = load(path)?;
    let b = green(&e)?;
    let mut v = json!({
        "vertices": e.names(),
        "g": rows(&b.g),
        "log_det_g": b.log_det_g,
        "mu_nontrivial": b.mu_nontrivial(),
    });
    let mut table = matrix_table(&e, "G", &b.g);
    let _ = writeln!(table, "log det G = {:.12}\nmu(p>1) = -log det(I-P) = {:.12}", b.log_det_g, b.mu_nontrivial());
    if let Some(c) = chi {
        let c = parse::chi(&e, c)?;
        let gc = green_chi(&e, &c)?;
        v["chi"] = json!(c.iter().copied().collect::<Vec<f64>>());
        v["g_chi"] = json!(rows(&gc));
        table.push_str(&matrix_table(&e, "G_chi", &gc));
    }
    emit(out, &v, &table)
}

fn mu_cmd(op: MuOp) -> Result<(), CliError> {
    match op {
        MuOp::Total { graph, out } => {
            let (_, e) = load(&graph)?;
            let m = mu_nontrivial_total(&e)?;
            emit(&out, &json!({ "mu_nontrivial": m }), &format!("mu(p>1) = {m:.12}\n"))
        }
        MuOp::Enumerate { graph, k_cap, out } => {
            let (_, e) = load(&graph)?;
            let en = enumerate_loops(&e, k_cap)?;
            let summary = json!({ "k_max": en.k_max, "loops": en.loops.len(), "total": en.total, "tail": en.tail, "rho": en.rho });
            if let Some(p) = &out.output {
                let mut w = csv::Writer::from_path(p)?;
                w.write_record(["vertices", "length", "multiplicity", "mass"])?;
                for (lp, m) in &en.loops {
                    w.write_record([join(lp.vertices().iter().map(|&v| e.name(v))), lp.len().to_string(), lp.multiplicity().to_string(), format!("{m:e}")])?;
                }
                w.flush()?;
            }
            let table = format!(
                "{} loops with 2 <= p <= {}: total mass {:.12}, tail bound {:.3e}, spectral radius {:.6}\n",
                en.loops.len(),
                en.k_max,
                en.total,
                en.tail,
                en.rho
            );
            summarize(&out, &summary, &table);
            Ok(())
        }
        MuOp::HitAvoid { graph, set, set2, alpha, out } => {
            let (_, e) = load(&graph)?;
            let alpha = parse::alpha(alpha)?;
            let hit = parse::subset(&e, "--set", &set)?;
            let avoid = match set2 {
                Some(s) => parse::subset(&e, "--set2", &s)?,
                None => VertexSubset::empty(e.len()),
            };
            let h = mu_hit_avoid(&e, &hit, &avoid, alpha)?;
            let table = format!("mu(meets every vertex of --set, avoids --set2) = {:.12e}\nP(no such loop in L_alpha) = {:.12}\n", h.mass, h.probability);
            emit(&out, &json!({ "alpha": alpha, "mass": h.mass, "probability": h.probability }), &table)
        }
        MuOp::Cross { graph, set, set2, k_cap, out } => {
            let (_, e) = load(&graph)?;
            let f1 = parse::subset(&e, "--set", &set)?;
            let f2 = parse::subset(&e, "--set2", &set2)?;
            let c = cross_hitting_series(&e, &f1, &f2, k_cap)?;
            let table = format!(
                "mu(meets both sets) = {:.12e}\nseries to k = {}: {:.12e} (tail bound {:.3e}, norm {:.6})\n",
                c.exact, c.k_max, c.partial, c.tail, c.norm
            );
            emit(&out, &json!({ "exact": c.exact, "partial": c.partial, "tail": c.tail, "norm": c.norm, "terms": c.terms }), &table)
        }
        MuOp::Laplace { graph, alpha, chi, out } => {
            let (_, e) = load(&graph)?;
            let alpha = parse::alpha(alpha)?;
            let c = parse::chi(&e, &chi)?;
            let v = occupation_laplace(&e, alpha, &c)?;
            emit(&out, &json!({ "alpha": alpha, "laplace": v }), &format!("E[exp(-<L_alpha, chi>)] = {v:.12}\n"))
        }
        MuOp::Moment { graph, alpha, set, out } => {
            let (_, e) = load(&graph)?;
            let alpha = parse::alpha(alpha)?;
            let pts = parse::points(&e, "--set", &set)?;
            let m = occupation_moment(&e, alpha, &pts)?;
            let g = green(&e)?.g;
            let sub = DMatrix::from_fn(pts.len(), pts.len(), |i, j| g[(pts[i], pts[j])]);
            let per = alpha_permanent(&sub, alpha, false)?;
            let table = format!("E[prod L^x] = {m:.12}\nPer_alpha(G) = {per:.12}\n");
            emit(&out, &json!({ "alpha": alpha, "points": pts.iter().map(|&p| e.name(p)).collect::<Vec<_>>(), "moment": m, "permanent": per }), &table)
        }
    }
}

fn soups(e: &EnergyForm, alpha: f64, k_cap: Option<usize>, n: usize, seed: u64) -> Result<Vec<LoopEnsemble>, CliError> {
    let parts: Vec<Result<Vec<LoopEnsemble>, SampleError>> = if mu_nontrivial_total(e)? == 0.0 {
        let lambda = e.lambda().clone();
        run_sharded(seed, SOUP, n, |rng, _, count| {
            (0..count)
                .map(|_| Ok(LoopEnsemble { n: e.len(), alpha, loops: Vec::new(), trivial: trivial_occupation(&lambda, alpha, rng)? }))
                .collect()
        })
    } else {
        let sampler = LoopSampler::new(e, k_cap)?;
        run_sharded(seed, SOUP, n, |rng, _, count| (0..count).map(|_| sampler.soup(alpha, rng)).collect())
    };
    let mut all = Vec::with_capacity(n);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

fn join<T: ToString>(xs: impl Iterator<Item = T>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn sample_cmd(path: &Path, alpha: f64, k_cap: Option<usize>, n: usize, seed: u64, out: &Output) -> Result<(), CliError> {
    let (_, e) = load(path)?;
    let alpha = parse::alpha(alpha)?;
    require_samples(n)?;
    let g = green(&e)?.g;
    let draws = soups(&e, alpha, k_cap, n, seed)?;
    if let Some(p) = &out.output {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["sample", "kind", "length", "vertices", "holding_times"])?;
        for (s, ens) in draws.iter().enumerate() {
            for lp in &ens.loops {
                w.write_record([
                    s.to_string(),
                    "loop".into(),
                    lp.len().to_string(),
                    join(lp.verts.iter().map(|&v| e.name(v))),
                    join(lp.holding.iter().map(|t| format!("{t:e}"))),
                ])?;
            }
            for x in 0..e.len() {
                if ens.trivial[x] > 0.0 {
                    w.write_record([s.to_string(), "trivial".into(), "1".into(), e.name(x).into(), format!("{:e}", ens.trivial[x])])?;
                }
            }
        }
        w.flush()?;
    }
    let (loops_mean, loops_se) = mean_se(draws.iter().map(|d| d.loops.len() as f64), n);
    let occ: Vec<_> = draws.iter().map(|d| d.occupation()).collect();
    let mut per_vertex = Vec::new();
    let mut table = format!("{n} soups at alpha = {alpha}, seed {seed}\nnontrivial loops per soup: {loops_mean:.6} ± {loops_se:.6}\n");
    let _ = writeln!(table, "{:>10} {:>14} {:>12} {:>14}", "vertex", "mean L^x", "se", "alpha G^xx");
    for x in 0..e.len() {
        let (m, se) = mean_se(occ.iter().map(|l| l[x]), n);
        let want = alpha * g[(x, x)];
        per_vertex.push(json!({ "vertex": e.name(x), "mean": m, "se": se, "exact": want }));
        let _ = writeln!(table, "{:>10} {:>14.8} {:>12.3e} {:>14.8}", e.name(x), m, se, want);
    }
    let summary = json!({ "alpha": alpha, "n": n, "seed": seed, "mean_loops": loops_mean, "mean_loops_se": loops_se, "occupation": per_vertex });
    summarize(out, &summary, &table);
    Ok(())
}

fn wilson_cmd(path: &Path, root: Option<&str>, n: usize, seed: u64, out: &Output) -> Result<(), CliError> {
    let (doc, e) = load(path)?;
    let root = parse::root(&e, root.or(doc.root.as_deref()))?;
    require_samples(n)?;
    let parts: Vec<Result<Vec<SpanningTree>, SampleError>> = run_sharded(seed, WILSON, n, |rng, _, count| {
        (0..count).map(|_| samplers::wilson_sample(&e, root, None, rng).map(|w| w.tree)).collect()
    });
    let mut trees = Vec::with_capacity(n);
    for p in parts {
        trees.extend(p?);
    }
    let root_name = match root {
        Root::Cemetery => "delta".to_string(),
        Root::Vertex(r) => e.name(r).to_string(),
    };
    if let Some(p) = &out.output {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["sample", "root", "edges"])?;
        for (s, t) in trees.iter().enumerate() {
            let edges = join(t.edges().into_iter().map(|(a, b)| format!("{}-{}", parse::node_name(&e, a), parse::node_name(&e, b))));
            w.write_record([s.to_string(), root_name.clone(), edges])?;
        }
        w.flush()?;
    }
    let edges = tree_edges(&e, root);
    let tm = transfer_matrix(&e, &edges, root)?;
    let mut per_edge = Vec::new();
    let mut table = format!("{n} spanning trees rooted at {root_name}, seed {seed}\n{:>16} {:>12} {:>12} {:>12}\n", "edge", "frequency", "se", "exact");
    for (i, &ed) in edges.iter().enumerate() {
        let (m, se) = mean_se(trees.iter().map(|t| t.contains(ed) as u8 as f64), n);
        let want = tm.inclusion_probability(&[i]);
        let name = format!("{}-{}", parse::node_name(&e, ed.0), parse::node_name(&e, ed.1));
        let _ = writeln!(table, "{name:>16} {m:>12.6} {se:>12.3e} {want:>12.6}");
        per_edge.push(json!({ "edge": name, "frequency": m, "se": se, "exact": want }));
    }
    summarize(out, &json!({ "n": n, "seed": seed, "root": root_name, "edges": per_edge }), &table);
    Ok(())
}

fn gff_cmd(path: &Path, n: usize, seed: u64, out: &Output) -> Result<(), CliError> {
    let (_, e) = load(path)?;
    require_samples(n)?;
    let sampler = GffSampler::new(&e)?;
    let fields: Vec<Vec<f64>> = run_sharded(seed, GFF, n, |rng, _, count| (0..count).map(|_| sampler.sample(rng, false).phi).collect::<Vec<_>>())
        .into_iter()
        .flatten()
        .collect();
    if let Some(p) = &out.output {
        let mut w = csv::Writer::from_path(p)?;
        let mut header = vec!["sample".to_string()];
        header.extend(e.names().iter().cloned());
        w.write_record(&header)?;
        for (s, f) in fields.iter().enumerate() {
            let mut rec = vec![s.to_string()];
            rec.extend(f.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    let g = sampler.covariance();
    let k = e.len();
    let cov = DMatrix::from_fn(k, k, |i, j| fields.iter().map(|f| f[i] * f[j]).sum::<f64>() / n as f64);
    let dev = (&cov - g).abs().max();
    let mut table = matrix_table(&e, &format!("empirical E[phi_x phi_y] over {n} fields, seed {seed}"), &cov);
    let _ = writeln!(table, "max |empirical - G| = {dev:.3e}");
    summarize(out, &json!({ "n": n, "seed": seed, "covariance": rows(&cov), "g": rows(g), "max_deviation": dev }), &table);
    Ok(())
}

fn zeta_cmd(path: &Path, u_grid: Option<Vec<f64>>, m_max: usize, out: &Output) -> Result<(), CliError> {
    let (_, e) = load(path)?;
    if m_max == 0 {
        return Err(CliError::Usage("--m-max must be at least 1".into()));
    }
    let radius = zeta_radius(&e);
    let grid = u_grid.unwrap_or_else(|| [0.2, 0.5, 0.8].iter().map(|f| f * radius).collect());
    if let Some(u) = grid.iter().find(|&&u| !(u > 0.0 && u < radius)) {
        return Err(CliError::Usage(format!("--u-grid: {u} outside (0, {radius})")));
    }
    let z = zeta_ihara(&e, &grid, m_max)?;
    let mut table = format!("Euler characteristic {}, radius {radius}\n{:>4} {:>12} {:>12}\n", z.chi, "m", "N_m", "L_m");
    for m in 0..z.n.len() {
        let _ = writeln!(table, "{:>4} {:>12} {:>12}", m + 1, z.n[m], z.l.get(m).copied().unwrap_or(0));
    }
    let _ = writeln!(table, "{:>10} {:>16} {:>16} {:>16} {:>11}", "u", "IZ (vertex)", "IZ (edge)", "IZ (series)", "tail");
    for p in &z.grid {
        let _ = writeln!(table, "{:>10.6} {:>16.12} {:>16.12} {:>16.12} {:>11.3e}", p.u, p.iz, p.iz_line, p.iz_series, p.series_tail);
    }
    let v = serde_json::to_value(&z).expect("zeta report serializes");
    emit(out, &v, &table)
}

fn fixtures_cmd(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (name, doc) in fixtures::all() {
        let p = dir.join(name);
        fs::write(&p, format!("{}\n", doc.to_json_pretty()))?;
        say(&format!("{}\n", p.display()));
    }
    Ok(())
}

fn default_edge_sets(e: &EnergyForm, root: Root) -> Vec<Vec<exact_engine::Edge>> {
    let edges = tree_edges(e, root);
    let mut sets: Vec<Vec<_>> = edges.iter().take(6).map(|&ed| vec![ed]).collect();
    for k in 2..=3 {
        if edges.len() >= k {
            sets.push(edges[..k].to_vec());
        }
    }
    sets
}

fn counterexample_report(e: &EnergyForm, fixture: &str) -> Result<VerificationReport, CliError> {
    let t = verify::counterexample_terms(e)?;
    let mut r = VerificationReport::new("counterexample", fixture, 0, 0);
    r.push(Check::residual("t1_vanishes", 0.0, t.t1, TOL_LINALG));
    r.push(Check::residual("t4_vanishes", 0.0, t.t4, TOL_LINALG));
    r.push(Check::relative("t2_equals_t3", t.t2, t.t3, TOL_LINALG));
    r.push(Check::relative("value_is_minus_two_t2", -2.0 * t.t2, t.value, TOL_LINALG));
    r.push(Check::negative("value", t.value));
    Ok(r.finalize())
}

fn verify_cmd(a: VerifyArgs) -> Result<(), CliError> {
    let (doc, e) = load(&a.graph)?;
    let name = stem(&a.graph);
    let (n, seed) = (a.run.samples, a.run.seed);
    let alphas = a.alpha.clone().unwrap_or_default();
    for &x in &alphas {
        parse::alpha(x)?;
    }
    let alpha1 = |default: f64| -> Result<f64, CliError> {
        match alphas.as_slice() {
            [] => Ok(default),
            [x] => Ok(*x),
            _ => Err(CliError::Usage("--alpha: this suite takes one value".into())),
        }
    };
    let vertex_or = |s: &Option<String>, flag: &str, default: usize| -> Result<usize, CliError> {
        match s {
            Some(s) => parse::single(&e, flag, s),
            None => Ok(default),
        }
    };
    let last = e.len() - 1;
    let report = match a.suite {
        Suite::Dynkin => {
            let alpha = alpha1(0.5)?;
            let k = (2.0 * alpha).round();
            if (2.0 * alpha - k).abs() > 1e-12 || k < 1.0 {
                return Err(CliError::Usage(format!("--alpha: {alpha} is not k/2 for a positive integer k")));
            }
            verify::verify_dynkin(&e, &name, k as usize, n, seed)?
        }
        Suite::Marginals => {
            let al = if alphas.is_empty() { vec![0.5, 1.0, 2.0] } else { alphas.clone() };
            verify::verify_occupation_marginals(&e, &name, &al, n, seed)?
        }
        Suite::Transfer => {
            let root = match (&a.root, &doc.root) {
                (Some(r), _) | (None, Some(r)) => parse::root(&e, Some(r))?,
                (None, None) => Root::Cemetery,
            };
            let sets = match &a.edges {
                Some(s) => parse::edge_sets(&e, s)?,
                None => default_edge_sets(&e, root),
            };
            verify::verify_transfer_current(&e, &name, root, &sets, n, seed)?
        }
        Suite::ErasedLoops => verify::verify_erased_loops(&e, &name, n, seed)?,
        Suite::Erasure => {
            let x = vertex_or(&a.set, "--set", 0)?;
            let y = vertex_or(&a.set2, "--set2", last)?;
            verify::verify_loop_erasure(&e, &name, x, y, n, seed)?
        }
        Suite::PoissonDirichlet => {
            let x = vertex_or(&a.set, "--set", 0)?;
            verify::verify_poisson_dirichlet(&e, &name, x, alpha1(1.0)?, n, seed)?
        }
        Suite::LoopMass => verify::verify_loop_mass(&e, &name, a.k_cap.unwrap_or(14))?,
        Suite::CrossHitting => {
            let f1 = match &a.set {
                Some(s) => parse::subset(&e, "--set", s)?,
                None => VertexSubset::singleton(e.len(), 0),
            };
            let f2 = match &a.set2 {
                Some(s) => parse::subset(&e, "--set2", s)?,
                None => VertexSubset::singleton(e.len(), last),
            };
            verify::verify_cross_hitting(&e, &name, &f1, &f2, a.k_cap.unwrap_or(40))?
        }
        Suite::Wreath => {
            let fibres = vec![doc.wreath_n.unwrap_or(2); e.len()];
            verify::verify_wreath(&e, &name, &fibres, a.k_cap.unwrap_or(14))?
        }
        Suite::Web => verify::verify_exact_web(&e, &name, a.splits, seed)?,
        Suite::Reflection => {
            let refl = Reflection::from_document(&doc, &e)?;
            verify::verify_reflection_positivity(&e, &name, &refl)?
        }
        Suite::Counterexample => counterexample_report(&e, &name)?,
        Suite::Variation => {
            let shift = match &a.chi {
                Some(c) => parse::chi(&e, c)?,
                None => {
                    let mut v = nalgebra::DVector::zeros(e.len());
                    v[0] = 0.5;
                    v
                }
            };
            let e2 = EnergyForm::new(e.names().to_vec(), e.conductance().clone(), e.killing() + &shift)?;
            let v = Variation { label: "kappa+chi".into(), e2, omega: OneForm::zero(e.len()), alpha: alpha1(1.0)? };
            verify::verify_energy_variation(&e, &name, &v, n, seed)?
        }
        Suite::Zeta => verify::verify_zeta(&e, &name, a.m_max.unwrap_or(8))?,
    };
    let json = report.canonical_json();
    if let Some(p) = &a.out.output {
        fs::write(p, format!("{json}\n"))?;
    }
    if a.out.json {
        say(&format!("{json}\n"));
    } else {
        say(&report.table());
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}
