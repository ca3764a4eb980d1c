//! The verification suites behind `compser-lab suite <NAME>`.
//!
//! Every check yields one or more [`Case`]s. A check that errors becomes a
//! failed case so the report always lists every check that was attempted.

use std::collections::BTreeSet;
use std::sync::Arc;

use compser_core::asymptotics::{
    certify_decay, certify_decay_unitary, main_term, minv_probe, minv_vanishing_suite, DecayReport,
    MainTermContext,
};
use compser_core::group::{exp_h, iwasawa, make_a, make_nbar, random_word};
use compser_core::harmonic::{
    a_ratio, cplus, cplus_leakage, eisenstein_check, find_witness, first_order_action_check,
    left_mtype_projector, m_grid_for, mtype_commutator, spherical_cplus_value, t_operator_full,
    unitary_invariance_defect, upsilon_star, CPlusConfig, IntertwiningScalars, NbarMeasure, Raise,
};
use compser_core::liealg::{
    branch, dim_weight, dual, ktype_dim, ktypes_of_compser, validate_weight,
};
use compser_core::model::{chi_vector, project_mtype_left};
use compser_core::quadrature::k_quadrature;
use compser_core::rates::{beta_rate, lambda_rate, lattice_eta, SpectralData};
use compser_core::{ActConfig, Basis, CompSerLabel, KType, ModelVector, WeightLabel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{SuiteConfig, SuiteName};
use crate::report::{Case, SuiteReport, Table};

type CoreResult<T> = compser_core::Result<T>;

/// Runs the named suite. Errors inside a check are reported as failed cases.
pub fn run_suite(name: SuiteName, cfg: &SuiteConfig) -> (SuiteReport, Vec<Table>) {
    let mut tables = Vec::new();
    let cases = match name {
        SuiteName::Algebra => guard("algebra", || algebra(cfg)),
        SuiteName::Group => guard("group", || group(cfg)),
        SuiteName::Model => guard("model", || model(cfg)),
        SuiteName::Toperator => guard("toperator", || toperator(cfg)),
        SuiteName::Cfunction => guard("cfunction", || cfunction(cfg, &mut tables)),
        SuiteName::Eisenstein => guard("eisenstein", || eisenstein(cfg)),
        SuiteName::Gammas => gammas(cfg),
        SuiteName::Decay => guard("decay", || decay(cfg, &mut tables)),
        SuiteName::Vanishing => guard("vanishing", || vanishing(cfg, &mut tables)),
        SuiteName::Rates => guard("rates", || rates(cfg)),
    };
    (SuiteReport::new(name, cfg, cases), tables)
}

fn guard<F: FnOnce() -> CoreResult<Vec<Case>>>(name: &str, f: F) -> Vec<Case> {
    match f() {
        Ok(c) => c,
        Err(e) => vec![Case::failed(name, &e.to_string())],
    }
}

fn label(cfg: &SuiteConfig, s: f64) -> CoreResult<CompSerLabel> {
    CompSerLabel::with_upsilon(cfg.d, cfg.upsilon, s)
}

fn spherical(d: usize, s: f64) -> CoreResult<CompSerLabel> {
    CompSerLabel::standard(d, WeightLabel::trivial(d), s)
}

/// Dominant weights of SO(n) with first entry bounded by `cutoff` in absolute value.
fn weights_up_to(n: usize, cutoff: i64) -> CoreResult<Vec<WeightLabel>> {
    let m = n / 2;
    let mut out = Vec::new();
    let mut stack: Vec<Vec<i64>> = vec![vec![]];
    while let Some(p) = stack.pop() {
        if p.len() == m {
            if validate_weight(n, &p)? {
                out.push(WeightLabel::new(n, p)?);
            }
            continue;
        }
        for e in -cutoff..=cutoff {
            let mut q = p.clone();
            q.push(e);
            stack.push(q);
        }
    }
    out.sort();
    Ok(out)
}

/// Weyl dimension written out for the ranks in use.
fn dim_closed_form(w: &WeightLabel) -> Option<usize> {
    let e = &w.entries;
    match w.n {
        1 | 2 => Some(1),
        3 => Some(2 * e[0] as usize + 1),
        4 => Some(((e[0] + 1) * (e[0] + 1) - e[1] * e[1]) as usize),
        _ => None,
    }
}

fn algebra(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let n = d + 1;
    let weights = weights_up_to(n, cfg.cutoff)?;
    let mut branch_gap = 0usize;
    let mut dim_gap = 0usize;
    let mut dual_gap = 0usize;
    for w in &weights {
        let total: usize = branch(w, d)?
            .iter()
            .map(|s| dim_weight(s, d))
            .collect::<CoreResult<Vec<_>>>()?
            .iter()
            .sum();
        let dim = dim_weight(w, n)?;
        branch_gap = branch_gap.max(dim.abs_diff(total));
        if let Some(c) = dim_closed_form(w) {
            dim_gap = dim_gap.max(dim.abs_diff(c));
        }
        if dual(&dual(w, n)?, n)? != *w || dim_weight(&dual(w, n)?, n)? != dim {
            dual_gap += 1;
        }
    }
    let mut cases = vec![
        Case::small(
            format!("branching preserves dimension ({} weights)", weights.len()),
            branch_gap as f64,
            0.0,
        ),
        Case::small("Weyl dimension matches closed form", dim_gap as f64, 0.0),
        Case::small(
            "dual is a dimension-preserving involution",
            dual_gap as f64,
            0.0,
        ),
    ];
    let mid = 0.75 * d as f64;
    let upsilons: Vec<i64> = if d == 1 {
        vec![0]
    } else {
        (0..=cfg.upsilon.max(1)).collect()
    };
    for u in upsilons {
        let l = CompSerLabel::with_upsilon(d, u, mid)?;
        let mut worst = 0usize;
        let mut dim_mismatch = 0usize;
        let mut min_casimir = f64::INFINITY;
        for tau in ktypes_of_compser(&l, cfg.cutoff)? {
            let mult = branch(&tau.weight(d), d)?
                .iter()
                .filter(|s| **s == l.upsilon)
                .count();
            worst = worst.max(mult.abs_diff(1));
            if ktype_dim(tau, d) != dim_weight(&tau.weight(d), n)? {
                dim_mismatch += 1;
            }
            min_casimir = min_casimir.min(compser_core::liealg::casimir_scalar(tau, d));
        }
        cases.push(Case::small(
            format!("υ = {} occurs once in every K-type", l.upsilon),
            worst as f64,
            0.0,
        ));
        cases.push(Case::small(
            format!("K-type dimensions for υ = {}", l.upsilon),
            dim_mismatch as f64,
            0.0,
        ));
        cases.push(Case::at_most(
            format!("Casimir nonnegative for υ = {}", l.upsilon),
            -min_casimir,
            0.0,
            0.0,
        ));
    }
    Ok(cases)
}

fn group(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reassembly = 0.0f64;
    let mut k_orth = 0.0f64;
    for _ in 0..cfg.samples {
        let g = random_word(d, 5, 1.5, 1.0, &mut rng);
        let f = iwasawa(&g)?;
        reassembly = reassembly.max(f.reassemble().max_abs_diff(&g));
        let r = f.k.rotation_block();
        let eye = DMatrix::<f64>::identity(d + 1, d + 1);
        k_orth = k_orth.max((r.transpose() * &r - eye).amax());
    }
    let mut nbar = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let expect = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
        nbar = nbar.max((exp_h(&make_nbar(&x)) - expect).abs());
    }
    let tol = &cfg.tolerances;
    Ok(vec![
        Case::small(
            format!("Iwasawa reassembly, {} words", cfg.samples),
            reassembly,
            tol.iwasawa,
        ),
        Case::small("K factor is orthogonal", k_orth, tol.iwasawa),
        Case::small("e^H(n̄_x) = 1 + |x|², 100 points", nbar, tol.nbar_h),
    ])
}

fn model(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let mut cases = Vec::new();
    let grid = k_quadrature(d, cfg.k_level)?;
    for u in upsilons(cfg) {
        let l = CompSerLabel::with_upsilon(d, u, 0.75 * d as f64)?;
        let basis = Basis::new(&l, cfg.cutoff)?;
        let mut gram = DMatrix::<Complex64>::zeros(basis.dim, basis.dim);
        for (p, &w) in grid.nodes.iter().zip(&grid.weights) {
            let vals = DVector::from_vec(basis.values(&p.coord));
            gram += &vals * vals.adjoint() * Complex64::new(w, 0.0);
        }
        let defect = (gram - DMatrix::identity(basis.dim, basis.dim)).camax();
        cases.push(Case::small(
            format!(
                "Schur orthogonality, υ = {}, {} functions on {} nodes",
                l.upsilon,
                basis.dim,
                grid.len()
            ),
            defect,
            cfg.tolerances.schur,
        ));
    }
    cases.push(Case::small(
        "quadrature weights sum to 1",
        (grid.weight_sum() - 1.0).abs(),
        cfg.tolerances.schur,
    ));
    Ok(cases)
}

fn upsilons(cfg: &SuiteConfig) -> Vec<i64> {
    if cfg.upsilon == 0 {
        vec![0]
    } else {
        vec![0, cfg.upsilon]
    }
}

fn toperator(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let tol = &cfg.tolerances;
    let mut cases = Vec::new();
    for u in upsilons(cfg) {
        let l = CompSerLabel::with_upsilon(d, u, 0.75 * d as f64)?;
        let basis = Basis::new(&l, cfg.cutoff)?;
        let mg = m_grid_for(&basis)?;
        let t = t_operator_full(&basis, &mg)?;
        let dim_u = dim_weight(&l.upsilon, d)? as f64;
        let proj = left_mtype_projector(&basis, &upsilon_star(&l)?, &mg)?;
        let mut adj = 0.0f64;
        let mut diag = 0.0f64;
        let mut norm_excess = f64::NEG_INFINITY;
        for ((f, to), m) in &t.blocks {
            let back = t.block(*to, *f).expect("full operator");
            adj = adj.max((m - back.adjoint()).camax());
            let bound = ((ktype_dim(*f, d) * ktype_dim(*to, d)) as f64).sqrt() / dim_u;
            norm_excess = norm_excess.max(m.clone().singular_values().max() - bound);
            if f == to {
                let p = proj.block(*f, *f).expect("diagonal projector");
                let scale = Complex64::new(ktype_dim(*f, d) as f64 / dim_u, 0.0);
                diag = diag.max((m - p * scale).camax());
            }
        }
        cases.push(Case::small(
            format!("υ = {}: T adjoint symmetry", l.upsilon),
            adj,
            tol.t_adjoint,
        ));
        cases.push(Case::small(
            format!("υ = {}: T_τ^τ = (dim τ/dim υ) P_υ*", l.upsilon),
            diag,
            tol.t_diagonal,
        ));
        cases.push(Case::at_most(
            format!("υ = {}: ‖T_τ1^τ2‖ − √(dim τ1 dim τ2)/dim υ", l.upsilon),
            norm_excess,
            0.0,
            tol.t_norm,
        ));
        if u != 0 {
            let triv = left_mtype_projector(&basis, &WeightLabel::trivial(d), &mg)?;
            let v = t.compose(&triv)?.to_dense().camax();
            cases.push(Case::small(
                format!("υ = {}: T vanishes on M-invariant vectors", l.upsilon),
                v,
                tol.t_vanishing,
            ));
        }
    }
    Ok(cases)
}

fn cfunction(cfg: &SuiteConfig, tables: &mut Vec<Table>) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let tol = &cfg.tolerances;
    let mut cases = Vec::new();
    let mut table = Table::new(
        "cfunction",
        &["d", "s", "computed", "closed_form", "abs_error"],
    );
    let act = ActConfig {
        grid: Arc::new(k_quadrature(d, cfg.k_level)?),
        tolerance: 1.0,
    };
    for &s in &cfg.s {
        let basis = Basis::new(&spherical(d, s)?, cfg.cutoff)?;
        let c = cplus(
            &basis,
            &CPlusConfig {
                measure: NbarMeasure::Lebesgue,
                radial_nodes: None,
            },
        )?;
        let tau = KType::new(0, 0);
        let val = c.op.block(tau, tau).expect("spherical block")[(0, 0)];
        let closed = spherical_cplus_value(d, s);
        table.push(vec![
            d.to_string(),
            crate::report::fmt_f64(s),
            fmt(val.re),
            fmt(closed),
            fmt((val.re - closed).abs()),
        ]);
        cases.push(Case::within(
            format!("s = {s}: spherical C₊ value"),
            val.re,
            closed,
            tol.cplus_value,
        ));
        cases.push(Case::small(
            format!("s = {s}: spherical C₊ imaginary part"),
            val.im.abs(),
            tol.cplus_value,
        ));
        cases.push(Case::small(
            format!("s = {s}: C₊ quadrature refinement"),
            c.error_estimate,
            tol.cplus_value,
        ));
    }
    let s0 = cfg.s[0];
    for u in upsilons(cfg) {
        let l = CompSerLabel::with_upsilon(d, u, s0)?;
        let basis = Basis::new(&l, cfg.cutoff)?;
        let leak = cplus_leakage(&basis, &act, &[0.3, 1.0, 3.0])?;
        cases.push(Case::small(
            format!("υ = {}: K-type diagonality of the integrand", l.upsilon),
            leak,
            tol.cplus_structure,
        ));
        let c = cplus(
            &basis,
            &CPlusConfig {
                measure: NbarMeasure::Lebesgue,
                radial_nodes: None,
            },
        )?;
        let mg = m_grid_for(&basis)?;
        let mut sigmas = BTreeSet::new();
        for tau in basis.ktypes() {
            sigmas.extend(branch(&tau.weight(d), d)?);
        }
        let sigmas: Vec<WeightLabel> = sigmas.into_iter().collect();
        let comm = mtype_commutator(&c.op, &sigmas, &mg)?;
        cases.push(Case::small(
            format!(
                "υ = {}: C₊ commutes with {} M-type projections",
                l.upsilon,
                sigmas.len()
            ),
            comm,
            tol.cplus_structure,
        ));
    }
    tables.push(table);
    Ok(cases)
}

fn fmt(x: f64) -> String {
    crate::report::fmt_f64(x)
}

fn eisenstein(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let t = cfg.t_grid[0];
    let basis = Basis::new(&label(cfg, cfg.s[0])?, cfg.cutoff)?;
    let act = ActConfig {
        grid: Arc::new(k_quadrature(d, cfg.k_level)?),
        tolerance: 1.0,
    };
    let mg = m_grid_for(&basis)?;
    let g = make_a(t, d);
    let ktypes: Vec<KType> = basis
        .ktypes()
        .into_iter()
        .filter(|k| k.t1.abs() <= 2)
        .collect();
    let mut cases = Vec::new();
    for &t1 in &ktypes {
        for &t2 in &ktypes {
            let r = eisenstein_check(&g, &basis, t1, t2, &act, &mg)?;
            cases.push(Case::small(
                format!("a_{t}: {t1} → {t2}"),
                r.defect,
                cfg.tolerances.eisenstein,
            ));
        }
    }
    Ok(cases)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn gammas(cfg: &SuiteConfig) -> Vec<Case> {
    let mut cases = guard("gamma recursion", || gamma_recursion(cfg));
    cases.extend(guard("gamma path independence", || gamma_paths(cfg)));
    if cfg.d <= 2 {
        cases.extend(guard("first-order action", || first_order(cfg)));
    }
    if cfg.d == 1 {
        cases.extend(guard("unitarity", || unitarity(cfg)));
    }
    cases
}

/// (s + t1) a(t1 + 1, t2) = (d − s + t1) a(t1, t2), and for υ ≠ 0 in d = 3
/// (s + t2 − 1) a(t1, t2 + 1) = (d − s + t2 − 1) a(t1, t2). For d = 1 the
/// first identity also runs downward with |t1|.
fn gamma_recursion(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d as f64;
    let mut worst1 = 0.0f64;
    let mut worst2 = 0.0f64;
    let mut pairs = 0usize;
    for &s in &cfg.s {
        let l = label(cfg, s)?;
        let sc = IntertwiningScalars::new(&l, cfg.cutoff)?;
        for tau in ktypes_of_compser(&l, cfg.cutoff)? {
            let a = sc.get(tau)?;
            let n = tau.t1.abs() as f64;
            let next = if tau.t1 >= 0 {
                KType::new(tau.t1 + 1, tau.t2)
            } else {
                KType::new(tau.t1 - 1, tau.t2)
            };
            if let Ok(b) = sc.get(next) {
                worst1 = worst1.max(rel((s + n) * b, (d - s + n) * a));
                pairs += 1;
            }
            if cfg.d == 1 && tau.t1 == 0 {
                let b = sc.get(KType::new(-1, 0))?;
                worst1 = worst1.max(rel((s + n) * b, (d - s + n) * a));
                pairs += 1;
            }
            if cfg.d == 3 && cfg.upsilon != 0 {
                if let Ok(b) = sc.get(KType::new(tau.t1, tau.t2 + 1)) {
                    let m = tau.t2 as f64 - 1.0;
                    worst2 = worst2.max(rel((s + m) * b, (d - s + m) * a));
                    pairs += 1;
                }
            }
        }
    }
    let mut cases = vec![Case::small(
        format!(
            "t1 recursion, {} s values, t1 ≤ {}",
            cfg.s.len(),
            cfg.cutoff
        ),
        worst1,
        cfg.tolerances.gamma_recursion,
    )];
    if cfg.d == 3 && cfg.upsilon != 0 {
        cases.push(Case::small(
            "t2 recursion",
            worst2,
            cfg.tolerances.gamma_recursion,
        ));
    }
    cases.push(Case::above("adjacent pairs checked", pairs as f64, 0.0));
    Ok(cases)
}

fn gamma_paths(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for &s in &cfg.s {
        let l = label(cfg, s)?;
        let ks = ktypes_of_compser(&l, cfg.cutoff)?;
        for _ in 0..20 {
            let pick = |rng: &mut ChaCha8Rng| ks[rng.gen_range(0..ks.len())];
            let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let direct = a_ratio(&l, a, c)?;
            let via = a_ratio(&l, a, b)? * a_ratio(&l, b, c)?;
            worst = worst.max(rel(direct, via));
        }
    }
    Ok(vec![Case::small(
        "path independence of a(τ)/a(τ′)",
        worst,
        cfg.tolerances.gamma_path,
    )])
}

fn first_order(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let d = cfg.d;
    let s = 0.75 * d as f64;
    let basis = Basis::new(&spherical(d, s)?, 4)?;
    let grid = Arc::new(k_quadrature(d, if d == 1 { 64 } else { 32 })?);
    let act = ActConfig {
        grid: grid.clone(),
        tolerance: 1.0,
    };
    let mut cases = Vec::new();
    for t1 in 0..=2 {
        let tau = KType::new(t1, 0);
        let (i, v) = find_witness(&basis, tau, Raise::First, &grid)?;
        let r = first_order_action_check(&v, i, Raise::First, 1e-3, &act)?;
        cases.push(Case::small(
            format!("s = {s}: dU(X_{i}) from {tau} to {}", r.target),
            r.relative_defect,
            cfg.tolerances.first_order,
        ));
    }
    Ok(cases)
}

/// Truncation loss of the unitary inner product under a_1 at Λ = 16 and 32.
pub fn unitarity(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let s = 0.75;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let small = Basis::new(&spherical(1, s)?, 16)?;
    let large = small.with_cutoff(32)?;
    let low: Vec<KType> = (-2..=2).map(|n| KType::new(n, 0)).collect();
    let u = ModelVector::random(&small, &low, &mut rng)?;
    let v = ModelVector::random(&small, &low, &mut rng)?;
    let act = ActConfig {
        grid: Arc::new(k_quadrature(1, 256)?),
        tolerance: 1.0,
    };
    let g = make_a(1.0, 1);
    let mut defects = Vec::new();
    for b in [&small, &large] {
        let sc = IntertwiningScalars::new(&b.label, b.cutoff)?;
        defects.push(unitary_invariance_defect(
            &g,
            &u.rebased(b)?,
            &v.rebased(b)?,
            &sc,
            &act,
        )?);
    }
    Ok(vec![
        Case::above(
            "unitarity defect drop from Λ = 16 to 32",
            defects[0] - defects[1],
            0.0,
        ),
        Case::small(
            "unitarity defect at Λ = 32",
            defects[1],
            cfg.tolerances.unitarity,
        ),
    ])
}

/// Normalized χ_τ, the left-M-invariant vector of τ when one exists.
pub fn chi_probe(basis: &Arc<Basis>, tau: KType) -> CoreResult<ModelVector> {
    let c = chi_vector(tau, basis)?;
    let mg = m_grid_for(basis)?;
    let p = project_mtype_left(&c, &WeightLabel::trivial(basis.d()), &mg)?;
    Ok(if p.norm() > 1e-12 {
        p.normalized()
    } else {
        c.normalized()
    })
}

fn decay_table(name: String, r: &DecayReport) -> CoreResult<Table> {
    Table::from_csv_text(name, &r.to_csv())
        .map_err(|e| compser_core::Error::Degenerate(e.to_string()))
}

fn decay_case(prefix: &str, r: &DecayReport) -> Case {
    Case::at_most(
        format!("{prefix}: residual slope over {} points", r.fitted_points),
        r.fitted_slope,
        r.target_slope,
        r.slope_tolerance,
    )
}

fn decay(cfg: &SuiteConfig, tables: &mut Vec<Table>) -> CoreResult<Vec<Case>> {
    let first = cfg.probe_ktypes[0];
    let last = *cfg.probe_ktypes.last().expect("validated");
    let mut cases = Vec::new();
    for &s in &cfg.s {
        let basis = Basis::new(&label(cfg, s)?, cfg.cutoff)?;
        let ctx = MainTermContext::new(&basis, &CPlusConfig::default())?;
        let u = chi_probe(&basis, KType::new(first.0, first.1))?;
        let v = chi_probe(&basis, KType::new(last.0, last.1))?;
        let k = certify_decay(&ctx, &u, &v, &cfg.t_grid, cfg.tolerances.slope)?;
        cases.push(decay_case(&format!("s = {s}, K form"), &k));
        tables.push(decay_table(format!("decay_s{s}_k"), &k)?);
        if ctx.scalars.is_some() {
            let un = certify_decay_unitary(&ctx, &u, &v, &cfg.t_grid, cfg.tolerances.slope)?;
            cases.push(decay_case(&format!("s = {s}, unitary form"), &un));
            tables.push(decay_table(format!("decay_s{s}_unitary"), &un)?);
        }
    }
    Ok(cases)
}

fn vanishing(cfg: &SuiteConfig, tables: &mut Vec<Table>) -> CoreResult<Vec<Case>> {
    let tol = &cfg.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kts: Vec<KType> = cfg
        .probe_ktypes
        .iter()
        .map(|&(a, b)| KType::new(a, b))
        .collect();
    let mut cases = Vec::new();
    for &s in &cfg.s {
        let basis = Basis::new(&label(cfg, s)?, cfg.cutoff)?;
        let ctx = MainTermContext::new(&basis, &CPlusConfig::default())?;
        let probes = (1..=kts.len())
            .map(|k| minv_probe(&basis, &kts[..k], &mut rng))
            .collect::<CoreResult<Vec<_>>>()?;
        let report = minv_vanishing_suite(&ctx, &probes, &cfg.t_grid, tol.slope)?;
        for (i, (u, p)) in probes.iter().zip(&report.probes).enumerate() {
            let mt = main_term(&ctx, u, u)?;
            let summand = mt
                .summands
                .iter()
                .map(|x| x.value.norm())
                .fold(0.0, f64::max);
            cases.push(Case::small(
                format!("s = {s}, probe {i}: largest ‖T C₊ P_τ u‖"),
                p.max_tc_norm,
                tol.main_term_vanishing,
            ));
            cases.push(Case::small(
                format!("s = {s}, probe {i}: largest main-term summand"),
                summand,
                tol.main_term_vanishing,
            ));
            cases.push(decay_case(&format!("s = {s}, probe {i}"), &p.decay));
            tables.push(decay_table(format!("vanishing_s{s}_probe{i}"), &p.decay)?);
        }
        cases.push(Case::above(
            format!("s = {s}: spherical control main term"),
            report.control_main_term,
            tol.control_main_term,
        ));
    }
    Ok(cases)
}

fn brute_max(a: f64, b: f64, d: usize, n: usize) -> f64 {
    let df = d as f64;
    (0..=n)
        .map(|i| {
            let s = if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            };
            s - df - (2.0 * s - df).min(1.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn rates(cfg: &SuiteConfig) -> CoreResult<Vec<Case>> {
    let tol = cfg.tolerances.rates;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cases = Vec::new();
    for d in 1..=3usize {
        let df = d as f64;
        let mut lam_gap = 0.0f64;
        let mut beta_gap = 0.0f64;
        let mut bound_excess = f64::NEG_INFINITY;
        for _ in 0..cfg.samples {
            let delta = rng.gen_range(df / 2.0 + 1e-3..df);
            let s1 = rng.gen_range(df / 2.0..delta - 1e-4);
            let r = rng.gen_range(0.0..1.0) * (delta - s1) * 0.999 + 1e-6 * (delta - s1);
            let xi = rng.gen_range(1e-4..0.2);
            let data = SpectralData::new(d, delta, s1, None)?;
            let lam = lambda_rate(&data, r)?;
            let brute = brute_max(s1 + r, delta, d, 2000);
            lam_gap = lam_gap.max((lam - brute).abs());
            let b = beta_rate(&data, r, xi)?;
            let eta_delta = (2.0 * delta - df).min(1.0);
            let expect = eta_delta.min(delta - s1 - r - xi).min(delta - df - brute);
            beta_gap = beta_gap.max((b.beta - expect).abs());
            bound_excess = bound_excess.max((delta - s1).min(1.0) - (xi + r) - b.beta);
        }
        cases.push(Case::small(
            format!("d = {d}: λ(δ, r) vs grid maximum, {} samples", cfg.samples),
            lam_gap,
            tol,
        ));
        cases.push(Case::small(
            format!("d = {d}: β vs grid oracle"),
            beta_gap,
            tol,
        ));
        cases.push(Case::at_most(
            format!("d = {d}: lower bound minus β"),
            bound_excess,
            0.0,
            1e-12,
        ));
    }
    let worked = beta_rate(&SpectralData::new(1, 0.9, 0.6, None)?, 0.05, 0.05)?;
    cases.push(Case::within(
        "worked example β (d = 1, δ = 0.9, s1 = 0.6)",
        worked.beta,
        0.2,
        tol,
    ));
    let lat2 = lattice_eta(&SpectralData::new(2, 2.0, 1.2, None)?, false)?;
    cases.push(Case::within("lattice rate d = 2, s1 = 1.2", lat2, 0.8, tol));
    let lat3 = lattice_eta(&SpectralData::new(3, 3.0, 1.5, None)?, false)?;
    cases.push(Case::within("lattice rate d = 3, s1 = 1.5", lat3, 1.5, tol));
    Ok(cases)
}
