//! CSV tables behind `compser-lab table <KIND>`.

use compser_core::asymptotics::{
    main_term, matcoef_direct, matcoef_nbar, MainTermContext, MatcoefConfig,
};
use compser_core::harmonic::{
    cplus, spherical_cplus_value, CPlusConfig, IntertwiningScalars, NbarMeasure,
};
use compser_core::{Basis, CompSerLabel, KType, WeightLabel};

use crate::config::{SuiteConfig, TableKind};
use crate::report::{fmt_f64, Table};
use crate::suites::chi_probe;

pub fn emit_table(kind: TableKind, cfg: &SuiteConfig) -> compser_core::Result<Table> {
    match kind {
        TableKind::Matcoef => matcoef(cfg),
        TableKind::Scalars => scalars(cfg),
        TableKind::Cfun => cfun(cfg),
    }
}

/// ⟨U^s(a_t)u, v⟩ by direct K quadrature and in N̄ coordinates, with the
/// leading term e^{(s−d)t}·main alongside.
fn matcoef(cfg: &SuiteConfig) -> compser_core::Result<Table> {
    let s = cfg.s[0];
    let basis = Basis::new(
        &CompSerLabel::with_upsilon(cfg.d, cfg.upsilon, s)?,
        cfg.cutoff,
    )?;
    let (a, b) = cfg.probe_ktypes[0];
    let u = chi_probe(&basis, KType::new(a, b))?;
    let ctx = MainTermContext::new(&basis, &CPlusConfig::default())?;
    let main = main_term(&ctx, &u, &u)?.k_form;
    let mut t = Table::new(
        "matcoef",
        &[
            "t",
            "direct_re",
            "direct_im",
            "nbar_re",
            "nbar_im",
            "leading_re",
            "leading_im",
        ],
    );
    for &tt in &cfg.t_grid {
        let direct = matcoef_direct(&u, &u, tt, &MatcoefConfig::default())?;
        let nbar = matcoef_nbar(&u, &u, tt)?;
        let lead = main * ((s - cfg.d as f64) * tt).exp();
        t.push(
            [tt, direct.re, direct.im, nbar.re, nbar.im, lead.re, lead.im]
                .map(fmt_f64)
                .to_vec(),
        );
    }
    Ok(t)
}

fn scalars(cfg: &SuiteConfig) -> compser_core::Result<Table> {
    let label = CompSerLabel::with_upsilon(cfg.d, cfg.upsilon, cfg.s[0])?;
    let sc = IntertwiningScalars::new(&label, cfg.cutoff)?;
    Table::from_csv_text("scalars", &sc.to_csv())
        .map_err(|e| compser_core::Error::Degenerate(e.to_string()))
}

/// Spherical C₊(s) with Lebesgue measure on N̄ against π^{d/2}Γ(s − d/2)/Γ(s).
fn cfun(cfg: &SuiteConfig) -> compser_core::Result<Table> {
    let d = cfg.d;
    let mut t = Table::new("cfun", &["d", "s", "computed", "closed_form", "abs_error"]);
    for &s in &cfg.s {
        let basis = Basis::new(&CompSerLabel::standard(d, WeightLabel::trivial(d), s)?, 0)?;
        let c = cplus(
            &basis,
            &CPlusConfig {
                measure: NbarMeasure::Lebesgue,
                radial_nodes: None,
            },
        )?;
        let tau = KType::new(0, 0);
        let val = c.op.block(tau, tau).expect("spherical block")[(0, 0)].re;
        let closed = spherical_cplus_value(d, s);
        t.push(vec![
            d.to_string(),
            fmt_f64(s),
            fmt_f64(val),
            fmt_f64(closed),
            fmt_f64((val - closed).abs()),
        ]);
    }
    Ok(t)
}
