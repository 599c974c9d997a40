//! Up-front feasibility checks of a scenario before any episode runs.

use crate::bisim::verify_certificate;

use super::context::SynthesisContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub lines: Vec<(Level, String)>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (level, msg) in &self.lines {
            let tag = match level {
                Level::Info => "ok  ",
                Level::Warning => "warn",
                Level::Error => "FAIL",
            };
            out.push_str(&format!("[{tag}] {msg}\n"));
        }
        out.push_str(if self.pass { "result: PASS\n" } else { "result: FAIL\n" });
        out
    }
}

/// Check the probability budget, horizon coverage, certificate validity,
/// and stabilizability of a built scenario.
pub fn validate_problem(ctx: &SynthesisContext) -> ValidationReport {
    let mut lines = Vec::new();
    let g = &ctx.config.guarantees;

    let product = g.gamma * g.eta;
    if product >= g.chi {
        lines.push((
            Level::Info,
            format!(
                "probability budget: gamma*eta = {:.4} >= chi = {:.4}",
                product, g.chi
            ),
        ));
    } else {
        lines.push((
            Level::Error,
            format!("probability budget: gamma*eta = {:.4} < chi = {:.4}", product, g.chi),
        ));
    }

    let horizon = ctx.formula.horizon();
    if horizon <= ctx.config.horizon.t_max {
        lines.push((
            Level::Info,
            format!("formula horizon {horizon} within replanning window T_max = {}", ctx.config.horizon.t_max),
        ));
    } else {
        lines.push((
            Level::Warning,
            format!(
                "formula horizon {horizon} exceeds T_max = {}; tail obligations are \
                 planned over the full horizon while replanning stops at T_max",
                ctx.config.horizon.t_max
            ),
        ));
    }

    let report = verify_certificate(&ctx.certificate);
    if report.pass {
        lines.push((
            Level::Info,
            format!(
                "certificate: positive definite, inequality residual {:.2e}, mu = {}",
                report.lmi_residual, ctx.certificate.mu
            ),
        ));
    } else {
        lines.push((
            Level::Error,
            format!(
                "certificate failed verification: min eigenvalue {:.2e}, residual {:.2e}, \
                 mu-free residual {:.2e}",
                report.min_eigenvalue, report.lmi_residual, report.lmi_residual_mu_free
            ),
        ));
    }

    let abscissa = crate::matrix::spectral_abscissa(&ctx.certificate.a_cl);
    if abscissa < 0.0 {
        lines.push((Level::Info, format!("closed loop Hurwitz: abscissa {abscissa:.4}")));
    } else {
        lines.push((
            Level::Error,
            format!("closed loop not Hurwitz: abscissa {abscissa:.4}"),
        ));
    }

    for (i, mech) in ctx.mechanisms.iter().enumerate() {
        let name = &ctx.config.agents[i].name;
        if mech.sigma() > 0.0 {
            lines.push((
                Level::Info,
                format!("agent {name}: privacy noise sigma = {:.6}", mech.sigma()),
            ));
        } else {
            lines.push((
                Level::Warning,
                format!("agent {name}: privacy mechanism disabled (sigma = 0)"),
            ));
        }
    }

    let pass = lines.iter().all(|(l, _)| *l != Level::Error);
    ValidationReport { lines, pass }
}
