//! The four subcommands. Each returns the lines it printed so tests can
//! inspect them; files go to the resolved output directory.

use epiwave_core::certificates::{
    bounds, check_constraints, default_certificate_given, default_grid, verify_supersub, ResidualReport,
};
use epiwave_core::dispersion::{logspace, minimal_wave_speed, sample_curve, DispersionResult};
use epiwave_core::model::{derived_quantities, disease_free_equilibrium, endemic_equilibrium, Equilibrium};
use epiwave_core::solver::{run_observed, schedule, SimState};
use epiwave_core::wavelab::{
    comparability_check, conservation_report, default_level, estimate_speed, extinction_check,
    harnack_gradient_check, lyapunov_profile, Compartment, FrontTrace, Profile,
};
use epiwave_core::{Error, Exec, ModelParams};

use crate::config::{RunConfig, MANIFEST_HEADER};
use crate::output::{num, snapshot_name, OutDir};
use crate::CliError;

/// Fraction of the front trace dropped as transient before the speed fit.
pub const SPEED_DISCARD: f64 = 0.5;
/// x₂(t_end)/x₂(0) maxima below this count as extinction.
pub const EXTINCTION_THRESHOLD: f64 = 1e-6;
pub const LYAPUNOV_SLACK: f64 = 0.01;
pub const HARNACK_SLACK: f64 = 0.05;
/// Profile nodes below this fraction of the endemic state are left out of
/// the Lyapunov and comparability diagnostics.
pub const POSITIVE_FLOOR: f64 = 1e-6;
pub const CERTIFY_GRID: usize = 2001;

pub struct Output {
    pub lines: Vec<String>,
}

impl Output {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

fn pair(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

fn state_pairs(prefix: &str, e: &Equilibrium) -> Vec<(String, String)> {
    e.to_array().iter().enumerate().map(|(i, v)| (format!("{prefix}_x{}", i + 1), num(*v))).collect()
}

fn supercritical(p: &ModelParams) -> Result<Option<DispersionResult>, CliError> {
    match minimal_wave_speed(p) {
        Ok(r) => Ok(Some(r)),
        Err(Error::SubcriticalR0 { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn analyze(cfg: &RunConfig, out: &OutDir) -> Result<Output, CliError> {
    let p = &cfg.params;
    let d = derived_quantities(p)?;
    let e0 = disease_free_equilibrium(p)?;
    let mut o = Output::new();
    let mut rows = vec![pair("r0", num(d.r0)), pair("l0", num(d.l0)), pair("l1", num(d.l1))];
    rows.push(pair("alpha_max_zero", num(d.alpha_max_zero)));
    rows.extend(state_pairs("e0", &e0));
    o.say(format!("r0: {}", num(d.r0)));
    o.say(format!("l0: {}  l1: {}  alpha_max(0): {}", num(d.l0), num(d.l1), num(d.alpha_max_zero)));
    o.say(format!("E0: {:?}", e0.to_array()));

    match endemic_equilibrium(p) {
        Ok(e1) => {
            rows.push(pair("endemic", "present"));
            rows.extend(state_pairs("e1", &e1));
            o.say(format!("endemic: {:?}", e1.to_array()));
        }
        Err(e) => {
            rows.push(pair("endemic", "none"));
            rows.push(pair("endemic_reason", e.to_string()));
            o.say(format!("endemic: none ({e})"));
        }
    }
    match supercritical(p)? {
        Some(r) => {
            rows.push(pair("c_star", num(r.c_star)));
            rows.push(pair("lambda_star", num(r.lambda_star)));
            o.say(format!("c*: {}  lambda*: {}", num(r.c_star), num(r.lambda_star)));
        }
        None => {
            rows.push(pair("c_star", "subcritical"));
            rows.push(pair("lambda_star", "subcritical"));
            o.say("c*: subcritical (alpha_max(0) <= 0, no traveling waves)");
        }
    }
    let path = out.write_pairs("summary.csv", &rows)?;
    o.say(format!("wrote {}", path.display()));
    Ok(o)
}

pub fn dispersion(
    cfg: &RunConfig,
    out: &OutDir,
    lambda_min: f64,
    lambda_max: f64,
    samples: usize,
) -> Result<Output, CliError> {
    let ok = lambda_min.is_finite() && lambda_max.is_finite() && lambda_min > 0.0 && lambda_max > lambda_min;
    if !ok || samples < 2 {
        return Err(CliError::new(
            4,
            format!("bad range: need 0 < lambda-min < lambda-max and samples >= 2 (got {lambda_min}, {lambda_max}, {samples})"),
        ));
    }
    let p = &cfg.params;
    p.validate()?;
    let curve = sample_curve(p, &logspace(lambda_min, lambda_max, samples), Exec::Auto);
    let mut o = Output::new();
    let trailer = match supercritical(p)? {
        Some(r) => {
            o.say(format!("c* = {} at lambda* = {}", num(r.c_star), num(r.lambda_star)));
            format!("# lambda_star={},c_star={}", num(r.lambda_star), num(r.c_star))
        }
        None => {
            o.say("subcritical: c_lambda has no positive minimum");
            "# lambda_star=none,c_star=subcritical".to_string()
        }
    };
    let rows = curve.iter().map(|c| [num(c.lambda), num(c.alpha_min), num(c.alpha_max), num(c.c_lambda)]);
    let path = out.write_csv("dispersion.csv", &["lambda", "alpha_min", "alpha_max", "c_lambda"], rows, &[trailer])?;
    o.say(format!("wrote {} ({} rows)", path.display(), curve.len()));
    Ok(o)
}

fn write_snapshot(out: &OutDir, s: &SimState) -> Result<(), CliError> {
    let c = s.clipped();
    let rows = (0..c.nodes.len()).map(|i| {
        let x = c.nodes[i];
        [num(c.grid.y(i)), num(x[0]), num(x[1]), num(x[2]), num(x[3])]
    });
    out.write_csv(&snapshot_name(s.t), &["y", "x1", "x2", "x3", "x4"], rows, &[])?;
    Ok(())
}

fn not_applicable(reason: &str) -> Vec<(String, String)> {
    vec![pair("status", "not_applicable"), pair("reason", reason)]
}

pub fn simulate(cfg: &RunConfig, out: &OutDir) -> Result<Output, CliError> {
    let p = &cfg.params;
    let sim = cfg.sim_config()?;
    let sched = schedule(&sim, p)?;
    let disp = supercritical(p)?;
    let e1 = endemic_equilibrium(p).ok();
    // Half the endemic level; without one, half the seeded infection.
    let level = match default_level(p) {
        Ok(l) => l,
        Err(_) => 0.5 * sim.ic.pieces.iter().map(|pc| pc.value[1]).fold(0.0, f64::max),
    };

    let mut snaps: Vec<SimState> = Vec::new();
    let mut trace = FrontTrace::new(level);
    let mut write_err = None;
    let result = run_observed(&sim, p, Exec::Auto, |s| {
        if write_err.is_none() {
            write_err = write_snapshot(out, s).err();
        }
        if level > 0.0 {
            trace.push(s, Compartment::X2);
        }
        snaps.push(s.clone());
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let last = result?;
    let first = &snaps[0];
    let mut o = Output::new();

    out.write_csv("front.csv", &["t", "y_front"], trace.entries.iter().map(|(t, y)| [num(*t), num(*y)]), &[])?;

    let speed = estimate_speed(&trace, SPEED_DISCARD);
    let mut speed_rows = vec![pair("level", num(level))];
    match &speed {
        Ok(s) => {
            speed_rows.extend([
                pair("speed", num(s.speed)),
                pair("intercept", num(s.intercept)),
                pair("fit_start", num(s.fit_window.0)),
                pair("fit_end", num(s.fit_window.1)),
                pair("rms_residual", num(s.rms_residual)),
                pair("points", s.points.to_string()),
            ]);
            o.say(format!("front speed: {} (fit over t in [{}, {}])", num(s.speed), num(s.fit_window.0), num(s.fit_window.1)));
        }
        Err(e) => {
            speed_rows.push(pair("speed", "nan"));
            speed_rows.push(pair("status", e.to_string()));
            o.say(format!("front speed: unavailable ({e})"));
        }
    }
    if let Some(r) = &disp {
        speed_rows.push(pair("c_star", num(r.c_star)));
        if let Ok(s) = &speed {
            speed_rows.push(pair("relative_gap", num((s.speed - r.c_star) / r.c_star)));
        }
        o.say(format!("minimal wave speed c*: {}", num(r.c_star)));
    }
    out.write_pairs("report_speed.csv", &speed_rows)?;

    let cons = conservation_report(&snaps, p);
    out.write_csv(
        "report_conservation.csv",
        &["t", "host_dev", "vector_dev"],
        cons.rows.iter().map(|r| [num(r.t), num(r.host_dev), num(r.vector_dev)]),
        &[format!("# monotone={}", cons.monotone)],
    )?;

    match (&disp, &e1) {
        (Some(r), Some(e1)) => {
            // Diagnostics expect the endemic side at +infinity.
            let prof = Profile::from_state(&last).reflected();
            let h = harnack_gradient_check(&prof, r.c_star, p, HARNACK_SLACK);
            out.write_csv(
                "report_harnack.csv",
                &["component", "bound", "max_ratio", "at", "violations", "evaluated"],
                [("x2", &h.x2), ("x4", &h.x4)].iter().map(|(n, c)| {
                    [n.to_string(), num(c.bound), num(c.max_ratio), num(-c.at), c.violations.to_string(), c.evaluated.to_string()]
                }),
                &[format!("# passed={}", h.passed())],
            )?;
            o.say(format!("harnack gradient bound: {}", if h.passed() { "passed" } else { "violated" }));

            let floor = [0.0, POSITIVE_FLOOR * e1.x2, 0.0, POSITIVE_FLOOR * e1.x4];
            match prof.positive_span(floor) {
                Some(span) => {
                    let l = lyapunov_profile(&span, r.c_star, p, LYAPUNOV_SLACK)?;
                    out.write_pairs(
                        "report_lyapunov.csv",
                        &[
                            pair("c", num(r.c_star)),
                            pair("nodes", span.len().to_string()),
                            pair("v_start", num(l.v[0])),
                            pair("v_end", num(l.v[l.v.len() - 1])),
                            pair("max_increase", num(l.max_increase)),
                            pair("increases", l.increases.to_string()),
                            pair("fraction_increasing", num(l.fraction_increasing)),
                            pair("slack", num(l.slack)),
                            pair("descending", l.descending().to_string()),
                        ],
                    )?;
                    o.say(format!("lyapunov descent: {}", l.descending()));
                    let m = comparability_check(&span)?;
                    out.write_pairs("report_comparability.csv", &[pair("nodes", span.len().to_string()), pair("m", num(m))])?;
                    o.say(format!("comparability constant m: {}", num(m)));
                }
                None => {
                    let why = "no strictly positive span in the final profile";
                    out.write_pairs("report_lyapunov.csv", &not_applicable(why))?;
                    out.write_pairs("report_comparability.csv", &not_applicable(why))?;
                }
            }
        }
        _ => {
            let why = "r0 <= 1: no endemic state or minimal speed";
            for name in ["report_harnack.csv", "report_lyapunov.csv", "report_comparability.csv"] {
                out.write_pairs(name, &not_applicable(why))?;
            }
        }
    }

    let ext = extinction_check(first, &last, EXTINCTION_THRESHOLD);
    out.write_pairs(
        "report_extinction.csv",
        &[
            pair("x2_ratio", num(ext.x2_ratio)),
            pair("x4_ratio", num(ext.x4_ratio)),
            pair("threshold", num(ext.threshold)),
            pair("extinct", ext.extinct.to_string()),
        ],
    )?;
    o.say(format!("extinct: {} (max x2 ratio {})", ext.extinct, num(ext.x2_ratio)));

    let d = derived_quantities(p)?;
    let mut manifest: Vec<[String; 3]> =
        cfg.echo().into_iter().map(|(k, v)| ["config".to_string(), k, v]).collect();
    let mut derived = vec![pair("r0", num(d.r0)), pair("l0", num(d.l0)), pair("l1", num(d.l1))];
    derived.push(pair("alpha_max_zero", num(d.alpha_max_zero)));
    if let Some(r) = &disp {
        derived.push(pair("c_star", num(r.c_star)));
        derived.push(pair("lambda_star", num(r.lambda_star)));
    }
    if let Some(e1) = &e1 {
        derived.extend(state_pairs("e1", e1));
    }
    derived.extend([
        pair("dt", num(sched.dt)),
        pair("last_dt", num(sched.last_dt)),
        pair("total_steps", sched.total_steps.to_string()),
        pair("snapshots", snaps.len().to_string()),
        pair("front_level", num(level)),
    ]);
    manifest.extend(derived.into_iter().map(|(k, v)| ["derived".to_string(), k, v]));
    let header: Vec<&str> = MANIFEST_HEADER.split(',').collect();
    out.write_csv("manifest.csv", &header, manifest, &[])?;

    o.say(format!("wrote {} snapshots and reports to {}", snaps.len(), out.path.display()));
    Ok(o)
}

pub struct CertifyOutcome {
    pub output: Output,
    pub report: ResidualReport,
}

pub fn certify(cfg: &RunConfig, out: &OutDir, c: f64) -> Result<CertifyOutcome, CliError> {
    let p = &cfg.params;
    p.validate()?;
    let res = minimal_wave_speed(p)?;
    if !(c > res.c_star) {
        return Err(Error::SpeedNotSupercritical { c, c_star: res.c_star }.into());
    }
    let cert = default_certificate_given(c, p, &res)?;
    let b = bounds(c, &cert, p);
    let constraints = check_constraints(c, &cert, p)?;
    let report = verify_supersub(&cert, c, p, &default_grid(&cert, CERTIFY_GRID));

    let mut rows: Vec<[String; 5]> = Vec::new();
    let mut param = |name: &str, v: f64| rows.push(["param".into(), name.into(), num(v), String::new(), String::new()]);
    param("c", c);
    param("c_star", res.c_star);
    param("lambda", cert.lambda);
    param("kappa", cert.kappa);
    param("lambda_tilde", cert.lambda_tilde);
    param("a", cert.a);
    param("b", cert.b);
    param("a_min", b.a_min());
    param("b_min", b.b_min());
    param("b0", b.b0);
    for k in &constraints {
        rows.push(["constraint".into(), k.name.into(), num(k.value), num(k.bound), k.ok.to_string()]);
    }
    for e in &report.entries {
        rows.push(["residual".into(), e.name.into(), num(e.worst), num(e.at), e.ok.to_string()]);
    }
    out.write_csv("report_certify.csv", &["kind", "name", "value", "detail", "ok"], rows, &[])?;

    let mut o = Output::new();
    o.say(format!(
        "certificate for c = {}: lambda = {}, kappa = {}, lambda_tilde = {}, A = {}, B = {}",
        num(c),
        num(cert.lambda),
        num(cert.kappa),
        num(cert.lambda_tilde),
        num(cert.a),
        num(cert.b)
    ));
    for e in &report.entries {
        o.say(format!("  {:<24} worst {:>12.4e}  {}", e.name, e.worst, if e.ok { "ok" } else { "FAIL" }));
    }
    o.say(format!("all residuals ok: {}", report.all_ok()));
    Ok(CertifyOutcome { output: o, report })
}
