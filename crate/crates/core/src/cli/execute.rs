//! Runs a validated configuration and writes its report.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use super::config::{Command, Format, RunConfig};
use super::report::{self, inequality_table, Cell, Table};
use crate::fields::ScalarField;
use crate::geometry::{SphereSpec, SphericalCap};
use crate::growth::{self, ProfileKind};
use crate::inequality::{self, InequalityReport, Prop1Options};
use crate::liouville::{self, AuditOptions, AuditStatus, AuditVerdict, ExceptionalSet, RadiiSequence};
use crate::quadrature::{ball_mean, sphere_mean};

#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Overrides the configured output path.
    pub output: Option<PathBuf>,
    pub no_timestamp: bool,
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// 0 when every check passed, 1 when a check failed.
    pub exit_code: i32,
    pub rendered: String,
    pub written_to: Option<PathBuf>,
    pub summary: Value,
}

struct Computed {
    table: Table,
    summary: Value,
    failed: bool,
}

pub fn execute(cfg: &RunConfig, opts: &ExecOptions) -> Result<Outcome> {
    let v = cfg.field();
    let computed = match cfg.command {
        Command::Mean => run_mean(cfg, &v)?,
        Command::Chain => reports(
            inequality::check_mean_chain(&v, cfg.geometry.big_r.unwrap_or_default(), &cfg.scheme)?,
            cfg,
        ),
        Command::Prop1 => {
            let g = &cfg.geometry;
            let probes = g.probes.clone().unwrap_or_else(|| vec![vec![0.0; v.dim().get()]]);
            let options = Prop1Options {
                t: g.t,
                ..Default::default()
            };
            reports(
                inequality::check_prop1(
                    &v,
                    g.r.unwrap_or_default(),
                    g.big_r.unwrap_or_default(),
                    &probes,
                    options,
                    &cfg.scheme,
                )?,
                cfg,
            )
        }
        Command::Prop2 => {
            let g = &cfg.geometry;
            let r = g.r.unwrap_or_default();
            let sphere = SphereSpec::centered(v.dim(), r)?;
            let caps = g
                .caps
                .iter()
                .flatten()
                .map(|c| SphericalCap::new(sphere.clone(), c.axis.clone(), c.half_angle))
                .collect::<Result<Vec<_>, _>>()?;
            let rep = inequality::check_prop2(
                &v,
                &caps,
                g.big_r.unwrap_or_default(),
                &cfg.scheme,
                cfg.debug_rhs_scale.unwrap_or(1.0),
            )?;
            reports(vec![rep], cfg)
        }
        Command::Harnack => {
            let g = &cfg.geometry;
            reports(
                inequality::check_harnack(&v, g.big_r.unwrap_or_default(), g.probes.as_deref().unwrap_or_default())?,
                cfg,
            )
        }
        Command::Order => run_order(cfg, &v)?,
        Command::Audit => run_audit(cfg, &v)?,
        Command::Slices => run_slices(cfg, &v)?,
    };

    let timestamp = (!opts.no_timestamp).then(report::timestamp_line);
    let command = serde_json::to_value(cfg.command)?;
    let rendered = match cfg.format {
        Format::Csv => report::render_csv(&computed.table, timestamp.as_deref())?,
        Format::Json => report::render_json(
            command.as_str().unwrap_or_default(),
            serde_json::to_value(cfg)?,
            &computed.table,
            computed.summary.clone(),
            timestamp.as_deref(),
        ),
    };
    let path = opts.output.clone().or_else(|| cfg.output_path.clone());
    if let Some(p) = &path {
        report::write_atomic(p, rendered.as_bytes()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Outcome {
        exit_code: i32::from(computed.failed),
        rendered,
        written_to: path,
        summary: computed.summary,
    })
}

fn reports(mut reps: Vec<InequalityReport>, cfg: &RunConfig) -> Computed {
    let spec = serde_json::to_value(&cfg.field_spec).unwrap_or(Value::Null);
    for r in &mut reps {
        r.inputs.insert("field_spec".into(), spec.clone());
    }
    let failed = reps.iter().any(|r| !r.passed);
    let passed = reps.iter().filter(|r| r.passed).count();
    Computed {
        table: inequality_table(&reps),
        summary: json!({"checks": reps.len(), "passed": passed, "failed": reps.len() - passed}),
        failed,
    }
}

fn run_mean(cfg: &RunConfig, v: &ScalarField) -> Result<Computed> {
    let g = &cfg.geometry;
    let center = g.center.clone().unwrap_or_else(|| vec![0.0; v.dim().get()]);
    let mut table = Table::new(vec![
        "r",
        "center",
        "sphere_mean",
        "sphere_error",
        "ball_mean",
        "ball_error",
        "method",
        "samples",
        "seed",
    ]);
    for &r in g.radii.iter().flatten() {
        let s = sphere_mean(v, &center, r, &cfg.scheme)?;
        let b = ball_mean(v, &center, r, &cfg.scheme)?;
        table.push(vec![
            r.into(),
            Cell::Json(json!(center)),
            s.value.into(),
            s.error_bound.into(),
            b.value.into(),
            b.error_bound.into(),
            Cell::Text(serde_json::to_value(s.method)?.as_str().unwrap_or_default().to_string()),
            s.samples.into(),
            s.seed.map_or(Cell::Empty, |x| Cell::Text(x.to_string())),
        ]);
    }
    Ok(Computed {
        table,
        summary: json!({"field": v.label()}),
        failed: false,
    })
}

fn run_order(cfg: &RunConfig, v: &ScalarField) -> Result<Computed> {
    let g = &cfg.geometry;
    let radii = g
        .radii
        .clone()
        .unwrap_or_else(|| growth::geometric_radii(g.r1.unwrap_or(2.0), g.rho.unwrap_or(2.0), g.count.unwrap_or(16)));
    let kind = g.profile.unwrap_or(ProfileKind::SphereSup);
    let est = growth::estimate_order_with(
        v,
        &radii,
        kind,
        &cfg.scheme,
        growth::default_sup_resolution(v.dim().get()),
    );
    let est = match est {
        Ok(e) => e,
        Err(growth::GrowthError::DegenerateProfile) => {
            let mut table = Table::new(vec!["r", "log_profile", "window_slope", "order_proxy", "finite_order"]);
            for r in &radii {
                table.push(vec![(*r).into(), 0.0.into(), Cell::Empty, 0.0.into(), true.into()]);
            }
            return Ok(Computed {
                table,
                summary: json!({"order_proxy": 0.0, "finite_order": true, "degenerate_profile": true}),
                failed: false,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let ceiling = g.order_ceiling.unwrap_or(10.0);
    let finite = growth::is_finite_order(&est, ceiling);
    let mut table = Table::new(vec!["r", "log_profile", "window_slope", "order_proxy", "finite_order"]);
    for (j, r) in est.radii_used.iter().enumerate() {
        table.push(vec![
            (*r).into(),
            est.log_profile[j].into(),
            est.slope_windows.get(j).map(|w| w.slope).into(),
            est.order_proxy.into(),
            finite.into(),
        ]);
    }
    Ok(Computed {
        table,
        summary: json!({
            "order_proxy": est.order_proxy,
            "finite_order": finite,
            "ceiling": ceiling,
            "profile_kind": kind,
            "slope_windows": est.slope_windows,
        }),
        failed: false,
    })
}

fn audit_inputs(cfg: &RunConfig, m: crate::geometry::Dim) -> Result<(ExceptionalSet, RadiiSequence)> {
    let g = &cfg.geometry;
    let q = g.q.unwrap_or(2.0);
    let seq = match (&g.radii, &g.raw_radii) {
        (Some(radii), _) => {
            let max_ratio = radii.windows(2).map(|w| w[1] / w[0]).fold(q, f64::max);
            RadiiSequence::new(radii.clone(), q, g.big_q.unwrap_or(max_ratio))?
        }
        (None, Some(raw)) => liouville::thin_to_ratio_window(raw, q, g.big_q.unwrap_or(q * q))?,
        (None, None) => unreachable!("validated"),
    };
    let radii = seq.radii().to_vec();
    let mut e = if let Some(rule) = &g.cap_rule {
        ExceptionalSet::single_caps(m, &radii, &rule.axis, |k, _| {
            (rule.scale / (k as f64).powf(rule.power)).min(PI)
        })?
    } else if let Some(per) = &g.caps_per_radius {
        if per.len() != radii.len() {
            anyhow::bail!("caps_per_radius has {} entries for {} radii", per.len(), radii.len());
        }
        let mut fam = Vec::with_capacity(radii.len());
        for (r, caps) in radii.iter().zip(per) {
            let sphere = SphereSpec::centered(m, *r)?;
            let caps = caps
                .iter()
                .map(|c| SphericalCap::new(sphere.clone(), c.axis.clone(), c.half_angle))
                .collect::<Result<Vec<_>, _>>()?;
            fam.push((*r, caps));
        }
        ExceptionalSet::new(m, fam, true)?
    } else {
        ExceptionalSet::empty(m, &radii)
    };
    e.include_shells = g.include_shells.unwrap_or(true);
    Ok((e, seq))
}

const AUDIT_COLUMNS: [&str; 18] = [
    "k",
    "radius",
    "epsilon",
    "factor",
    "s_v",
    "s_v_error",
    "s_v_next",
    "bound",
    "tolerance",
    "row_passed",
    "hypothesis_holds",
    "off_cap_sup",
    "off_cap_probes",
    "covered",
    "violated",
    "level",
    "q",
    "status",
];

fn status_text(s: AuditStatus) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn audit_rows(verdict: &AuditVerdict, seq: &RadiiSequence) -> Vec<Vec<Cell>> {
    let mut rows = Vec::new();
    for (k, &r) in seq.radii().iter().enumerate() {
        let rec = verdict.recurrence_table.get(k);
        let off = verdict
            .off_cap_table
            .iter()
            .find(|o| o.radius == r)
            .expect("one off-cap row per audit sphere");
        let s_v = rec
            .map(|x| x.s_v)
            .or_else(|| verdict.recurrence_table.last().map(|x| x.s_v_next));
        rows.push(vec![
            (k + 1).into(),
            r.into(),
            verdict.epsilon.values[k].into(),
            rec.map(|x| x.factor).into(),
            s_v.into(),
            rec.map(|x| x.s_v_error).into(),
            rec.map(|x| x.s_v_next).into(),
            rec.map(|x| x.bound).into(),
            rec.map(|x| x.tolerance).into(),
            rec.map_or(Cell::Empty, |x| x.passed.into()),
            rec.map_or(Cell::Empty, |x| x.hypothesis_holds.into()),
            off.sup_off_cap.into(),
            off.off_cap_probes.into(),
            off.covered.into(),
            off.violated.into(),
            verdict.level.into(),
            seq.q().into(),
            status_text(verdict.status).into(),
        ]);
    }
    rows
}

fn audit_options(cfg: &RunConfig) -> AuditOptions {
    AuditOptions {
        scheme: Some(cfg.scheme),
        ..Default::default()
    }
}

fn run_audit(cfg: &RunConfig, v: &ScalarField) -> Result<Computed> {
    let (e, seq) = audit_inputs(cfg, v.dim())?;
    let ceiling = cfg.geometry.order_ceiling.unwrap_or(10.0);
    let verdict = liouville::run_liouville_audit(v, &e, &seq, cfg.geometry.level, ceiling, &audit_options(cfg))?;
    let mut table = Table::new(AUDIT_COLUMNS.to_vec());
    for row in audit_rows(&verdict, &seq) {
        table.push(row);
    }
    Ok(Computed {
        table,
        failed: verdict.status == AuditStatus::RecurrenceViolated,
        summary: json!({"radii": seq.radii(), "Q": seq.big_q(), "verdict": verdict}),
    })
}

fn run_slices(cfg: &RunConfig, v: &ScalarField) -> Result<Computed> {
    let g = &cfg.geometry;
    let directions: Vec<Vec<Complex64>> = g
        .directions
        .iter()
        .flatten()
        .map(|d| d.iter().map(|c| c.value()).collect())
        .collect();
    let m2 = crate::geometry::Dim::new(2)?;
    let (e, seq) = audit_inputs(cfg, m2)?;
    let ceiling = g.order_ceiling.unwrap_or(10.0);
    let audit = liouville::audit_complex_slices(v, &directions, &e, &seq, g.level, ceiling, &audit_options(cfg))?;
    let mut columns = vec!["slice", "direction"];
    columns.extend_from_slice(&AUDIT_COLUMNS);
    columns.extend_from_slice(&["slice_constant", "combined"]);
    let mut table = Table::new(columns);
    for (i, verdict) in audit.verdicts.iter().enumerate() {
        let dir: Vec<[f64; 2]> = directions[i].iter().map(|c| [c.re, c.im]).collect();
        for row in audit_rows(verdict, &seq) {
            let mut full = vec![(i + 1).into(), Cell::Json(json!(dir))];
            full.extend(row);
            full.push(audit.slice_constants[i].into());
            full.push(status_text(audit.combined).into());
            table.push(full);
        }
    }
    Ok(Computed {
        table,
        failed: audit.combined == AuditStatus::RecurrenceViolated,
        summary: json!({"radii": seq.radii(), "Q": seq.big_q(), "audit": audit}),
    })
}
