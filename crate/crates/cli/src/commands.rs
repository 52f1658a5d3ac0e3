use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use macicmac::detmodel::{achieved_gdof, build_allocation, simulate, timeshare_schedule};
use macicmac::dmeval::{gap_shift_report, DmInstance};
use macicmac::fme::{
    projection_verdict, random_chain_rule_table, random_structured_table, seven_family_differs, var_names,
    LinearSystem, ProjectionVerdict,
};
use macicmac::gaussian::{gap_report, inner_table, outer_table, GapOptions, GaussianChannel};
use macicmac::gdof::{alpha_grid, dsym_closed_form, dsym_curve, dsym_region, timeshare_curve};
use macicmac::rational::{format_fraction, to_f64, Rational};
use macicmac::region::{build_generic_region, SetFunctionTable};
use macicmac::subsets::Cell;
use macicmac::Polytope;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::*;

/// Files to emit and an optional property-violation message.
pub struct Outcome {
    pub files: Vec<(&'static str, String)>,
    pub violation: Option<String>,
}

impl Outcome {
    fn single(name: &'static str, body: String, violation: Option<String>) -> Self {
        Outcome {
            files: vec![(name, body)],
            violation,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Region(a) => region(a),
        Command::Gap(a) => gap(a),
        Command::GdofCurve(a) => gdof_curve(a),
        Command::TimeshareCurve(a) => timeshare(a),
        Command::FmeVerify(a) => fme_verify(a),
        Command::DmVerify(a) => dm_verify(a),
        Command::DetSim(a) => det_sim(a),
    }
}

fn export_region(p: &Polytope, ka: usize, kb: usize, pruned: bool, vertices: bool) -> Result<Value> {
    let p = if pruned { p.pruned() } else { p.clone() };
    let names: Vec<String> = var_names(ka, kb).into_iter().take(ka + kb).collect();
    let sys = LinearSystem::new(names.clone(), p.inequalities.clone())?;
    let rows: Vec<Value> = p
        .inequalities
        .iter()
        .map(|q| {
            json!({
                "coeffs": q.coeffs.iter().map(format_fraction).collect::<Vec<_>>(),
                "rhs": format_fraction(&q.rhs),
                "rhs_decimal": to_f64(&q.rhs),
                "text": sys.render(q),
            })
        })
        .collect();
    let mut out = json!({ "variables": names, "inequalities": rows });
    if vertices {
        let vs: Vec<Value> = p
            .vertices()?
            .iter()
            .map(|v| {
                json!({
                    "exact": v.0.iter().map(format_fraction).collect::<Vec<_>>(),
                    "decimal": v.to_f64(),
                })
            })
            .collect();
        out["vertices"] = Value::Array(vs);
    }
    Ok(out)
}

fn region(a: &RegionArgs) -> Result<Outcome> {
    let mut out = serde_json::Map::new();
    let tables: Vec<(&str, SetFunctionTable)> = match (&a.channel, &a.table) {
        (Some(path), _) => {
            let ch = GaussianChannel::from_json(&read(path)?)?;
            out.insert("channel".into(), serde_json::from_str(&ch.to_json())?);
            let mut t = Vec::new();
            if a.which != Which::Outer {
                t.push(("inner", inner_table(&ch)?));
            }
            if a.which != Which::Inner {
                t.push(("outer", outer_table(&ch)?));
            }
            t
        }
        (None, Some(path)) => vec![("table", SetFunctionTable::from_json(&read(path)?)?)],
        (None, None) => bail!(macicmac::Error::PreconditionViolated(
            "need --channel or --table".into()
        )),
    };
    for (name, t) in tables {
        let p = build_generic_region(&t)?;
        let mut v = export_region(&p, t.ka(), t.kb(), a.pruned, !a.no_vertices)?;
        v["table"] = serde_json::from_str(&t.to_json())?;
        out.insert(name.into(), v);
    }
    Ok(Outcome::single("region.json", pretty(&Value::Object(out)), None))
}

fn gap(a: &GapArgs) -> Result<Outcome> {
    let opts = GapOptions {
        mask_tol: a.mask_tol,
        vertex_tol: a.vertex_tol,
        vertex_max_dim: a.vertex_max_dim,
    };
    let channels = match (&a.channel, a.random) {
        (Some(path), _) => vec![GaussianChannel::from_json(&read(path)?)?],
        (None, Some(n)) => {
            if a.max_k == 0 || a.db_lo > a.db_hi {
                bail!(macicmac::Error::PreconditionViolated(
                    "need max-K >= 1 and db-lo <= db-hi".into()
                ));
            }
            let mut r = rng(a.seed);
            (0..n)
                .map(|_| GaussianChannel::random(&mut r, a.max_k, a.db_lo, a.db_hi))
                .collect()
        }
        (None, None) => bail!(macicmac::Error::PreconditionViolated(
            "need --channel or --random".into()
        )),
    };
    let mut instances = Vec::new();
    let mut max_gap = [f64::NEG_INFINITY; 4];
    let mut min_gap = [f64::INFINITY; 4];
    let (mut upper_fail, mut lower_fail, mut vertex_checked, mut vertex_fail, mut contain_fail, mut row_fail) =
        (0, 0, 0, 0, 0, 0);
    for (i, ch) in channels.iter().enumerate() {
        let r = gap_report(ch, &opts)?;
        for f in 0..4 {
            max_gap[f] = max_gap[f].max(r.max_gap[f]);
            min_gap[f] = min_gap[f].min(r.min_gap[f]);
        }
        upper_fail += usize::from(!r.masks_upper_ok(opts.mask_tol));
        lower_fail += usize::from(r.min_gap.iter().any(|&g| g < -opts.mask_tol));
        vertex_checked += usize::from(r.vertex_shift_ok.is_some());
        vertex_fail += usize::from(r.vertex_shift_ok == Some(false));
        contain_fail += usize::from(!r.outer_contains_inner);
        row_fail += usize::from(r.worst_row_excess > 0.0);
        instances.push(json!({
            "index": i,
            "channel": serde_json::from_str::<Value>(&ch.to_json())?,
            "report": r,
        }));
    }
    let bad = upper_fail + lower_fail + vertex_fail + contain_fail + row_fail;
    let summary = json!({
        "instances": channels.len(),
        "max_gap": max_gap,
        "min_gap": min_gap,
        "upper_bound_failures": upper_fail,
        "lower_bound_failures": lower_fail,
        "outer_contains_inner_failures": contain_fail,
        "row_excess_failures": row_fail,
        "vertex_checked": vertex_checked,
        "vertex_failures": vertex_fail,
    });
    let violation = (bad > 0).then(|| format!("gap properties violated: {summary}"));
    let body = json!({ "options": opts, "summary": summary, "instances": instances });
    Ok(Outcome::single("gap.json", pretty(&body), violation))
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn dec(r: &Rational) -> String {
    format!("{}", to_f64(r))
}

fn gdof_curve(a: &CurveArgs) -> Result<Outcome> {
    if a.k.is_empty() || a.k.contains(&0) {
        bail!(macicmac::Error::PreconditionViolated(
            "K values must be positive".into()
        ));
    }
    let grid = alpha_grid(&a.alpha_max, &a.step)?;
    let rows = dsym_curve(&a.k, &grid)?;
    let mut mismatches = Vec::new();
    let mut out = Vec::new();
    for r in &rows {
        if r.k >= 2 && dsym_closed_form(r.k, &r.alpha)? != r.dsym {
            mismatches.push(format!("K={} alpha={}", r.k, r.alpha));
        }
        out.push(vec![
            r.k.to_string(),
            dec(&r.alpha),
            format_fraction(&r.alpha),
            dec(&r.dsym),
            format_fraction(&r.dsym),
            dec(&r.sum_dsym),
            format_fraction(&r.sum_dsym),
        ]);
    }
    let header = [
        "K",
        "alpha",
        "alpha_exact",
        "dsym",
        "dsym_exact",
        "sum_dsym",
        "sum_dsym_exact",
    ];
    let violation =
        (!mismatches.is_empty()).then(|| format!("region and closed form disagree at {}", mismatches.join(", ")));
    Ok(Outcome::single("gdof_curve.csv", csv_text(&header, out)?, violation))
}

fn timeshare(a: &TimeshareArgs) -> Result<Outcome> {
    let grid = alpha_grid(&a.alpha_max, &a.step)?;
    let rows = timeshare_curve(&grid)?;
    let mut above = Vec::new();
    let out = rows
        .iter()
        .map(|r| {
            if r.timeshare_sum > r.superposition_sum {
                above.push(format_fraction(&r.alpha));
            }
            vec![
                dec(&r.alpha),
                format_fraction(&r.alpha),
                dec(&r.d1),
                format_fraction(&r.d1),
                dec(&r.timeshare_sum),
                format_fraction(&r.timeshare_sum),
                dec(&r.superposition_sum),
                format_fraction(&r.superposition_sum),
                r.is_tight().to_string(),
            ]
        })
        .collect();
    let header = [
        "alpha",
        "alpha_exact",
        "d1",
        "d1_exact",
        "timeshare_sum",
        "timeshare_sum_exact",
        "superposition_sum",
        "superposition_sum_exact",
        "tight",
    ];
    let violation = (!above.is_empty()).then(|| format!("time sharing beats superposition at {}", above.join(", ")));
    Ok(Outcome::single(
        "timeshare_curve.csv",
        csv_text(&header, out)?,
        violation,
    ))
}

fn verdict_json(v: &ProjectionVerdict, names: &[String]) -> Result<Value> {
    let sys = |q: &macicmac::LinearInequality| -> Result<String> {
        Ok(LinearSystem::new(names.to_vec(), vec![q.clone()])?.render(q))
    };
    Ok(match v {
        ProjectionVerdict::Equal => json!({ "verdict": "equal" }),
        ProjectionVerdict::ProjectionLarger(q) => json!({ "verdict": "projection_larger", "row": sys(q)? }),
        ProjectionVerdict::ProjectionSmaller(q) => json!({ "verdict": "projection_smaller", "row": sys(q)? }),
    })
}

fn fme_verify(a: &FmeArgs) -> Result<Outcome> {
    let tables: Vec<SetFunctionTable> = match &a.table {
        Some(path) => vec![SetFunctionTable::from_json(&read(path)?)?],
        None => {
            let mut r = rng(a.seed);
            (0..a.trials)
                .map(|_| match a.tables {
                    TableKind::Structured => random_structured_table(&mut r, a.ka, a.kb),
                    TableKind::ChainRule => random_chain_rule_table(&mut r, a.ka, a.kb),
                })
                .collect::<macicmac::Result<_>>()?
        }
    };
    let mut failures = Vec::new();
    let mut tighter = 0;
    for (i, t) in tables.iter().enumerate() {
        let names: Vec<String> = var_names(t.ka(), t.kb()).into_iter().take(t.ka() + t.kb()).collect();
        let v = projection_verdict(t)?;
        tighter += usize::from(seven_family_differs(t)?);
        if v != ProjectionVerdict::Equal {
            let mut f = verdict_json(&v, &names)?;
            f["trial"] = json!(i);
            f["table"] = serde_json::from_str(&t.to_json())?;
            failures.push(f);
        }
    }
    let body = json!({
        "trials": tables.len(),
        "passed": tables.len() - failures.len(),
        "failed": failures.len(),
        "nine_family_tighter_than_seven": tighter,
        "failures": failures,
    });
    let violation = (!failures.is_empty()).then(|| format!("{} projection mismatches", failures.len()));
    Ok(Outcome::single("fme_verify.json", pretty(&body), violation))
}

fn dm_verify(a: &DmArgs) -> Result<Outcome> {
    let instances = match &a.instance {
        Some(path) => vec![DmInstance::from_json(&read(path)?)?],
        None => {
            if a.max_k == 0 {
                bail!(macicmac::Error::PreconditionViolated("max-K must be positive".into()));
            }
            let mut r = rng(a.seed);
            (0..a.trials).map(|_| DmInstance::random(&mut r, a.max_k)).collect()
        }
    };
    let mut rows = Vec::new();
    let mut failed = 0;
    for (i, inst) in instances.iter().enumerate() {
        let r = gap_shift_report(&inst.distribution, &inst.channel)?;
        let ok = r.contained() && r.chain_rule_ok;
        failed += usize::from(!ok);
        rows.push(json!({
            "index": i,
            "users": [inst.distribution.k(Cell::A), inst.distribution.k(Cell::B)],
            "ok": ok,
            "report": r,
        }));
    }
    let body = json!({
        "trials": instances.len(),
        "passed": instances.len() - failed,
        "failed": failed,
        "instances": rows,
    });
    let violation = (failed > 0).then(|| format!("{failed} instances fail the gap-shift containment"));
    Ok(Outcome::single("dm_verify.json", pretty(&body), violation))
}

fn det_sim(a: &DetArgs) -> Result<Outcome> {
    let mut r = rng(a.seed);
    if a.timeshare {
        let s = timeshare_schedule(&a.alpha, a.q)?;
        let report = s.simulate(&mut r, a.uses)?;
        let superposition = dsym_region(2, &a.alpha)? * Rational::from_integer(2.into());
        let violation = (report.bit_errors > 0).then(|| format!("{} bit errors", report.bit_errors));
        let body = json!({
            "schedule": s,
            "superposition_cell_sum": format_fraction(&superposition),
            "report": report,
        });
        return Ok(Outcome::single("det_sim.json", pretty(&body), violation));
    }
    let alloc = build_allocation(a.k, &a.alpha, a.q)?;
    let report = simulate(&alloc, &mut r, a.uses)?;
    let expected = dsym_region(a.k, &a.alpha)?;
    let achieved = achieved_gdof(&alloc);
    let mut problems = Vec::new();
    if report.bit_errors > 0 {
        problems.push(format!("{} bit errors", report.bit_errors));
    }
    if achieved.iter().flatten().any(|d| *d != expected) {
        problems.push(format!("achieved GDoF differs from {}", format_fraction(&expected)));
    }
    let body = json!({
        "allocation": alloc,
        "achieved_gdof": achieved.iter().map(|c| c.iter().map(format_fraction).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "expected_dsym": format_fraction(&expected),
        "report": report,
    });
    let violation = (!problems.is_empty()).then(|| problems.join("; "));
    Ok(Outcome::single("det_sim.json", pretty(&body), violation))
}
