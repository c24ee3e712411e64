use kfree_core::diffraction::{reciprocal_floor, Diffraction, Threshold};
use kfree_core::sieve::{build_sieve, g_weight, gcd, SieveTables};
use kfree_core::special::constants::precise_constants;
use kfree_core::special::constants_for_k;
use serde::{Deserialize, Serialize};

use crate::args::{Format, Level, VerifyArgs};
use crate::commands::{Env, Failed, Outcome};
use crate::output::{json, table};
use crate::CliError;

const QUICK_SIEVE: u64 = 1_000_000;
const FULL_SIEVE: u64 = 20_000_000;
const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub case: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Plan {
    ks: &'static [u32],
    max_n: u64,
    sandwich_eps: Vec<f64>,
    /// `None` uses fixed cutoffs, `Some(t)` grows them to tail `t`.
    resummation_tail: Option<f64>,
    cross_form_tail: Option<f64>,
    convolution_n: u64,
    convolution_a: u64,
    identity_ks: &'static [u32],
    monotone_c: bool,
}

impl Plan {
    fn for_level(level: Level) -> Self {
        match level {
            Level::Quick => Self {
                ks: &[2],
                max_n: 10,
                sandwich_eps: vec![0.9, 0.61, 0.45, 1.0 / 3.0, 0.27, 0.2, 0.137, 0.123, 0.105, 0.1],
                resummation_tail: None,
                cross_form_tail: None,
                convolution_n: 2000,
                convolution_a: 12,
                identity_ks: &[2],
                monotone_c: false,
            },
            Level::Full => Self {
                ks: &[2, 3],
                max_n: 50,
                // 25 log-spaced points in (1e-3, 0.9)
                sandwich_eps: (0..25).map(|i| 1.1e-3 * (0.85f64 / 1.1e-3).powf(f64::from(i) / 24.0)).collect(),
                resummation_tail: Some(1e-10),
                cross_form_tail: Some(1e-8),
                convolution_n: 10_000,
                convolution_a: 50,
                identity_ks: &[2, 3, 4, 5, 8, 10],
                monotone_c: true,
            },
        }
    }
}

fn check(suite: &str, case: String, passed: bool, detail: String) -> Check {
    Check {
        suite: suite.to_string(),
        case,
        passed,
        detail,
    }
}

fn resummation(d: &Diffraction<'_>, plan: &Plan, q_max: u64, out: &mut Vec<Check>) -> kfree_core::Result<()> {
    let ns: Vec<u64> = (1..=plan.max_n).collect();
    let thresholds: Vec<Threshold> = ns.iter().map(|&n| Threshold::Denominator(n)).collect();
    let (defs, target) = match plan.resummation_tail {
        Some(t) => (d.intensity_many_to_tail(&thresholds, q_max, t)?.0, t),
        None => (d.intensity_many(&thresholds, q_max)?, kfree_core::diffraction::DEFAULT_FACTORISED_TARGET),
    };
    for (&n, def) in ns.iter().zip(defs) {
        let via = d.ztilde_via_zk_target(n, None, None, target)?.value;
        let gap = (def.value - via.value).abs();
        out.push(check(
            "re-summation",
            format!("k={} N={n}", d.k()),
            def.agrees_with(&via),
            format!("|definition - via_zk| = {gap:.3e}, tails {:.3e} + {:.3e}", def.tail, via.tail),
        ));
    }
    Ok(())
}

fn sandwich(d: &Diffraction<'_>, plan: &Plan, q_max: u64, out: &mut Vec<Check>) -> kfree_core::Result<()> {
    let direct = d.z_direct_many(&plan.sandwich_eps, Some(q_max))?;
    let mut ns: Vec<u64> = plan
        .sandwich_eps
        .iter()
        .flat_map(|&e| {
            let n = reciprocal_floor(e);
            [n, n + 1]
        })
        .collect();
    ns.sort_unstable();
    ns.dedup();
    let tildes = d.ztilde_definition_many(&ns, Some(q_max))?;
    let at = |n: u64| tildes[ns.binary_search(&n).expect("requested")].value;
    for (&eps, z) in plan.sandwich_eps.iter().zip(&direct) {
        let n = reciprocal_floor(eps);
        let (lower, upper, z) = (at(n + 1), at(n), z.value);
        let ok = lower.lower() <= z.upper() && z.lower() <= upper.upper();
        out.push(check(
            "sandwich",
            format!("k={} eps={eps:.6} N={n}", d.k()),
            ok,
            format!("{:.12e} <= {:.12e} <= {:.12e}", lower.value, z.value, upper.value),
        ));
    }
    Ok(())
}

fn cross_form(d: &Diffraction<'_>, plan: &Plan, out: &mut Vec<Check>) -> kfree_core::Result<()> {
    for c in [1u64, 2, 3, 5] {
        let def = match plan.cross_form_tail {
            Some(t) => d.zk_definition_to_tail(c, t)?.0,
            None => d.zk_definition(c, 100_000, 300)?,
        };
        let fac = d.zk_factorised(c, None)?;
        out.push(check(
            "cross-form",
            format!("k={} c={c}", d.k()),
            def.agrees_with(&fac),
            format!(
                "|definition - factorised| = {:.3e}, tails {:.3e} + {:.3e}",
                (def.value - fac.value).abs(),
                def.tail,
                fac.tail
            ),
        ));
    }
    Ok(())
}

fn convolution(sieve: &SieveTables, plan: &Plan, out: &mut Vec<Check>) -> kfree_core::Result<()> {
    for a in 1..=plan.convolution_a {
        let mut first_bad = None;
        for n in 1..=plan.convolution_n {
            let squarefree = sieve.mobius(n)? != 0;
            let lhs = i64::from(squarefree && gcd(n, a) == 1);
            let mut rhs = 0i64;
            let mut c = 1;
            while c * c <= n {
                if n % c == 0 {
                    for (x, y) in [(c, n / c), (n / c, c)] {
                        rhs += i64::from(g_weight(x, a)) * i64::from(sieve.mobius(y)?).pow(2);
                        if c * c == n {
                            break;
                        }
                    }
                }
                c += 1;
            }
            if lhs != rhs {
                first_bad = Some((n, lhs, rhs));
                break;
            }
        }
        let (passed, detail) = match first_bad {
            None => (true, format!("exact for n <= {}", plan.convolution_n)),
            Some((n, l, r)) => (false, format!("n={n}: {l} != {r}")),
        };
        out.push(check("convolution", format!("a={a}"), passed, detail));
    }
    Ok(())
}

fn constant_identity(plan: &Plan, out: &mut Vec<Check>) -> kfree_core::Result<()> {
    for &k in plan.identity_ks {
        let (gap, tail) = precise_constants(k, 1e-20)?.identity_gap();
        out.push(check(
            "constant-identity",
            format!("k={k}"),
            gap <= IDENTITY_TOLERANCE,
            format!("gap {gap:.3e}, tails {tail:.3e}"),
        ));
    }
    if plan.monotone_c {
        let cs = (2..=12)
            .map(|k| constants_for_k(k, 1e-20).map(|c| c.c_k.value))
            .collect::<kfree_core::Result<Vec<f64>>>()?;
        let decreasing = cs.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        let quarter = (cs[10] - 1.0).abs() < (cs[0] - 1.0).abs() / 4.0;
        out.push(check(
            "c_k-decay",
            "k=2..12".into(),
            decreasing && quarter,
            format!("|c_2 - 1| = {:.6}, |c_12 - 1| = {:.6}", cs[0] - 1.0, cs[10] - 1.0),
        ));
    }
    Ok(())
}

pub fn run(env: &Env, a: &VerifyArgs) -> Outcome {
    let plan = Plan::for_level(a.level);
    let size = match a.level {
        Level::Quick => QUICK_SIEVE,
        Level::Full => FULL_SIEVE,
    };
    if size > env.sieve_limit {
        return Err(CliError::Resource(format!("needs a sieve up to {size}, above --sieve-limit {}", env.sieve_limit)).into());
    }
    let sieve = build_sieve(size)?;
    let q_max = QUICK_SIEVE;
    let mut checks = Vec::new();
    for &k in plan.ks {
        let d = Diffraction::new(k, &sieve)?;
        resummation(&d, &plan, q_max, &mut checks)?;
        sandwich(&d, &plan, q_max, &mut checks)?;
        if k == 2 {
            cross_form(&d, &plan, &mut checks)?;
        }
    }
    convolution(&sieve, &plan, &mut checks)?;
    constant_identity(&plan, &mut checks)?;

    let report = VerifyReport {
        level: match a.level {
            Level::Quick => "quick",
            Level::Full => "full",
        }
        .into(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    let text = match env.format_or(Format::Table) {
        Format::Json => json(&report),
        Format::Table | Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        if c.passed { "PASS" } else { "FAIL" }.to_string(),
                        c.suite.clone(),
                        c.case.clone(),
                        c.detail.clone(),
                    ]
                })
                .collect();
            if env.format == Some(Format::Csv) {
                crate::output::csv(&["status", "suite", "case", "detail"], &rows)
            } else {
                table(&["status", "suite", "case", "detail"], &rows)
            }
        }
    };
    match report.checks.iter().find(|c| !c.passed) {
        None => Ok(text),
        Some(bad) => Err(Failed {
            report: Some(text),
            error: CliError::Assertion(format!("{} failed ({}): {}", bad.suite, bad.case, bad.detail)),
        }),
    }
}
