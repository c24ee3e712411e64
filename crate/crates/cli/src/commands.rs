use kfree_core::asymptotics::{
    fit_power_law, walfisz_residuals, weighted_residuals, zk_asymptotic_check, GridSpec, PowerLawFit, ResidualSeries,
};
use kfree_core::diffraction::{Cutoffs, Diffraction, IntensityResult, Threshold};
use kfree_core::sieve::{build_sieve, SieveConfig, SieveTables};
use kfree_core::special::constants::precise_constants;
use kfree_core::special::{constants_for_k, TailBounded};
use kfree_core::{Error, MAX_K};
use serde::{Deserialize, Serialize};

use crate::args::{
    ConstantsArgs, DecayArgs, Format, GridArgs, IntensityArgs, MethodArg, ScanArgs, WalfiszArgs, WeightedArgs,
};
use crate::output::{csv, json, sci, table};
use crate::CliError;

/// Smallest sieve ever built; retries grow it on demand.
const MIN_SIEVE: u64 = 1 << 16;

/// Digits printed for the full-precision constants.
const CONSTANT_DIGITS: usize = 40;

pub struct Env {
    pub sieve_limit: u64,
    pub format: Option<Format>,
}

/// A command error, possibly with a report to write before exiting.
pub struct Failed {
    pub report: Option<String>,
    pub error: CliError,
}

impl From<CliError> for Failed {
    fn from(error: CliError) -> Self {
        Self { report: None, error }
    }
}

impl From<Error> for Failed {
    fn from(e: Error) -> Self {
        CliError::from(e).into()
    }
}

pub type Outcome = Result<String, Failed>;

impl Env {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    /// Runs `f` against a sieve of at least `initial`, rebuilding when `f`
    /// reports that it needs a larger one. Never exceeds `--sieve-limit`.
    pub fn with_sieve<T>(&self, initial: u64, f: impl Fn(&SieveTables) -> kfree_core::Result<T>) -> Result<T, CliError> {
        let mut size = initial.max(MIN_SIEVE.min(self.sieve_limit));
        loop {
            if size > self.sieve_limit {
                return Err(CliError::Resource(format!(
                    "needs a sieve up to {size}, above --sieve-limit {}",
                    self.sieve_limit
                )));
            }
            let sieve = build_sieve(size)?;
            match f(&sieve) {
                Err(Error::SieveTooSmall { needed, .. }) if needed > size => size = needed,
                other => return other.map_err(CliError::from),
            }
        }
    }
}

pub fn check_k(k: u32) -> Result<(), CliError> {
    if k < 2 {
        return Err(CliError::Usage("k must be ≥ 2".into()));
    }
    if k > MAX_K {
        return Err(CliError::Usage(format!("k must be ≤ {MAX_K}")));
    }
    Ok(())
}

pub fn parse_grid(spec: &str, spacing: &GridArgs) -> Result<GridSpec, CliError> {
    let mut grid: GridSpec = spec.parse()?;
    if spacing.log {
        grid.log = true;
    }
    if spacing.lin {
        grid.log = false;
    }
    Ok(GridSpec::new(grid.start, grid.stop, grid.points, grid.log)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantDigits {
    pub xi_k: String,
    pub gamma_k: String,
    pub c_k: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub k: u32,
    pub xi_k: TailBounded,
    pub gamma_k: TailBounded,
    pub c_k: TailBounded,
    pub digits: ConstantDigits,
}

pub fn constants(env: &Env, a: &ConstantsArgs) -> Outcome {
    check_k(a.k)?;
    if !(a.tail > 0.0 && a.tail.is_finite()) {
        return Err(CliError::Usage(format!("--tail must be positive, got {}", a.tail)).into());
    }
    let pc = precise_constants(a.k, a.tail)?;
    let c = pc.to_f64();
    let record = ConstantsRecord {
        k: a.k,
        xi_k: c.xi_k,
        gamma_k: c.gamma_k,
        c_k: c.c_k,
        digits: ConstantDigits {
            xi_k: pc.xi.digits(CONSTANT_DIGITS),
            gamma_k: pc.gamma.digits(CONSTANT_DIGITS),
            c_k: pc.c.digits(CONSTANT_DIGITS),
        },
    };
    let rows: Vec<Vec<String>> = [
        ("xi_k", c.xi_k, &record.digits.xi_k),
        ("gamma_k", c.gamma_k, &record.digits.gamma_k),
        ("c_k", c.c_k, &record.digits.c_k),
    ]
    .into_iter()
    .map(|(name, v, d)| vec![a.k.to_string(), name.to_string(), sci(v.value), sci(v.tail), d.clone()])
    .collect();
    let header = ["k", "name", "value", "tail", "digits"];
    Ok(match env.format_or(Format::Json) {
        Format::Json => json(&record),
        Format::Csv => csv(&header, &rows),
        Format::Table => table(&header, &rows),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZkMethod {
    Factorised,
    Definition,
}

/// `z_k(c)` with the cutoffs used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZkRecord {
    pub k: u32,
    pub c: u64,
    pub value: TailBounded,
    pub method: ZkMethod,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_max: Option<u64>,
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn intensity_rows(r: &IntensityResult) -> Vec<Vec<String>> {
    vec![vec![
        r.k.to_string(),
        r.epsilon.map(sci).unwrap_or_default(),
        opt(r.n),
        sci(r.value.value),
        sci(r.value.tail),
        r.method.to_string(),
        opt(r.cutoffs.q_max),
        opt(r.cutoffs.t_max),
        opt(r.cutoffs.b_max),
    ]]
}

const INTENSITY_HEADER: [&str; 9] = ["k", "epsilon", "N", "Z", "tail", "method", "q_max", "t_max", "b_max"];

pub fn intensity(env: &Env, a: &IntensityArgs) -> Outcome {
    check_k(a.k)?;
    if let Some(t) = a.tail {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tail must be positive, got {t}")).into());
        }
    }
    if let Some(c) = a.c {
        return zk_point(env, a, c);
    }
    let result = if let Some(eps) = a.eps {
        let method = a.method.unwrap_or(MethodArg::Direct);
        if method != MethodArg::Direct {
            return Err(CliError::Usage("--eps goes with --method direct; use --n for the other methods".into()).into());
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Usage(format!("epsilon must lie in (0, 1), got {eps}")).into());
        }
        direct_point(env, a, eps)?
    } else {
        let n = a.n.expect("clap requires one of eps, n, c");
        if n == 0 {
            return Err(CliError::Usage("N must be at least 1".into()).into());
        }
        match a.method.unwrap_or(MethodArg::Definition) {
            MethodArg::Definition => definition_point(env, a, n)?,
            MethodArg::ViaZk => {
                let target = a.tail.unwrap_or(kfree_core::diffraction::DEFAULT_FACTORISED_TARGET);
                env.with_sieve(MIN_SIEVE, |s| {
                    Diffraction::new(a.k, s)?.ztilde_via_zk_target(n, a.b_max, a.t_max, target)
                })?
            }
            _ => return Err(CliError::Usage("--n goes with --method definition or via-zk".into()).into()),
        }
    };
    if let Some(t) = a.tail {
        if result.value.tail > t {
            return Err(CliError::Resource(format!("tail {:e} is above the requested {t:e}", result.value.tail)).into());
        }
    }
    Ok(match env.format_or(Format::Json) {
        Format::Json => json(&result),
        Format::Csv => csv(&INTENSITY_HEADER, &intensity_rows(&result)),
        Format::Table => table(&INTENSITY_HEADER, &intensity_rows(&result)),
    })
}

fn direct_point(env: &Env, a: &IntensityArgs, eps: f64) -> Result<IntensityResult, CliError> {
    if let Some(target) = a.tail.filter(|_| a.q_max.is_none()) {
        let start = kfree_core::diffraction::MIN_DEFAULT_Q_MAX.max((100.0 / eps).ceil() as u64);
        let limit = env.sieve_limit;
        return env.with_sieve(start.min(limit), |s| {
            let d = Diffraction::new(a.k, s)?;
            // the sieve is regrown below, so ask for it explicitly at the cap
            let (mut values, q_max) = match d.intensity_many_to_tail(&[Threshold::Epsilon(eps)], start, target) {
                Err(Error::CutoffCap { needed, .. }) if s.limit() < limit => {
                    return Err(Error::SieveTooSmall {
                        needed: needed.min(limit),
                        limit: s.limit(),
                    })
                }
                other => other?,
            };
            Ok(IntensityResult {
                k: a.k,
                epsilon: Some(eps),
                n: None,
                value: values.remove(0),
                method: kfree_core::diffraction::Method::DirectBmp,
                cutoffs: Cutoffs {
                    q_max: Some(q_max),
                    ..Default::default()
                },
            })
        });
    }
    let initial = a
        .q_max
        .unwrap_or_else(|| kfree_core::diffraction::MIN_DEFAULT_Q_MAX.max((100.0 / eps).ceil() as u64));
    env.with_sieve(initial, |s| Diffraction::new(a.k, s)?.z_direct(eps, a.q_max))
}

fn definition_point(env: &Env, a: &IntensityArgs, n: u64) -> Result<IntensityResult, CliError> {
    let default_q = kfree_core::diffraction::MIN_DEFAULT_Q_MAX.max(n.saturating_mul(100));
    if let Some(target) = a.tail.filter(|_| a.q_max.is_none()) {
        let limit = env.sieve_limit;
        return env.with_sieve(default_q.min(limit), |s| {
            let d = Diffraction::new(a.k, s)?;
            let (mut values, q_max) = match d.intensity_many_to_tail(&[Threshold::Denominator(n)], default_q, target) {
                Err(Error::CutoffCap { needed, .. }) if s.limit() < limit => {
                    return Err(Error::SieveTooSmall {
                        needed: needed.min(limit),
                        limit: s.limit(),
                    })
                }
                other => other?,
            };
            Ok(IntensityResult {
                k: a.k,
                epsilon: None,
                n: Some(n),
                value: values.remove(0),
                method: kfree_core::diffraction::Method::ZtildeDefinition,
                cutoffs: Cutoffs {
                    q_max: Some(q_max),
                    ..Default::default()
                },
            })
        });
    }
    env.with_sieve(a.q_max.unwrap_or(default_q), |s| {
        Diffraction::new(a.k, s)?.ztilde_definition(n, a.q_max)
    })
}

fn zk_point(env: &Env, a: &IntensityArgs, c: u64) -> Outcome {
    if c == 0 {
        return Err(CliError::Usage("c must be at least 1".into()).into());
    }
    let record = match a.method.unwrap_or(MethodArg::Factorised) {
        MethodArg::Factorised => env.with_sieve(a.t_max.unwrap_or(MIN_SIEVE), |s| {
            let (value, t_max) = Diffraction::new(a.k, s)?.zk_factorised_with_cutoff(c, a.t_max)?;
            Ok(ZkRecord {
                k: a.k,
                c,
                value,
                method: ZkMethod::Factorised,
                t_max: Some(t_max),
                r_max: None,
                d_max: None,
            })
        })?,
        MethodArg::ZkDefinition => {
            let explicit = a.r_max.zip(a.d_max);
            let target = a.tail.unwrap_or(1e-6);
            let initial = explicit.map_or(2 * kfree_core::diffraction::START_R_MAX.max(c), |(r, d)| r.max(d));
            env.with_sieve(initial, |s| {
                let d = Diffraction::new(a.k, s)?;
                let (value, r_max, d_max) = match explicit {
                    Some((r, dm)) => (d.zk_definition(c, r, dm)?, r, dm),
                    None => match d.zk_definition_to_tail(c, target) {
                        Err(Error::CutoffCap { needed, .. }) if s.limit() < env.sieve_limit => {
                            return Err(Error::SieveTooSmall {
                                needed: needed.min(env.sieve_limit),
                                limit: s.limit(),
                            })
                        }
                        other => other?,
                    },
                };
                Ok(ZkRecord {
                    k: a.k,
                    c,
                    value,
                    method: ZkMethod::Definition,
                    t_max: None,
                    r_max: Some(r_max),
                    d_max: Some(d_max),
                })
            })?
        }
        _ => return Err(CliError::Usage("--c goes with --method factorised or zk-definition".into()).into()),
    };
    let header = ["k", "c", "z", "tail", "method", "t_max", "r_max", "d_max"];
    let method = match record.method {
        ZkMethod::Factorised => "factorised",
        ZkMethod::Definition => "definition",
    };
    let rows = vec![vec![
        record.k.to_string(),
        c.to_string(),
        sci(record.value.value),
        sci(record.value.tail),
        method.to_string(),
        opt(record.t_max),
        opt(record.r_max),
        opt(record.d_max),
    ]];
    Ok(match env.format_or(Format::Json) {
        Format::Json => json(&record),
        Format::Csv => csv(&header, &rows),
        Format::Table => table(&header, &rows),
    })
}

/// Leading-order prediction `Z_k(eps) ~ (c_k / 2k) eps^(2 - 1/k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub exponent: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub k: u32,
    pub points: Vec<IntensityResult>,
    pub fit: Option<PowerLawFit>,
    pub expected: Expected,
}

pub fn expected_power_law(k: u32) -> Result<Expected, CliError> {
    let c = constants_for_k(k, 1e-20)?.c_k.value;
    Ok(Expected {
        exponent: 2.0 - 1.0 / f64::from(k),
        amplitude: c / f64::from(2 * k),
    })
}

pub fn scan(env: &Env, a: &ScanArgs) -> Outcome {
    check_k(a.k)?;
    let grid = parse_grid(&a.eps, &a.spacing)?;
    let eps = grid.values();
    for &e in &eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Usage(format!("epsilon must lie in (0, 1), got {e}")).into());
        }
    }
    let smallest = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let initial = a
        .q_max
        .unwrap_or_else(|| kfree_core::diffraction::MIN_DEFAULT_Q_MAX.max((100.0 / smallest).ceil() as u64));
    let points = env.with_sieve(initial, |s| Diffraction::new(a.k, s)?.z_direct_many(&eps, a.q_max))?;
    let pairs: Vec<(f64, f64)> = points.iter().map(|r| (r.epsilon.expect("direct"), r.value.value)).collect();
    let fit = if grid.points >= 2 && grid.start < grid.stop {
        Some(fit_power_law(&pairs)?)
    } else {
        None
    };
    let record = ScanRecord {
        k: a.k,
        points,
        fit,
        expected: expected_power_law(a.k)?,
    };
    Ok(match env.format_or(Format::Csv) {
        Format::Json => json(&record),
        Format::Csv => scan_csv(&record),
        Format::Table => {
            let rows: Vec<Vec<String>> = record
                .points
                .iter()
                .map(|r| vec![sci(r.epsilon.unwrap_or(f64::NAN)), sci(r.value.value), sci(r.value.tail)])
                .collect();
            table(&["epsilon", "Z", "tail"], &rows) + &fit_footer(&record)
        }
    })
}

fn scan_csv(record: &ScanRecord) -> String {
    let rows: Vec<Vec<String>> = record
        .points
        .iter()
        .map(|r| {
            vec![
                sci(r.epsilon.unwrap_or(f64::NAN)),
                sci(r.value.value),
                sci(r.value.tail),
                r.method.to_string(),
            ]
        })
        .collect();
    csv(&["epsilon", "Z", "tail", "method"], &rows) + &fit_footer(record)
}

fn fit_footer(record: &ScanRecord) -> String {
    let e = record.expected;
    let mut out = String::new();
    match &record.fit {
        Some(f) => out.push_str(&format!(
            "# fit exponent={} amplitude={} amplitude_at_expected_exponent={} max_abs_residual={}\n",
            sci(f.exponent),
            sci(f.amplitude()),
            sci(f.amplitude_at_exponent(e.exponent)),
            sci(f.max_abs_residual())
        )),
        None => out.push_str("# fit unavailable: need two distinct epsilons\n"),
    }
    out.push_str(&format!("# expected exponent={} amplitude={}\n", sci(e.exponent), sci(e.amplitude)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub series: ResidualSeries,
    pub max_abs_normalized: f64,
    pub top_decade_max: f64,
}

fn series_output(env: &Env, xname: &str, series: ResidualSeries) -> String {
    let record = SeriesRecord {
        max_abs_normalized: series.max_abs_normalized(),
        top_decade_max: series.top_decade_max(),
        series,
    };
    let s = &record.series;
    let rows: Vec<Vec<String>> = (0..s.len())
        .map(|i| vec![sci(s.x[i]), sci(s.exact[i]), sci(s.main[i]), sci(s.residual[i]), sci(s.normalized[i])])
        .collect();
    let header = [xname, "exact", "main", "residual", "normalized"];
    let footer = format!(
        "# max_abs_normalized={} top_decade_max={}\n",
        sci(record.max_abs_normalized),
        sci(record.top_decade_max)
    );
    match env.format_or(Format::Csv) {
        Format::Json => json(&record),
        Format::Csv => csv(&header, &rows) + &footer,
        Format::Table => table(&header, &rows) + &footer,
    }
}

fn integer_points(grid: &GridSpec) -> Vec<f64> {
    grid.integer_values().into_iter().map(|x| x as f64).collect()
}

pub fn walfisz(env: &Env, a: &WalfiszArgs) -> Outcome {
    let grid = parse_grid(&a.x, &a.spacing)?;
    let xs = integer_points(&grid);
    let series = walfisz_residuals(&xs, a.coprime_to, &SieveConfig::default())?;
    Ok(series_output(env, "x", series))
}

pub fn weighted(env: &Env, a: &WeightedArgs) -> Outcome {
    check_k(a.k)?;
    let grid = parse_grid(&a.u, &a.spacing)?;
    let us = integer_points(&grid);
    let top = us.last().copied().unwrap_or(1.0) as u64;
    let gamma = constants_for_k(a.k, 1e-20)?.gamma_k.value;
    let series = env.with_sieve(top, |s| weighted_residuals(s, a.k, gamma, &us))?;
    Ok(series_output(env, "u", series))
}

pub fn decay(env: &Env, a: &DecayArgs) -> Outcome {
    check_k(a.k)?;
    let grid = parse_grid(&a.c, &a.spacing)?;
    let cs = grid.integer_values();
    let gamma = constants_for_k(a.k, 1e-20)?.gamma_k.value;
    let series = env.with_sieve(MIN_SIEVE, |s| zk_asymptotic_check(&Diffraction::new(a.k, s)?, gamma, &cs))?;
    Ok(series_output(env, "c", series))
}

