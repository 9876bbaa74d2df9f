//! Pooled two-sample t-test and one-way ANOVA.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::argument(format!("I_x(a, b) needs a, b > 0, got a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::argument(format!("I_x(a, b) needs x in [0, 1], got {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast for x < (a + 1) / (a + b + 2).
    let v = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TTest,
    Anova,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::TTest => "ttest",
            TestKind::Anova => "anova",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ttest" => Ok(TestKind::TTest),
            "anova" => Ok(TestKind::Anova),
            other => Err(Error::config(format!(
                "unknown test '{other}', expected 'ttest' or 'anova'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    /// `t` or `F`.
    pub statistic: f64,
    pub df1: f64,
    /// Denominator degrees of freedom for `F`.
    pub df2: Option<f64>,
    pub p_value: f64,
}

/// `test,statistic,df,p`; ANOVA degrees of freedom print as `df1/df2`.
impl fmt::Display for TestResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.test.name(), self.statistic, self.df1)?;
        if let Some(df2) = self.df2 {
            write!(f, "/{df2}")?;
        }
        write!(f, ",{}", self.p_value)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

fn check_group(name: &str, xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::argument(format!(
            "group {name} needs at least 2 values, has {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::argument(format!("group {name} has non-finite values")));
    }
    Ok(())
}

/// Student's two-sample t-test with pooled variance; two-sided p.
pub fn t_test(g1: &[f64], g2: &[f64]) -> Result<TestResult> {
    check_group("1", g1)?;
    check_group("2", g2)?;
    let (n1, n2) = (g1.len() as f64, g2.len() as f64);
    let (m1, m2) = (mean(g1), mean(g2));
    let df = n1 + n2 - 2.0;
    let pooled = (sum_sq_dev(g1, m1) + sum_sq_dev(g2, m2)) / df;
    if pooled <= 0.0 {
        return Err(Error::Degenerate("pooled variance is zero".into()));
    }
    let t = (m1 - m2) / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    let p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))?;
    Ok(TestResult {
        test: TestKind::TTest,
        statistic: t,
        df1: df,
        df2: None,
        p_value: p,
    })
}

/// Named groups of observations, in first-appearance order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupSamples {
    pub groups: Vec<(String, Vec<f64>)>,
}

impl GroupSamples {
    pub fn push(&mut self, group: &str, value: f64) {
        match self.groups.iter_mut().find(|(g, _)| g == group) {
            Some((_, v)) => v.push(value),
            None => self.groups.push((group.to_string(), vec![value])),
        }
    }

    /// Reads `group,value` rows; a leading `group,value` header is optional.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut out = Self::default();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::argument(format!("groups csv line {}: {e}", i + 1)))?;
            if rec.len() != 2 {
                return Err(Error::argument(format!(
                    "groups csv line {}: expected `group,value`",
                    i + 1
                )));
            }
            if i == 0 && &rec[0] == "group" && &rec[1] == "value" {
                continue;
            }
            let v: f64 = rec[1].parse().map_err(|_| {
                Error::argument(format!("groups csv line {}: bad value '{}'", i + 1, &rec[1]))
            })?;
            out.push(&rec[0], v);
        }
        Ok(out)
    }
}

/// One-way ANOVA; right-tail p of `F(k - 1, N - k)`.
pub fn anova_oneway(samples: &GroupSamples) -> Result<TestResult> {
    let k = samples.groups.len();
    if k < 2 {
        return Err(Error::argument(format!("ANOVA needs at least 2 groups, got {k}")));
    }
    for (name, xs) in &samples.groups {
        check_group(name, xs)?;
    }
    let n: usize = samples.groups.iter().map(|(_, xs)| xs.len()).sum();
    let grand = samples.groups.iter().flat_map(|(_, xs)| xs).sum::<f64>() / n as f64;
    let (mut between, mut within) = (0.0, 0.0);
    for (_, xs) in &samples.groups {
        let m = mean(xs);
        between += xs.len() as f64 * (m - grand) * (m - grand);
        within += sum_sq_dev(xs, m);
    }
    if within <= 0.0 {
        return Err(Error::Degenerate("within-group variance is zero".into()));
    }
    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    let f = (between / df1) / (within / df2);
    let p = regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))?;
    Ok(TestResult {
        test: TestKind::Anova,
        statistic: f,
        df1,
        df2: Some(df2),
        p_value: p,
    })
}
