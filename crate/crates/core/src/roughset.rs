//! Rough-set attribute weighting and sample screening.
//!
//! An [`InformationSystem`] holds a universe of objects described by a set of
//! attributes. Each cell carries two values: a discrete code, used for the
//! indiscernibility relation, and the normalized real value in `[0, 1]` it was
//! derived from, used for screening scores.
//!
//! For a target set `X` and attribute subset `B`:
//!
//! - `IND(B)` partitions the universe into blocks of objects that agree on
//!   every attribute of `B`;
//! - `POS_B(X)` is the union of blocks wholly inside `X`;
//! - dependence is `|POS_B(X)| / |U|`;
//! - the importance of `a` within `B` is
//!   `(|POS_B(X)| - |POS_{B - {a}}(X)|) / |U|`.
//!
//! Dependence and importance are mixed as `alpha * rho + beta * gamma`,
//! normalized to sum to one, and used as a linear scoring rule over the
//! normalized values.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 5;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_THETA: f64 = 0.5;

const MIX_TOLERANCE: f64 = 1e-12;

/// Non-fatal conditions raised while building a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    /// Every object has the same value for the attribute; all outputs are 0.
    ConstantAttribute { attribute: String },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::ConstantAttribute { attribute } => {
                write!(f, "attribute '{attribute}' is constant; normalized to 0")
            }
        }
    }
}

/// Output of [`normalize_attribute`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when `max == min`.
    pub constant: bool,
}

/// Min-max scaling onto `[0, 1]`.
pub fn normalize_attribute(values: &[f64]) -> Result<Normalized> {
    if values.is_empty() {
        return Err(Error::argument("cannot normalize an empty attribute"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("attribute values must be finite"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(Normalized {
            values: vec![0.0; values.len()],
            constant: true,
        });
    }
    Ok(Normalized {
        values: values
            .iter()
            .map(|v| ((v - min) / range).clamp(0.0, 1.0))
            .collect(),
        constant: false,
    })
}

/// Equal-width binning of values in `[0, 1]`: `min(floor(v * bins), bins - 1)`.
pub fn discretize(normalized: &[f64], bins: usize) -> Result<Vec<u32>> {
    if bins < 2 {
        return Err(Error::config(format!("bins must be >= 2, got {bins}")));
    }
    normalized
        .iter()
        .map(|&v| {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::argument(format!("value {v} outside [0, 1]")));
            }
            Ok(((v * bins as f64).floor() as usize).min(bins - 1) as u32)
        })
        .collect()
}

/// A decision table `S = (U, A, V, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationSystem {
    objects: Vec<String>,
    attributes: Vec<String>,
    /// `codes[object][attribute]`
    codes: Vec<Vec<u32>>,
    /// `raw[object][attribute]`, each in `[0, 1]`
    raw: Vec<Vec<f64>>,
}

/// An [`InformationSystem`] together with the warnings raised building it.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltSystem {
    pub system: InformationSystem,
    pub warnings: Vec<Warning>,
}

impl InformationSystem {
    /// Builds a table from explicit codes and normalized values, row-major.
    pub fn new(
        objects: Vec<String>,
        attributes: Vec<String>,
        codes: Vec<Vec<u32>>,
        raw: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if codes.len() != objects.len() || raw.len() != objects.len() {
            return Err(Error::argument(format!(
                "{} objects but {} code rows and {} value rows",
                objects.len(),
                codes.len(),
                raw.len()
            )));
        }
        let k = attributes.len();
        for (i, (c, r)) in codes.iter().zip(&raw).enumerate() {
            if c.len() != k || r.len() != k {
                return Err(Error::argument(format!(
                    "object {} has {} codes and {} values, expected {k}",
                    objects[i],
                    c.len(),
                    r.len()
                )));
            }
            if let Some(v) = r.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::argument(format!(
                    "object {} has value {v} outside [0, 1]",
                    objects[i]
                )));
            }
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = attributes.iter().find(|a| !seen.insert(a.as_str())) {
            return Err(Error::argument(format!("duplicate attribute '{dup}'")));
        }
        Ok(Self {
            objects,
            attributes,
            codes,
            raw,
        })
    }

    /// Builds a table from column-major measurements: each column is
    /// normalized onto `[0, 1]` and then discretized into `bins` codes.
    pub fn from_columns(
        objects: Vec<String>,
        attributes: Vec<String>,
        columns: &[Vec<f64>],
        bins: usize,
    ) -> Result<BuiltSystem> {
        if columns.len() != attributes.len() {
            return Err(Error::argument(format!(
                "{} attributes but {} columns",
                attributes.len(),
                columns.len()
            )));
        }
        if bins < 2 {
            return Err(Error::config(format!("bins must be >= 2, got {bins}")));
        }
        let n = objects.len();
        let mut codes = vec![Vec::with_capacity(columns.len()); n];
        let mut raw = vec![Vec::with_capacity(columns.len()); n];
        let mut warnings = Vec::new();
        for (name, column) in attributes.iter().zip(columns) {
            if column.len() != n {
                return Err(Error::argument(format!(
                    "attribute '{name}' has {} values for {n} objects",
                    column.len()
                )));
            }
            if n == 0 {
                continue;
            }
            let norm = normalize_attribute(column)?;
            if norm.constant {
                warnings.push(Warning::ConstantAttribute {
                    attribute: name.clone(),
                });
            }
            let col_codes = discretize(&norm.values, bins)?;
            for (i, (c, v)) in col_codes.into_iter().zip(norm.values).enumerate() {
                codes[i].push(c);
                raw[i].push(v);
            }
        }
        Ok(BuiltSystem {
            system: Self::new(objects, attributes, codes, raw)?,
            warnings,
        })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn universe_len(&self) -> usize {
        self.objects.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// Attribute index by name.
    pub fn attribute(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::argument(format!("unknown attribute '{name}'")))
    }

    /// All attribute indices, `A`.
    pub fn all_attributes(&self) -> Vec<usize> {
        (0..self.attributes.len()).collect()
    }

    pub fn code(&self, object: usize, attribute: usize) -> u32 {
        self.codes[object][attribute]
    }

    pub fn raw(&self, object: usize, attribute: usize) -> f64 {
        self.raw[object][attribute]
    }

    /// The value set `V`: distinct codes in use.
    pub fn value_set(&self) -> BTreeSet<u32> {
        self.codes.iter().flatten().copied().collect()
    }

    fn check_subset(&self, attrs: &[usize]) -> Result<()> {
        if let Some(a) = attrs.iter().find(|&&a| a >= self.attributes.len()) {
            return Err(Error::argument(format!(
                "unknown attribute index {a} (table has {})",
                self.attributes.len()
            )));
        }
        Ok(())
    }

    fn check_target(&self, target: &TargetSet) -> Result<()> {
        if target.universe_len != self.objects.len() {
            return Err(Error::argument(format!(
                "target set is over {} objects, table has {}",
                target.universe_len,
                self.objects.len()
            )));
        }
        Ok(())
    }

    /// Writes the table as `object,<attr...>,label` with codes as cells.
    pub fn write_csv<W: Write>(&self, target: &TargetSet, out: W) -> Result<()> {
        self.check_target(target)?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::argument(format!("csv write failed: {e}"));
        let mut header = vec!["object".to_string()];
        header.extend(self.attributes.iter().cloned());
        header.push("label".to_string());
        w.write_record(&header).map_err(io)?;
        for (i, name) in self.objects.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.codes[i].iter().map(u32::to_string));
            row.push(if target.contains(i) { "1" } else { "0" }.to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::argument(format!("csv write failed: {e}")))?;
        Ok(())
    }

    /// Reads a table written by [`InformationSystem::write_csv`].
    ///
    /// Only codes are stored in the file, so the normalized values used for
    /// screening are recovered by min-max scaling each code column.
    pub fn read_csv<R: Read>(input: R) -> Result<(Self, TargetSet)> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r
            .headers()
            .map_err(|e| Error::argument(format!("csv header: {e}")))?
            .clone();
        let k = header.len();
        if k < 2 || &header[0] != "object" || &header[k - 1] != "label" {
            return Err(Error::argument(
                "header must be `object,<attr1>,...,<attrK>,label`",
            ));
        }
        let attributes: Vec<String> = header.iter().skip(1).take(k - 2).map(String::from).collect();

        let mut objects = Vec::new();
        let mut codes = Vec::new();
        let mut members = Vec::new();
        for (line, record) in r.records().enumerate() {
            let row = line + 2;
            let record = record.map_err(|e| Error::argument(format!("row {row}: {e}")))?;
            let parse = |s: &str| -> Result<u32> {
                if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(Error::argument(format!("row {row}: bad code '{s}'")));
                }
                s.parse()
                    .map_err(|_| Error::argument(format!("row {row}: bad code '{s}'")))
            };
            objects.push(record[0].to_string());
            codes.push(
                record
                    .iter()
                    .skip(1)
                    .take(k - 2)
                    .map(parse)
                    .collect::<Result<Vec<_>>>()?,
            );
            match &record[k - 1] {
                "0" => {}
                "1" => members.push(objects.len() - 1),
                other => {
                    return Err(Error::argument(format!(
                        "row {row}: label must be 0 or 1, got '{other}'"
                    )))
                }
            }
        }

        let mut raw = vec![Vec::with_capacity(attributes.len()); objects.len()];
        if !objects.is_empty() {
            for a in 0..attributes.len() {
                let column: Vec<f64> = codes.iter().map(|c: &Vec<u32>| f64::from(c[a])).collect();
                for (i, v) in normalize_attribute(&column)?.values.into_iter().enumerate() {
                    raw[i].push(v);
                }
            }
        }
        let n = objects.len();
        let system = Self::new(objects, attributes, codes, raw)?;
        Ok((system, TargetSet::new(members, n)?))
    }
}

/// The target set `X` as a subset of the universe, by object index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    members: BTreeSet<usize>,
    universe_len: usize,
}

impl TargetSet {
    pub fn new(members: impl IntoIterator<Item = usize>, universe_len: usize) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&m) = members.iter().find(|&&m| m >= universe_len) {
            return Err(Error::argument(format!(
                "target member {m} outside universe of {universe_len}"
            )));
        }
        Ok(Self {
            members,
            universe_len,
        })
    }

    /// Members are the indices whose label is `true`.
    pub fn from_labels(labels: &[bool]) -> Self {
        Self {
            members: labels
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| l.then_some(i))
                .collect(),
            universe_len: labels.len(),
        }
    }

    pub fn contains(&self, object: usize) -> bool {
        self.members.contains(&object)
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_universe(&self) -> bool {
        self.members.len() == self.universe_len
    }
}

/// Partition of the universe by `IND(B)`, blocks in first-occurrence order.
pub fn indiscernibility_classes(
    system: &InformationSystem,
    attrs: &[usize],
) -> Result<Vec<Vec<usize>>> {
    if attrs.is_empty() {
        return Err(Error::argument("attribute subset must be non-empty"));
    }
    system.check_subset(attrs)?;
    Ok(partition(system, attrs))
}

fn partition(system: &InformationSystem, attrs: &[usize]) -> Vec<Vec<usize>> {
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for object in 0..system.universe_len() {
        let key: Vec<u32> = attrs.iter().map(|&a| system.code(object, a)).collect();
        match index.get(&key) {
            Some(&b) => blocks[b].push(object),
            None => {
                index.insert(key, blocks.len());
                blocks.push(vec![object]);
            }
        }
    }
    blocks
}

/// Lower approximation of `X` under `B`, as ascending object indices.
pub fn positive_region(
    system: &InformationSystem,
    attrs: &[usize],
    target: &TargetSet,
) -> Result<Vec<usize>> {
    if attrs.is_empty() {
        return Err(Error::argument("attribute subset must be non-empty"));
    }
    system.check_subset(attrs)?;
    system.check_target(target)?;
    Ok(positive_region_unchecked(system, attrs, target))
}

/// With no attributes the whole universe is one block, so the positive
/// region is `U` when `X = U` and empty otherwise.
fn positive_region_unchecked(
    system: &InformationSystem,
    attrs: &[usize],
    target: &TargetSet,
) -> Vec<usize> {
    let mut pos: Vec<usize> = partition(system, attrs)
        .into_iter()
        .filter(|block| block.iter().all(|&o| target.contains(o)))
        .flatten()
        .collect();
    pos.sort_unstable();
    pos
}

/// `|POS_B(X)| / |U|`; 0 on an empty universe.
pub fn dependence(system: &InformationSystem, attrs: &[usize], target: &TargetSet) -> Result<f64> {
    let pos = positive_region(system, attrs, target)?;
    Ok(ratio(pos.len(), system.universe_len()))
}

fn ratio(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

/// Drop in positive-region size when `attribute` is removed from `attrs`,
/// scaled by `|U|`.
pub fn importance(
    system: &InformationSystem,
    attrs: &[usize],
    attribute: usize,
    target: &TargetSet,
) -> Result<f64> {
    if !attrs.contains(&attribute) {
        return Err(Error::argument(format!(
            "attribute index {attribute} is not in the subset"
        )));
    }
    let with = positive_region(system, attrs, target)?.len();
    let without: Vec<usize> = attrs.iter().copied().filter(|&a| a != attribute).collect();
    let without = positive_region_unchecked(system, &without, target).len();
    Ok(ratio(with - without, system.universe_len()))
}

/// How the per-attribute dependence is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceMode {
    /// `rho_a` uses `B = {a}`.
    #[default]
    Single,
    /// `rho_a` uses `B = A` for every attribute.
    Full,
}

impl std::str::FromStr for DependenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Self::Single),
            "full" => Ok(Self::Full),
            other => Err(Error::config(format!(
                "dependence_mode must be 'single' or 'full', got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for DependenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Single => "single",
            Self::Full => "full",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeWeight {
    pub attribute: String,
    pub rho: f64,
    pub gamma: f64,
    pub omega: f64,
    pub omega_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeWeights {
    pub alpha: f64,
    pub beta: f64,
    pub mode: DependenceMode,
    pub weights: Vec<AttributeWeight>,
    /// All `omega` were zero and `omega_norm` fell back to uniform.
    pub zero_mass: bool,
}

impl AttributeWeights {
    pub fn normalized(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.omega_norm).collect()
    }

    /// CSV with header `attribute,rho,gamma,omega,omega_norm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::argument(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["attribute", "rho", "gamma", "omega", "omega_norm"])
            .map_err(io)?;
        for a in &self.weights {
            w.write_record([
                a.attribute.clone(),
                a.rho.to_string(),
                a.gamma.to_string(),
                a.omega.to_string(),
                a.omega_norm.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::argument(format!("csv write failed: {e}")))
    }
}

pub fn check_mix(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0) || ((alpha + beta) - 1.0).abs() > MIX_TOLERANCE {
        return Err(Error::config(format!(
            "alpha and beta must be non-negative and sum to 1, got {alpha} + {beta}"
        )));
    }
    Ok(())
}

/// Dependence, importance and combined weight of every attribute.
pub fn attribute_weights(
    system: &InformationSystem,
    target: &TargetSet,
    alpha: f64,
    beta: f64,
    mode: DependenceMode,
) -> Result<AttributeWeights> {
    check_mix(alpha, beta)?;
    system.check_target(target)?;
    let all = system.all_attributes();
    let full_rho = match mode {
        DependenceMode::Full if !all.is_empty() => Some(dependence(system, &all, target)?),
        _ => None,
    };

    let mut weights = Vec::with_capacity(all.len());
    for &a in &all {
        let rho = match full_rho {
            Some(r) => r,
            None => dependence(system, &[a], target)?,
        };
        let gamma = importance(system, &all, a, target)?;
        weights.push(AttributeWeight {
            attribute: system.attributes[a].clone(),
            rho,
            gamma,
            omega: alpha * rho + beta * gamma,
            omega_norm: 0.0,
        });
    }
    let omegas: Vec<f64> = weights.iter().map(|w| w.omega).collect();
    let norm = if omegas.is_empty() {
        NormalizedWeights {
            values: Vec::new(),
            zero_mass: false,
        }
    } else {
        normalize_weights(&omegas)?
    };
    for (w, v) in weights.iter_mut().zip(norm.values) {
        w.omega_norm = v;
    }
    Ok(AttributeWeights {
        alpha,
        beta,
        mode,
        weights,
        zero_mass: norm.zero_mass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWeights {
    pub values: Vec<f64>,
    /// Set when every input was zero and uniform weights were returned.
    pub zero_mass: bool,
}

/// Scales non-negative weights to sum to one.
pub fn normalize_weights(omegas: &[f64]) -> Result<NormalizedWeights> {
    if omegas.is_empty() {
        return Err(Error::argument("no weights to normalize"));
    }
    if let Some(w) = omegas.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::argument(format!("weights must be non-negative, got {w}")));
    }
    let total: f64 = omegas.iter().sum();
    if total == 0.0 {
        let u = 1.0 / omegas.len() as f64;
        return Ok(NormalizedWeights {
            values: vec![u; omegas.len()],
            zero_mass: true,
        });
    }
    Ok(NormalizedWeights {
        values: omegas.iter().map(|w| w / total).collect(),
        zero_mass: false,
    })
}

/// Output of [`screen`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenResult {
    /// `X'`: object indices with `score >= theta`, ascending.
    pub selected: Vec<usize>,
    /// Weighted score of every object.
    pub scores: Vec<f64>,
    pub theta: f64,
}

/// Selects objects whose weighted normalized score reaches `theta`.
pub fn screen(
    system: &InformationSystem,
    weights: &AttributeWeights,
    theta: f64,
) -> Result<ScreenResult> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::config(format!("theta must be in [0, 1], got {theta}")));
    }
    if weights.weights.len() != system.attribute_count() {
        return Err(Error::argument(format!(
            "{} weights for {} attributes",
            weights.weights.len(),
            system.attribute_count()
        )));
    }
    let w = weights.normalized();
    let scores: Vec<f64> = (0..system.universe_len())
        .map(|o| {
            let s: f64 = w.iter().enumerate().map(|(a, wa)| wa * system.raw(o, a)).sum();
            s.clamp(0.0, 1.0)
        })
        .collect();
    let selected = scores
        .iter()
        .enumerate()
        .filter_map(|(o, &s)| (s >= theta).then_some(o))
        .collect();
    Ok(ScreenResult {
        selected,
        scores,
        theta,
    })
}
