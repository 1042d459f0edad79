//! Mamdani fuzzy inference with trapezoidal terms.
//!
//! Rules are conjunctions (`AND` = min) of input terms implying one output
//! term. Each rule clips its consequent at its activation, the clipped shapes
//! are combined with max, and the aggregate is defuzzified by center of
//! gravity using midpoint-rule integration over the universe `[0, 100]`.
//!
//! # Config format
//!
//! ```text
//! # comment
//! cog_step = 0.1            # optional, defaults to 0.1
//!
//! [input Qm]
//! low  = 0 0 20 40          # trapezoid a b c d
//! high = 60 80 100 100
//!
//! [output selection]
//! global = 0 0 30 50
//! local  = 50 70 100 100
//!
//! [rules]
//! IF Qm IS low THEN selection IS global
//! IF Qm IS high AND Im IS low THEN selection IS local
//! ```
//!
//! Any number of `input` sections, exactly one `output` section and one or
//! more rules are required. Keywords are case-insensitive; names are not.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub const UNIVERSE_MIN: f64 = 0.0;
pub const UNIVERSE_MAX: f64 = 100.0;
pub const DEFAULT_COG_STEP: f64 = 0.1;

/// The shipped controller configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.fis");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("trapezoid not monotone: a={a}, b={b}, c={c}, d={d}")]
    NotMonotone { a: f64, b: f64, c: f64, d: f64 },
    #[error("trapezoid ({a}, {b}, {c}, {d}) leaves the universe [0, 100]")]
    OutsideUniverse { a: f64, b: f64, c: f64, d: f64 },
    #[error("variable {0:?} has no terms")]
    NoTerms(String),
    #[error("variable {variable:?} declares term {term:?} twice")]
    DuplicateTerm { variable: String, term: String },
    #[error("variable {0:?} is declared twice")]
    DuplicateVariable(String),
    #[error("rule base is empty")]
    EmptyRuleBase,
    #[error("rule {rule} has no antecedents")]
    EmptyAntecedent { rule: String },
    #[error("rule {rule} references undeclared variable {variable:?}")]
    UnknownVariable { rule: String, variable: String },
    #[error("rule {rule} references undeclared term {term:?} of variable {variable:?}")]
    UnknownTerm {
        rule: String,
        variable: String,
        term: String,
    },
    #[error("cog_step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("no value supplied for input variable {0:?}")]
    MissingInput(String),
    #[error("expected {expected} input values, got {actual}")]
    InputCount { expected: usize, actual: usize },
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
}

/// Trapezoidal membership function with feet `a`, `d` and shoulders `b`, `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        if !(a <= b && b <= c && c <= d) {
            return Err(FuzzyError::NotMonotone { a, b, c, d });
        }
        if a < UNIVERSE_MIN || d > UNIVERSE_MAX {
            return Err(FuzzyError::OutsideUniverse { a, b, c, d });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn params(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Degree of membership of `x`, after clamping `x` to the universe.
    pub fn membership(&self, x: f64) -> f64 {
        let x = x.clamp(UNIVERSE_MIN, UNIVERSE_MAX);
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }

    /// Support `[a, d]`.
    pub fn support(&self) -> (f64, f64) {
        (self.a, self.d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    name: String,
    terms: Vec<(String, Trapezoid)>,
}

impl LinguisticVariable {
    pub fn new(name: impl Into<String>, terms: Vec<(String, Trapezoid)>) -> Result<Self, FuzzyError> {
        let name = name.into();
        if terms.is_empty() {
            return Err(FuzzyError::NoTerms(name));
        }
        for (i, (term, _)) in terms.iter().enumerate() {
            if terms[..i].iter().any(|(t, _)| t == term) {
                return Err(FuzzyError::DuplicateTerm {
                    variable: name,
                    term: term.clone(),
                });
            }
        }
        Ok(Self { name, terms })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[(String, Trapezoid)] {
        &self.terms
    }

    pub fn term(&self, name: &str) -> Option<&Trapezoid> {
        self.terms.iter().find(|(t, _)| t == name).map(|(_, shape)| shape)
    }

    fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|(t, _)| t == name)
    }
}

/// `variable IS term`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub variable: String,
    pub term: String,
}

impl Clause {
    pub fn new(variable: impl Into<String>, term: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            term: term.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyRule {
    pub antecedents: Vec<Clause>,
    pub consequent: Clause,
}

impl fmt::Display for FuzzyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IF ")?;
        for (i, c) in self.antecedents.iter().enumerate() {
            if i > 0 {
                write!(f, " AND ")?;
            }
            write!(f, "{} IS {}", c.variable, c.term)?;
        }
        write!(
            f,
            " THEN {} IS {}",
            self.consequent.variable, self.consequent.term
        )
    }
}

impl FuzzyRule {
    /// Parses `IF v IS t [AND v IS t]... THEN out IS t`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let keyword = |i: usize, kw: &str| tokens.get(i).is_some_and(|t| t.eq_ignore_ascii_case(kw));
        if !keyword(0, "IF") {
            return Err("rule must start with IF".into());
        }
        let clause_at = |i: usize| -> Result<Clause, String> {
            match (tokens.get(i), tokens.get(i + 1), tokens.get(i + 2)) {
                (Some(v), Some(is), Some(t)) if is.eq_ignore_ascii_case("IS") => Ok(Clause::new(*v, *t)),
                _ => Err(format!("expected `<variable> IS <term>` at token {}", i + 1)),
            }
        };
        let mut antecedents = Vec::new();
        let mut i = 1;
        loop {
            antecedents.push(clause_at(i)?);
            i += 3;
            if keyword(i, "AND") {
                i += 1;
            } else if keyword(i, "THEN") {
                i += 1;
                break;
            } else {
                return Err(format!("expected AND or THEN at token {}", i + 1));
            }
        }
        let consequent = clause_at(i)?;
        if i + 3 != tokens.len() {
            return Err("unexpected tokens after consequent".into());
        }
        Ok(Self {
            antecedents,
            consequent,
        })
    }
}

#[derive(Debug, Clone)]
struct ResolvedRule {
    antecedents: Vec<(usize, usize)>,
    consequent: usize,
}

/// A validated Mamdani system. Immutable once built.
#[derive(Debug, Clone)]
pub struct FuzzySystem {
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<FuzzyRule>,
    resolved: Vec<ResolvedRule>,
    cog_step: f64,
    // midpoint abscissae and each output term sampled on them
    grid: Vec<f64>,
    output_samples: Vec<Vec<f64>>,
}

impl FuzzySystem {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<FuzzyRule>,
        cog_step: f64,
    ) -> Result<Self, FuzzyError> {
        if !(cog_step > 0.0 && cog_step.is_finite()) {
            return Err(FuzzyError::InvalidStep(cog_step));
        }
        for (i, v) in inputs.iter().enumerate() {
            if inputs[..i].iter().any(|u| u.name == v.name) || v.name == output.name {
                return Err(FuzzyError::DuplicateVariable(v.name.clone()));
            }
        }
        if rules.is_empty() {
            return Err(FuzzyError::EmptyRuleBase);
        }

        let mut resolved = Vec::with_capacity(rules.len());
        for (n, rule) in rules.iter().enumerate() {
            let label = format!("{} (`{}`)", n + 1, rule);
            if rule.antecedents.is_empty() {
                return Err(FuzzyError::EmptyAntecedent { rule: label });
            }
            let mut antecedents = Vec::with_capacity(rule.antecedents.len());
            for clause in &rule.antecedents {
                let var = inputs
                    .iter()
                    .position(|v| v.name == clause.variable)
                    .ok_or_else(|| FuzzyError::UnknownVariable {
                        rule: label.clone(),
                        variable: clause.variable.clone(),
                    })?;
                let term = inputs[var].term_index(&clause.term).ok_or_else(|| {
                    FuzzyError::UnknownTerm {
                        rule: label.clone(),
                        variable: clause.variable.clone(),
                        term: clause.term.clone(),
                    }
                })?;
                antecedents.push((var, term));
            }
            if rule.consequent.variable != output.name {
                return Err(FuzzyError::UnknownVariable {
                    rule: label,
                    variable: rule.consequent.variable.clone(),
                });
            }
            let consequent =
                output
                    .term_index(&rule.consequent.term)
                    .ok_or_else(|| FuzzyError::UnknownTerm {
                        rule: label.clone(),
                        variable: rule.consequent.variable.clone(),
                        term: rule.consequent.term.clone(),
                    })?;
            resolved.push(ResolvedRule {
                antecedents,
                consequent,
            });
        }

        let cells = ((UNIVERSE_MAX - UNIVERSE_MIN) / cog_step).round().max(1.0) as usize;
        let h = (UNIVERSE_MAX - UNIVERSE_MIN) / cells as f64;
        let grid: Vec<f64> = (0..cells)
            .map(|i| UNIVERSE_MIN + (i as f64 + 0.5) * h)
            .collect();
        let output_samples = output
            .terms
            .iter()
            .map(|(_, shape)| grid.iter().map(|&y| shape.membership(y)).collect())
            .collect();

        Ok(Self {
            inputs,
            output,
            rules,
            resolved,
            cog_step,
            grid,
            output_samples,
        })
    }

    /// The shipped default controller.
    pub fn default_controller() -> Self {
        load_fis_config(DEFAULT_CONFIG).expect("shipped FIS config is valid")
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn cog_step(&self) -> f64 {
        self.cog_step
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|v| v.name == name)
    }

    /// Min over the rule's antecedent memberships for the named crisp inputs.
    pub fn rule_activation(&self, rule: &FuzzyRule, inputs: &HashMap<&str, f64>) -> Result<f64, FuzzyError> {
        let mut activation = 1.0f64;
        for clause in &rule.antecedents {
            let value = *inputs
                .get(clause.variable.as_str())
                .ok_or_else(|| FuzzyError::MissingInput(clause.variable.clone()))?;
            let shape = self
                .inputs
                .iter()
                .find(|v| v.name == clause.variable)
                .and_then(|v| v.term(&clause.term))
                .ok_or_else(|| FuzzyError::UnknownTerm {
                    rule: rule.to_string(),
                    variable: clause.variable.clone(),
                    term: clause.term.clone(),
                })?;
            activation = activation.min(shape.membership(value));
        }
        Ok(activation)
    }

    /// Activation of every rule for crisp inputs given in declaration order.
    pub fn activations(&self, values: &[f64]) -> Result<Vec<f64>, FuzzyError> {
        if values.len() != self.inputs.len() {
            return Err(FuzzyError::InputCount {
                expected: self.inputs.len(),
                actual: values.len(),
            });
        }
        Ok(self
            .resolved
            .iter()
            .map(|rule| {
                rule.antecedents
                    .iter()
                    .map(|&(var, term)| self.inputs[var].terms[term].1.membership(values[var]))
                    .fold(1.0, f64::min)
            })
            .collect())
    }

    /// Center of gravity of the max-aggregated, activation-clipped rule
    /// consequents. `activations` is aligned with [`Self::rules`]. Returns
    /// `None` when the aggregate has zero area.
    pub fn defuzzify_cog(&self, activations: &[f64]) -> Option<f64> {
        assert_eq!(
            activations.len(),
            self.rules.len(),
            "one activation per rule expected"
        );
        // rules sharing a consequent collapse to their strongest activation
        let mut level = vec![0.0f64; self.output.terms.len()];
        for (rule, &a) in self.resolved.iter().zip(activations) {
            level[rule.consequent] = level[rule.consequent].max(a.clamp(0.0, 1.0));
        }
        let (mut moment, mut area) = (0.0, 0.0);
        for (i, &y) in self.grid.iter().enumerate() {
            let g = level
                .iter()
                .zip(&self.output_samples)
                .map(|(&l, samples)| l.min(samples[i]))
                .fold(0.0, f64::max);
            moment += y * g;
            area += g;
        }
        (area > 0.0).then(|| moment / area)
    }

    /// Full inference for crisp inputs in declaration order.
    pub fn evaluate(&self, values: &[f64]) -> Result<Option<f64>, FuzzyError> {
        Ok(self.defuzzify_cog(&self.activations(values)?))
    }

    /// Inference for a controller whose inputs are named `Qm`, `Im`, `Dm`.
    pub fn infer(&self, q_m: f64, i_m: f64, d_m: f64) -> Result<Option<f64>, FuzzyError> {
        let mut values = vec![0.0; self.inputs.len()];
        for (name, value) in [("Qm", q_m), ("Im", i_m), ("Dm", d_m)] {
            if let Some(i) = self.input_index(name) {
                values[i] = value;
            }
        }
        if let Some(missing) = self
            .inputs
            .iter()
            .find(|v| !matches!(v.name.as_str(), "Qm" | "Im" | "Dm"))
        {
            return Err(FuzzyError::MissingInput(missing.name.clone()));
        }
        self.evaluate(&values)
    }
}

enum Section {
    Top,
    Input(usize),
    Output,
    Rules,
}

/// Parses and validates a FIS config. See the module docs for the format.
pub fn load_fis_config(text: &str) -> Result<FuzzySystem, FuzzyError> {
    let mut cog_step = DEFAULT_COG_STEP;
    let mut inputs: Vec<(String, Vec<(String, Trapezoid)>)> = Vec::new();
    let mut output: Option<(String, Vec<(String, Trapezoid)>)> = None;
    let mut rules = Vec::new();
    let mut section = Section::Top;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| FuzzyError::Config {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err("unterminated section header".into()))?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            section = match parts.as_slice() {
                [kind, name] if kind.eq_ignore_ascii_case("input") => {
                    inputs.push((name.to_string(), Vec::new()));
                    Section::Input(inputs.len() - 1)
                }
                [kind, name] if kind.eq_ignore_ascii_case("output") => {
                    if output.is_some() {
                        return Err(err("only one output section is allowed".into()));
                    }
                    output = Some((name.to_string(), Vec::new()));
                    Section::Output
                }
                [kind] if kind.eq_ignore_ascii_case("rules") => Section::Rules,
                _ => return Err(err(format!("unknown section [{header}]"))),
            };
            continue;
        }

        if let Section::Rules = section {
            let rule = FuzzyRule::parse(line).map_err(|m| err(format!("rule {}: {m}", rules.len() + 1)))?;
            rules.push(rule);
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected `key = value`, found {line:?}")))?;
        match section {
            Section::Top => match key {
                "cog_step" => {
                    cog_step = value
                        .parse()
                        .map_err(|_| err(format!("cog_step {value:?} is not a number")))?;
                }
                _ => return Err(err(format!("unknown setting {key:?}"))),
            },
            Section::Input(_) | Section::Output => {
                let params: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(format!("term {key:?} has a non-numeric parameter")))?;
                let [a, b, c, d] = params[..] else {
                    return Err(err(format!(
                        "term {key:?} needs 4 parameters, found {}",
                        params.len()
                    )));
                };
                let shape = Trapezoid::new(a, b, c, d).map_err(|e| err(e.to_string()))?;
                let terms = match section {
                    Section::Input(i) => &mut inputs[i].1,
                    _ => &mut output.as_mut().expect("output section open").1,
                };
                terms.push((key.to_string(), shape));
            }
            Section::Rules => unreachable!(),
        }
    }

    let inputs = inputs
        .into_iter()
        .map(|(name, terms)| LinguisticVariable::new(name, terms))
        .collect::<Result<Vec<_>, _>>()?;
    let (name, terms) = output.ok_or(FuzzyError::Config {
        line: 0,
        message: "missing [output ...] section".into(),
    })?;
    let output = LinguisticVariable::new(name, terms)?;
    FuzzySystem::new(inputs, output, rules, cog_step)
}
