//! On-disk catalog entries and their conversion into checked, symbol-bound
//! objects from `bisym-core`.
//!
//! Every expression is parsed against a table holding exactly the symbols
//! its field may use, so a stray coordinate is reported with the field path
//! where it occurs.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use bisym_core::exchange::CoordinateMap;
use bisym_core::expr::{Assignment, Expr, ExprMatrix, ParseError, Rational, Symbol, SymbolKind, SymbolTable};
use bisym_core::liealg::{MatrixRep, StructureConstants};
use bisym_core::rmatrix::{RMatrix, Variance};
use bisym_core::symplectic::{PoissonField, SymplecticForm};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("`{field}`: {source}")]
    Expression { field: String, source: ParseError },
    #[error("`{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    title: String,
    parameters: Vec<RawParameter>,
    coordinates: RawCoordinates,
    #[serde(default = "yes")]
    poisson_lie: bool,
    algebra: RawAlgebra,
    dual: RawAlgebra,
    symmetry_target: Option<RawAlgebra>,
    symplectic: Sides<Vec<(usize, usize, String)>>,
    r_matrix: Option<RawRMatrices>,
    representation: Option<RawRepresentation>,
    poisson: Sides<Vec<(usize, usize, String)>>,
    charts: Sides<Vec<String>>,
    isomorphism: Vec<Vec<String>>,
    coordinate_map: Vec<String>,
    dynamical_functions: Sides<Vec<String>>,
    invariants: Option<Sides<Vec<String>>>,
    involutive_families: OptionalSides<Vec<Vec<usize>>>,
    chart_map: RawChartMap,
    classification: Option<RawClassification>,
    flow: Option<RawFlow>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameter {
    name: String,
    range: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoordinates {
    g: Vec<String>,
    gt: Vec<String>,
    chart: Vec<String>,
    chart_tilde: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    name: String,
    brackets: Vec<(usize, usize, usize, String)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sides<T> {
    g: T,
    gt: T,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionalSides<T> {
    g: Option<T>,
    gt: Option<T>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRMatrices {
    dual: Option<RawRMatrix>,
    algebra: Option<RawRMatrix>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRMatrix {
    variance: RawVariance,
    wedges: Vec<(usize, usize, String)>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawVariance {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRepresentation {
    dual: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartMapDirection {
    /// `z̃ = φ(z)`.
    ChartTildeOfChart,
    /// `z = φ(z̃)`.
    ChartOfChartTilde,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChartMap {
    direction: ChartMapDirection,
    exprs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    DynamicalFunctions,
    Invariants,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassification {
    families: FamilyKind,
    bracket_preserving: bool,
    invariant_mapping: bool,
    mapping: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    start: Option<OptionalSides<Vec<String>>>,
    /// Parameter values used while integrating; unlisted parameters are 1.
    #[serde(default)]
    parameters: BTreeMap<String, String>,
}

/// Which of the two groups a side-specific field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    G,
    Gt,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::G, Side::Gt];

    pub fn key(self) -> &'static str {
        match self {
            Side::G => "g",
            Side::Gt => "gt",
        }
    }
}

/// One named algebra table.
#[derive(Debug, Clone, PartialEq)]
pub struct Algebra {
    pub name: String,
    pub constants: StructureConstants,
}

/// Data attached to one group of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SideData {
    /// Group coordinates.
    pub coords: Vec<Symbol>,
    /// Darboux chart symbols.
    pub chart_symbols: Vec<Symbol>,
    pub omega: SymplecticForm,
    pub poisson: PoissonField,
    /// Chart functions over `coords`.
    pub chart: Vec<Expr>,
    /// Dynamical functions as written (over chart symbols and/or coordinates).
    pub functions: Vec<Expr>,
    pub invariants: Option<Vec<Expr>>,
    /// Zero-based, each sorted, in lexicographic order.
    pub families: Option<Vec<Vec<usize>>>,
    pub flow_start: Option<Vec<Rational>>,
}

impl SideData {
    /// `z → chart(x)` substitution.
    pub fn chart_substitution(&self) -> HashMap<Symbol, Expr> {
        self.chart_symbols.iter().cloned().zip(self.chart.iter().cloned()).collect()
    }

    /// `e` with chart symbols replaced by their coordinate expressions.
    pub fn on_coordinates(&self, e: &Expr) -> Expr {
        e.substitute(&self.chart_substitution())
    }

    pub fn functions_on_coordinates(&self) -> Vec<Expr> {
        self.functions.iter().map(|e| self.on_coordinates(e)).collect()
    }

    pub fn invariants_on_coordinates(&self) -> Option<Vec<Expr>> {
        self.invariants
            .as_ref()
            .map(|v| v.iter().map(|e| self.on_coordinates(e)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartMap {
    pub direction: ChartMapDirection,
    pub map: CoordinateMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedClassification {
    pub families: FamilyKind,
    pub bracket_preserving: bool,
    pub invariant_mapping: bool,
    pub mapping: Option<ExprMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub symbol: Symbol,
    pub range: String,
}

/// A fully parsed catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: String,
    pub title: String,
    pub parameters: Vec<Parameter>,
    pub poisson_lie: bool,
    pub algebra: Algebra,
    pub dual: Algebra,
    /// Constants realized by the G-side functions; the dual table unless
    /// given separately.
    pub symmetry_target: Algebra,
    /// `r̃_{ij}` on the dual algebra.
    pub r_dual: Option<RMatrix>,
    /// `r^{ij}` on the algebra.
    pub r_algebra: Option<RMatrix>,
    /// Representation of the dual algebra.
    pub rep_dual: Option<MatrixRep>,
    pub g: SideData,
    pub gt: SideData,
    pub isomorphism: ExprMatrix,
    /// `x(y)`.
    pub coordinate_map: CoordinateMap,
    pub chart_map: ChartMap,
    pub classification: Option<ExpectedClassification>,
    /// Fixed parameter values for flow integration.
    pub flow_parameters: Assignment,
}

impl CatalogEntry {
    pub fn side(&self, s: Side) -> &SideData {
        match s {
            Side::G => &self.g,
            Side::Gt => &self.gt,
        }
    }

    pub fn parameter_symbols(&self) -> Vec<Symbol> {
        self.parameters.iter().map(|p| p.symbol.clone()).collect()
    }

    /// Dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.algebra.constants.dim()
    }
}

/// Reads and parses one entry.
pub fn load_entry(path: &Path) -> Result<CatalogEntry, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_entry(&text)
}

/// Parses an entry from JSON text.
pub fn parse_entry(text: &str) -> Result<CatalogEntry, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawEntry = serde_path_to_error::deserialize(de).map_err(|e| LoadError::Schema {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    build(raw)
}

/// Files with a `.json` extension in `dir`, sorted by name.
pub fn catalog_files(dir: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let rd = fs::read_dir(dir).map_err(|source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for item in rd {
        let item = item.map_err(|source| LoadError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let p = item.path();
        if p.extension().is_some_and(|e| e == "json") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Directory of the entries shipped with this crate.
pub fn bundled_catalog_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("catalog")
}

struct Scope {
    table: SymbolTable,
}

impl Scope {
    fn new(groups: &[&[Symbol]]) -> Self {
        let mut table = SymbolTable::new();
        for g in groups {
            for s in *g {
                table.declare(s.name(), s.kind()).expect("names validated on declaration");
            }
        }
        Self { table }
    }

    fn expr(&self, field: &str, text: &str) -> Result<Expr, LoadError> {
        self.table.parse(text).map_err(|source| LoadError::Expression {
            field: field.to_string(),
            source,
        })
    }

    fn list(&self, field: &str, texts: &[String]) -> Result<Vec<Expr>, LoadError> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| self.expr(&format!("{field}[{i}]"), t))
            .collect()
    }

    fn matrix(&self, field: &str, rows: &[Vec<String>], n: usize) -> Result<ExprMatrix, LoadError> {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(invalid(field, format!("expected a {n}x{n} matrix")));
        }
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, r)| self.list(&format!("{field}[{i}]"), r))
            .collect::<Result<Vec<_>, _>>()?;
        ExprMatrix::from_rows(parsed).map_err(|e| invalid(field, e.to_string()))
    }
}

fn declare(field: &str, names: &[String], kind: SymbolKind, seen: &mut BTreeMap<String, String>) -> Result<Vec<Symbol>, LoadError> {
    let mut table = SymbolTable::new();
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let f = format!("{field}[{i}]");
            if let Some(prev) = seen.insert(n.clone(), f.clone()) {
                return Err(invalid(f, format!("`{n}` already declared at `{prev}`")));
            }
            table.declare(n, kind).map_err(|source| LoadError::Expression { field: f, source })
        })
        .collect()
}

/// One-based index to zero-based, bounded by `dim`.
fn index(field: &str, i: usize, dim: usize) -> Result<usize, LoadError> {
    if i == 0 || i > dim {
        Err(invalid(field, format!("index {i} outside 1..={dim}")))
    } else {
        Ok(i - 1)
    }
}

fn algebra(field: &str, raw: &RawAlgebra, dim: usize, scope: &Scope) -> Result<Algebra, LoadError> {
    let mut entries = Vec::with_capacity(raw.brackets.len());
    for (n, (i, j, k, v)) in raw.brackets.iter().enumerate() {
        let f = format!("{field}.brackets[{n}]");
        let (i, j, k) = (index(&f, *i, dim)?, index(&f, *j, dim)?, index(&f, *k, dim)?);
        if i == j {
            return Err(invalid(f, "a bracket needs two distinct generators"));
        }
        entries.push((i, j, k, scope.expr(&f, v)?));
    }
    let constants = StructureConstants::from_brackets(dim, &entries).map_err(|e| invalid(field, e.to_string()))?;
    Ok(Algebra {
        name: raw.name.clone(),
        constants,
    })
}

fn upper_entries(
    field: &str,
    raw: &[(usize, usize, String)],
    dim: usize,
    scope: &Scope,
) -> Result<Vec<(usize, usize, Expr)>, LoadError> {
    raw.iter()
        .enumerate()
        .map(|(n, (i, j, v))| {
            let f = format!("{field}[{n}]");
            let (i, j) = (index(&f, *i, dim)?, index(&f, *j, dim)?);
            if i >= j {
                return Err(invalid(f, "entries must list the upper triangle (i < j)"));
            }
            Ok((i, j, scope.expr(&f, v)?))
        })
        .collect()
}

fn rmatrix(field: &str, raw: &RawRMatrix, dim: usize, scope: &Scope, expected: RawVariance) -> Result<RMatrix, LoadError> {
    let variance = match (raw.variance, expected) {
        (RawVariance::Upper, RawVariance::Upper) => Variance::Upper,
        (RawVariance::Lower, RawVariance::Lower) => Variance::Lower,
        _ => {
            return Err(invalid(
                format!("{field}.variance"),
                "the dual r-matrix carries lower indices, the algebra one upper indices",
            ))
        }
    };
    let wedges = upper_entries(&format!("{field}.wedges"), &raw.wedges, dim, scope)?;
    RMatrix::from_wedges(dim, variance, &wedges).map_err(|e| invalid(field, e.to_string()))
}

fn families(field: &str, raw: &Option<Vec<Vec<usize>>>, count: usize) -> Result<Option<Vec<Vec<usize>>>, LoadError> {
    let Some(raw) = raw else { return Ok(None) };
    let mut out = Vec::with_capacity(raw.len());
    for (n, fam) in raw.iter().enumerate() {
        let f = format!("{field}[{n}]");
        let mut v = fam.iter().map(|&i| index(&f, i, count)).collect::<Result<Vec<_>, _>>()?;
        v.sort_unstable();
        v.dedup();
        if v.len() < 2 {
            return Err(invalid(f, "a family needs at least two distinct members"));
        }
        out.push(v);
    }
    out.sort();
    Ok(Some(out))
}

fn rationals(field: &str, raw: &Option<Vec<String>>, dim: usize) -> Result<Option<Vec<Rational>>, LoadError> {
    let Some(raw) = raw else { return Ok(None) };
    if raw.len() != dim {
        return Err(invalid(field, format!("expected {dim} values")));
    }
    let empty = Scope::new(&[]);
    raw.iter()
        .enumerate()
        .map(|(i, t)| {
            let f = format!("{field}[{i}]");
            empty
                .expr(&f, t)?
                .eval_exact(&Assignment::new())
                .map_err(|e| invalid(f, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn expect_len(field: &str, got: usize, want: usize) -> Result<(), LoadError> {
    if got == want {
        Ok(())
    } else {
        Err(invalid(field, format!("has {got} items, expected {want}")))
    }
}

fn build(raw: RawEntry) -> Result<CatalogEntry, LoadError> {
    let mut seen = BTreeMap::new();
    let params = declare(
        "parameters",
        &raw.parameters.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
        SymbolKind::Parameter,
        &mut seen,
    )?;
    let c = &raw.coordinates;
    let x = declare("coordinates.g", &c.g, SymbolKind::Coordinate, &mut seen)?;
    let y = declare("coordinates.gt", &c.gt, SymbolKind::Coordinate, &mut seen)?;
    let z = declare("coordinates.chart", &c.chart, SymbolKind::Coordinate, &mut seen)?;
    let zt = declare("coordinates.chart_tilde", &c.chart_tilde, SymbolKind::Coordinate, &mut seen)?;
    let dim = x.len();
    for (field, len) in [
        ("coordinates.gt", y.len()),
        ("coordinates.chart", z.len()),
        ("coordinates.chart_tilde", zt.len()),
    ] {
        expect_len(field, len, dim)?;
    }
    if dim == 0 || dim % 2 != 0 {
        return Err(invalid("coordinates.g", "dimension must be even and positive"));
    }

    let pscope = Scope::new(&[&params]);
    let alg = algebra("algebra", &raw.algebra, dim, &pscope)?;
    let dual = algebra("dual", &raw.dual, dim, &pscope)?;
    let symmetry_target = match &raw.symmetry_target {
        Some(t) => algebra("symmetry_target", t, dim, &pscope)?,
        None => dual.clone(),
    };

    let (r_dual, r_algebra) = match &raw.r_matrix {
        None => (None, None),
        Some(rm) => (
            rm.dual
                .as_ref()
                .map(|r| rmatrix("r_matrix.dual", r, dim, &pscope, RawVariance::Lower))
                .transpose()?,
            rm.algebra
                .as_ref()
                .map(|r| rmatrix("r_matrix.algebra", r, dim, &pscope, RawVariance::Upper))
                .transpose()?,
        ),
    };
    let rep_dual = match &raw.representation {
        None => None,
        Some(rep) => {
            expect_len("representation.dual", rep.dual.len(), dim)?;
            let size = rep.dual.first().map_or(0, Vec::len);
            let mats = rep
                .dual
                .iter()
                .enumerate()
                .map(|(i, m)| pscope.matrix(&format!("representation.dual[{i}]"), m, size))
                .collect::<Result<Vec<_>, _>>()?;
            Some(MatrixRep::new(mats).map_err(|e| invalid("representation.dual", e.to_string()))?)
        }
    };
    if rep_dual.is_some() && r_dual.is_none() {
        return Err(invalid("representation", "a representation requires r_matrix.dual"));
    }

    let isomorphism = pscope.matrix("isomorphism", &raw.isomorphism, dim)?;
    let yscope = Scope::new(&[&y, &params]);
    expect_len("coordinate_map", raw.coordinate_map.len(), dim)?;
    let map_exprs = yscope.list("coordinate_map", &raw.coordinate_map)?;
    let coordinate_map = CoordinateMap::new(y.clone(), x.clone(), map_exprs).map_err(|e| invalid("coordinate_map", e.to_string()))?;

    let side = |s: Side, coords: &[Symbol], chart_symbols: &[Symbol]| -> Result<SideData, LoadError> {
        let k = s.key();
        let cscope = Scope::new(&[coords, &params]);
        let fscope = Scope::new(&[coords, chart_symbols, &params]);
        let omega_raw = match s {
            Side::G => &raw.symplectic.g,
            Side::Gt => &raw.symplectic.gt,
        };
        let omega = SymplecticForm::from_upper(dim, &upper_entries(&format!("symplectic.{k}"), omega_raw, dim, &pscope)?)
            .map_err(|e| invalid(format!("symplectic.{k}"), e.to_string()))?;
        let p_raw = match s {
            Side::G => &raw.poisson.g,
            Side::Gt => &raw.poisson.gt,
        };
        let poisson = PoissonField::from_upper(coords.to_vec(), &upper_entries(&format!("poisson.{k}"), p_raw, dim, &cscope)?)
            .map_err(|e| invalid(format!("poisson.{k}"), e.to_string()))?;
        let chart_raw = match s {
            Side::G => &raw.charts.g,
            Side::Gt => &raw.charts.gt,
        };
        expect_len(&format!("charts.{k}"), chart_raw.len(), dim)?;
        let chart = cscope.list(&format!("charts.{k}"), chart_raw)?;
        let f_raw = match s {
            Side::G => &raw.dynamical_functions.g,
            Side::Gt => &raw.dynamical_functions.gt,
        };
        expect_len(&format!("dynamical_functions.{k}"), f_raw.len(), dim)?;
        let functions = fscope.list(&format!("dynamical_functions.{k}"), f_raw)?;
        let invariants = raw
            .invariants
            .as_ref()
            .map(|inv| {
                let v = match s {
                    Side::G => &inv.g,
                    Side::Gt => &inv.gt,
                };
                fscope.list(&format!("invariants.{k}"), v)
            })
            .transpose()?;
        let fam_raw = match s {
            Side::G => &raw.involutive_families.g,
            Side::Gt => &raw.involutive_families.gt,
        };
        let families = families(&format!("involutive_families.{k}"), fam_raw, dim)?;
        let flow_start = match &raw.flow {
            None => None,
            Some(fl) => {
                let st = match (s, &fl.start) {
                    (_, None) => &None,
                    (Side::G, Some(st)) => &st.g,
                    (Side::Gt, Some(st)) => &st.gt,
                };
                rationals(&format!("flow.start.{k}"), st, dim)?
            }
        };
        Ok(SideData {
            coords: coords.to_vec(),
            chart_symbols: chart_symbols.to_vec(),
            omega,
            poisson,
            chart,
            functions,
            invariants,
            families,
            flow_start,
        })
    };
    let g = side(Side::G, &x, &z)?;
    let gt = side(Side::Gt, &y, &zt)?;

    expect_len("chart_map.exprs", raw.chart_map.exprs.len(), dim)?;
    let (src, dst) = match raw.chart_map.direction {
        ChartMapDirection::ChartTildeOfChart => (&z, &zt),
        ChartMapDirection::ChartOfChartTilde => (&zt, &z),
    };
    let cm_exprs = Scope::new(&[src, &params]).list("chart_map.exprs", &raw.chart_map.exprs)?;
    let chart_map = ChartMap {
        direction: raw.chart_map.direction,
        map: CoordinateMap::new(src.clone(), dst.clone(), cm_exprs).map_err(|e| invalid("chart_map", e.to_string()))?,
    };

    let classification = raw
        .classification
        .as_ref()
        .map(|cl| -> Result<_, LoadError> {
            if cl.families == FamilyKind::Invariants && raw.invariants.is_none() {
                return Err(invalid("classification.families", "entry has no invariants"));
            }
            let mapping = cl
                .mapping
                .as_ref()
                .map(|m| {
                    let rows = match cl.families {
                        FamilyKind::DynamicalFunctions => dim,
                        FamilyKind::Invariants => raw.invariants.as_ref().map_or(0, |i| i.g.len()),
                    };
                    pscope.matrix("classification.mapping", m, rows)
                })
                .transpose()?;
            Ok(ExpectedClassification {
                families: cl.families,
                bracket_preserving: cl.bracket_preserving,
                invariant_mapping: cl.invariant_mapping,
                mapping,
            })
        })
        .transpose()?;

    let mut flow_parameters = Assignment::new();
    for p in &params {
        flow_parameters.set_exact(p, Rational::from_integer(1.into()));
    }
    if let Some(fl) = &raw.flow {
        for (name, text) in &fl.parameters {
            let field = format!("flow.parameters.{name}");
            let sym = params
                .iter()
                .find(|p| p.name() == name)
                .ok_or_else(|| invalid(&field, format!("`{name}` is not a declared parameter")))?;
            let value = Scope::new(&[])
                .expr(&field, text)?
                .eval_exact(&Assignment::new())
                .map_err(|e| invalid(&field, e.to_string()))?;
            flow_parameters.set_exact(sym, value);
        }
    }

    Ok(CatalogEntry {
        id: raw.id,
        title: raw.title,
        parameters: params
            .into_iter()
            .zip(raw.parameters)
            .map(|(symbol, p)| Parameter { symbol, range: p.range })
            .collect(),
        poisson_lie: raw.poisson_lie,
        algebra: alg,
        dual,
        symmetry_target,
        r_dual,
        r_algebra,
        rep_dual,
        g,
        gt,
        isomorphism,
        coordinate_map,
        chart_map,
        classification,
        flow_parameters,
    })
}
