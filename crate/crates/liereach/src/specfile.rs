//! JSON system descriptions, schedules, targets, and canonical reports.
//!
//! A system file looks like
//!
//! ```json
//! {
//!   "name": "qubit",
//!   "dimension": 2,
//!   "backend": "matrix",
//!   "basis": { "X": [[[0,0],[0,-1]],[[0,-1],[0,0]]] },
//!   "drift": { "name": "drift", "terms": [] },
//!   "controls": [
//!     { "name": "x-drive", "terms": [ { "c": [1,0], "op": "X" } ] }
//!   ],
//!   "initial_state": [[1,0],[0,0]],
//!   "t0": 0,
//!   "sample_times": [0],
//!   "quantum": true
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Matrix entries are row-major.
//! A coefficient term `{"c", "p", "rate", "sym", "op"}` denotes
//! c·tᵖ·e^{rate·t}·a⁽ˢʸᵐ⁾(t) applied to the named operator; `p`, `rate`,
//! and `sym` are optional. Structure-backend files replace `"basis"` with
//! `"names"` plus sparse `"structure_constants"` entries `[i, j, k, value]`
//! meaning [eᵢ, eⱼ] = value·eₖ (+ the other listed terms). Optional keys:
//! `"orbit_dim"` declares the reachable dimension m, `"quantum"` (default
//! true) demands skew-Hermitian generators and a unit initial state, and
//! `"symbol_values"` assigns numbers to the formal symbol's derivatives,
//! for example `{"0": [1,0], "1": [0.5,0]}`.
//!
//! All output goes through [`canonical_json`]: object keys sorted, floating
//! point rendered as `{:.16e}` with negative zero normalized, so equal data
//! always serializes to identical bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::exppoly::{ExpPoly, SymbolValues, Term};
use crate::linalg::max_abs;
use crate::propagate::{ControlSchedule, Segment, Trajectory};
use crate::steering::SteeringResult;
use crate::system::{ControllabilityReport, SystemBackend, SystemSpec};
use crate::tdop::{Backend, TDBody, TDOperator};

/// Allowed deviation of a quantum initial or target state from unit norm
/// before renormalization is refused.
pub const STATE_NORM_SLACK: f64 = 1e-8;
/// Relative skew-Hermiticity tolerance applied to quantum generators.
pub const SKEW_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Canonical writer
// ---------------------------------------------------------------------------

fn fmt_f64(x: f64) -> String {
    debug_assert!(x.is_finite(), "canonical JSON cannot hold {x}");
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else {
        out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, item, indent);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&"  ".repeat(indent + 1));
                    write_value(out, item, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
                out.push_str(": ");
                write_value(out, &map[key.as_str()], indent + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Renders a value as canonical JSON: sorted keys, integers plain, floats
/// as `{:.16e}` with −0.0 normalized, trailing newline. Equal values yield
/// byte-identical output.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

/// Writes canonical JSON to a file.
pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, canonical_json(v)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json(text: &str, path: &Path) -> Result<Value> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Value-walking helpers (every failure names the offending key path)
// ---------------------------------------------------------------------------

fn bad(path: &str, detail: impl Into<String>) -> Error {
    Error::InvalidSpec {
        path: path.to_string(),
        detail: detail.into(),
    }
}

fn as_obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(path, "expected an object"))
}

fn as_arr<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(path, "expected a string"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| bad(path, "expected a finite number"))?;
    if !x.is_finite() {
        return Err(bad(path, "expected a finite number"));
    }
    Ok(x)
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| bad(path, "expected a non-negative integer"))
}

fn as_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| bad(path, "expected a boolean"))
}

fn as_complex(v: &Value, path: &str) -> Result<Complex64> {
    let pair = as_arr(v, path)?;
    if pair.len() != 2 {
        return Err(bad(path, "expected a [re, im] pair"));
    }
    Ok(Complex64::new(
        as_f64(&pair[0], &format!("{path}[0]"))?,
        as_f64(&pair[1], &format!("{path}[1]"))?,
    ))
}

fn req<'a>(m: &'a Map<String, Value>, parent: &str, key: &str) -> Result<&'a Value> {
    m.get(key)
        .ok_or_else(|| bad(&join(parent, key), "missing required key"))
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

// ---------------------------------------------------------------------------
// System files
// ---------------------------------------------------------------------------

fn parse_matrix(v: &Value, path: &str, dim: usize) -> Result<DMatrix<Complex64>> {
    let rows = as_arr(v, path)?;
    if rows.len() != dim {
        return Err(bad(path, format!("expected {dim} rows, got {}", rows.len())));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let cols = as_arr(row, &rpath)?;
        if cols.len() != dim {
            return Err(bad(&rpath, format!("expected {dim} entries, got {}", cols.len())));
        }
        for (j, entry) in cols.iter().enumerate() {
            m[(i, j)] = as_complex(entry, &format!("{rpath}[{j}]"))?;
        }
    }
    Ok(m)
}

fn parse_term_poly(term: &Map<String, Value>, path: &str) -> Result<ExpPoly> {
    let c = as_complex(req(term, path, "c")?, &join(path, "c"))?;
    let p = term
        .get("p")
        .map(|v| as_usize(v, &join(path, "p")))
        .transpose()?
        .unwrap_or(0) as u32;
    let rate = term
        .get("rate")
        .map(|v| as_complex(v, &join(path, "rate")))
        .transpose()?
        .unwrap_or(Complex64::new(0.0, 0.0));
    let mut poly = ExpPoly::term(c, p, rate);
    if let Some(sym) = term.get("sym") {
        let order = as_usize(sym, &join(path, "sym"))? as u32;
        poly = poly.mul(&ExpPoly::symbol(order));
    }
    Ok(poly)
}

enum BasisRef<'a> {
    Matrices(&'a BTreeMap<String, DMatrix<Complex64>>),
    Names(&'a [String]),
}

fn parse_operator(v: &Value, path: &str, basis: &BasisRef, dim: usize) -> Result<TDOperator> {
    let obj = as_obj(v, path)?;
    let name = as_str(req(obj, path, "name")?, &join(path, "name"))?.to_string();
    let terms_path = join(path, "terms");
    let terms = as_arr(req(obj, path, "terms")?, &terms_path)?;
    match basis {
        BasisRef::Matrices(mats) => {
            let mut pairs = Vec::new();
            for (i, tv) in terms.iter().enumerate() {
                let tpath = format!("{terms_path}[{i}]");
                let term = as_obj(tv, &tpath)?;
                let poly = parse_term_poly(term, &tpath)?;
                let op_path = join(&tpath, "op");
                let op = as_str(req(term, &tpath, "op")?, &op_path)?;
                let mat = mats
                    .get(op)
                    .ok_or_else(|| bad(&op_path, format!("unknown basis matrix \"{op}\"")))?;
                pairs.push((poly, mat.clone()));
            }
            Ok(if pairs.is_empty() {
                TDOperator::zero(name, Backend::Matrix, dim)
            } else {
                TDOperator::matrix_terms(name, pairs)
            })
        }
        BasisRef::Names(names) => {
            let mut coords = vec![ExpPoly::zero(); names.len()];
            for (i, tv) in terms.iter().enumerate() {
                let tpath = format!("{terms_path}[{i}]");
                let term = as_obj(tv, &tpath)?;
                let poly = parse_term_poly(term, &tpath)?;
                let op_path = join(&tpath, "op");
                let op = as_str(req(term, &tpath, "op")?, &op_path)?;
                let idx = names
                    .iter()
                    .position(|n| n == op)
                    .ok_or_else(|| bad(&op_path, format!("unknown algebra element \"{op}\"")))?;
                coords[idx] = coords[idx].add(&poly);
            }
            Ok(TDOperator::structure(name, coords))
        }
    }
}

fn parse_state(v: &Value, path: &str, dim: usize) -> Result<DVector<Complex64>> {
    let entries = as_arr(v, path)?;
    if entries.len() != dim {
        return Err(bad(
            path,
            format!("expected {dim} entries, got {}", entries.len()),
        ));
    }
    let mut out = DVector::zeros(dim);
    for (i, e) in entries.iter().enumerate() {
        out[i] = as_complex(e, &format!("{path}[{i}]"))?;
    }
    Ok(out)
}

/// Parses a system description from a JSON value. `default_name` is used
/// when the file does not carry a `"name"` key.
pub fn spec_from_value(root: &Value, default_name: &str) -> Result<SystemSpec> {
    let top = as_obj(root, "")?;
    let name = match top.get("name") {
        Some(v) => as_str(v, "name")?.to_string(),
        None => default_name.to_string(),
    };
    let dim = as_usize(req(top, "", "dimension")?, "dimension")?;
    if dim == 0 {
        return Err(bad("dimension", "must be at least 1"));
    }
    let backend_tag = as_str(req(top, "", "backend")?, "backend")?;

    let (backend, matrices, names) = match backend_tag {
        "matrix" => {
            let basis_v = req(top, "", "basis")?;
            let basis_obj = as_obj(basis_v, "basis")?;
            let mut mats = BTreeMap::new();
            for (key, mv) in basis_obj {
                mats.insert(key.clone(), parse_matrix(mv, &format!("basis.{key}"), dim)?);
            }
            (SystemBackend::Matrix, Some(mats), None)
        }
        "structure" => {
            let names_v = as_arr(req(top, "", "names")?, "names")?;
            let mut names = Vec::with_capacity(names_v.len());
            for (i, nv) in names_v.iter().enumerate() {
                names.push(as_str(nv, &format!("names[{i}]"))?.to_string());
            }
            if names.len() != dim {
                return Err(bad(
                    "names",
                    format!("{} element names but dimension is {dim}", names.len()),
                ));
            }
            let sc_path = "structure_constants";
            let entries_v = as_arr(req(top, "", sc_path)?, sc_path)?;
            let mut entries = Vec::with_capacity(entries_v.len());
            for (i, ev) in entries_v.iter().enumerate() {
                let epath = format!("{sc_path}[{i}]");
                let quad = as_arr(ev, &epath)?;
                if quad.len() != 4 {
                    return Err(bad(&epath, "expected [i, j, k, value]"));
                }
                let gi = as_usize(&quad[0], &format!("{epath}[0]"))?;
                let gj = as_usize(&quad[1], &format!("{epath}[1]"))?;
                let gk = as_usize(&quad[2], &format!("{epath}[2]"))?;
                let gv = as_f64(&quad[3], &format!("{epath}[3]"))?;
                if gi >= dim || gj >= dim || gk >= dim {
                    return Err(bad(&epath, format!("index out of range for dimension {dim}")));
                }
                entries.push((gi, gj, gk, gv));
            }
            let alg = Arc::new(LieAlgebraSpec::from_sparse(names.clone(), &entries)?);
            (SystemBackend::Structure(alg), None, Some(names))
        }
        other => {
            return Err(bad(
                "backend",
                format!("expected \"matrix\" or \"structure\", got \"{other}\""),
            ))
        }
    };

    let basis_ref = match (&matrices, &names) {
        (Some(m), _) => BasisRef::Matrices(m),
        (_, Some(n)) => BasisRef::Names(n),
        _ => unreachable!("one backend branch always fills in"),
    };

    let drift = parse_operator(req(top, "", "drift")?, "drift", &basis_ref, dim)?;
    let controls_v = as_arr(req(top, "", "controls")?, "controls")?;
    let mut controls = Vec::with_capacity(controls_v.len());
    for (i, cv) in controls_v.iter().enumerate() {
        controls.push(parse_operator(cv, &format!("controls[{i}]"), &basis_ref, dim)?);
    }

    let initial_state = top
        .get("initial_state")
        .map(|v| parse_state(v, "initial_state", dim))
        .transpose()?;
    let t0 = top
        .get("t0")
        .map(|v| as_f64(v, "t0"))
        .transpose()?
        .unwrap_or(0.0);
    let st_v = as_arr(req(top, "", "sample_times")?, "sample_times")?;
    let mut sample_times = Vec::with_capacity(st_v.len());
    for (i, tv) in st_v.iter().enumerate() {
        sample_times.push(as_f64(tv, &format!("sample_times[{i}]"))?);
    }
    let declared_orbit_dim = top
        .get("orbit_dim")
        .map(|v| as_usize(v, "orbit_dim"))
        .transpose()?;
    let quantum = top
        .get("quantum")
        .map(|v| as_bool(v, "quantum"))
        .transpose()?
        .unwrap_or(true);
    let mut symbols = SymbolValues::default();
    if let Some(sv) = top.get("symbol_values") {
        let table = as_obj(sv, "symbol_values")?;
        for (key, vv) in table {
            let path = format!("symbol_values.{key}");
            let order: u32 = key
                .parse()
                .map_err(|_| bad(&path, "keys must be derivative orders (\"0\", \"1\", …)"))?;
            symbols.set(order, as_complex(vv, &path)?);
        }
    }

    let mut sys = SystemSpec {
        name,
        dim,
        backend,
        drift,
        controls,
        initial_state,
        t0,
        sample_times,
        declared_orbit_dim,
        quantum,
        symbols,
    };

    // Quantum matrix systems: renormalize a near-unit state, then demand
    // skew-Hermitian generators at every sample time.
    if sys.quantum {
        if let Some(state) = &sys.initial_state {
            let n = state.norm();
            if (n - 1.0).abs() > STATE_NORM_SLACK {
                return Err(Error::NotUnitNorm {
                    norm: n,
                    tol: STATE_NORM_SLACK,
                });
            }
            if n != 1.0 {
                sys.initial_state = Some(state.map(|z| z / Complex64::new(n, 0.0)));
            }
        }
        if matches!(sys.backend, SystemBackend::Matrix) {
            let mut times = vec![sys.t0];
            times.extend_from_slice(&sys.sample_times);
            for op in sys.operators() {
                for &t in &times {
                    let ev = op.evaluate_with_symbols(t, &sys.symbols)?;
                    let tol = SKEW_TOL * max_abs(&ev.matrix).max(1.0);
                    if ev.skew_defect > tol {
                        return Err(Error::NotSkewHermitian {
                            name: op.name.clone(),
                            defect: ev.skew_defect,
                            tol,
                        });
                    }
                }
            }
        }
    }

    sys.validate()?;
    Ok(sys)
}

/// Loads a system description from a JSON file.
pub fn load_spec(path: &Path) -> Result<SystemSpec> {
    let text = read_file(path)?;
    let root = parse_json(&text, path)?;
    let default_name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("spec")
        .to_string();
    spec_from_value(&root, &default_name)
}

// ---------------------------------------------------------------------------
// System → Value (round-trip support and case-study export)
// ---------------------------------------------------------------------------

fn complex_value(z: Complex64) -> Value {
    Value::Array(vec![float_value(z.re), float_value(z.im)])
}

fn float_value(x: f64) -> Value {
    let x = if x == 0.0 { 0.0 } else { x };
    Value::Number(serde_json::Number::from_f64(x).expect("finite float"))
}

fn matrix_value(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_value(m[(i, j)])).collect()))
            .collect(),
    )
}

fn term_value(t: &Term, op: &str) -> Result<Value> {
    let mut obj = Map::new();
    obj.insert("c".into(), complex_value(t.coeff));
    obj.insert("op".into(), Value::String(op.to_string()));
    if t.power > 0 {
        obj.insert("p".into(), Value::Number(t.power.into()));
    }
    if t.rate != Complex64::new(0.0, 0.0) {
        obj.insert("rate".into(), complex_value(t.rate));
    }
    match t.symbol.as_slice() {
        [] => {}
        [(order, 1)] => {
            obj.insert("sym".into(), Value::Number((*order).into()));
        }
        _ => {
            return Err(bad(
                "terms",
                "symbolic factors beyond a single first power cannot be written to a file",
            ))
        }
    }
    Ok(Value::Object(obj))
}

fn operator_value(
    op: &TDOperator,
    matrix_names: Option<&Vec<(DMatrix<Complex64>, String)>>,
    element_names: Option<&[String]>,
) -> Result<Value> {
    let mut terms = Vec::new();
    match (&op.body, matrix_names, element_names) {
        (TDBody::Matrix(pairs), Some(named), _) => {
            for (poly, mat) in pairs {
                if poly.is_zero() {
                    continue;
                }
                let label = &named
                    .iter()
                    .find(|(m, _)| m == mat)
                    .expect("every matrix was named during collection")
                    .1;
                for t in poly.terms() {
                    terms.push(term_value(t, label)?);
                }
            }
        }
        (TDBody::Structure(coords), _, Some(names)) => {
            for (idx, poly) in coords.iter().enumerate() {
                for t in poly.terms() {
                    terms.push(term_value(t, &names[idx])?);
                }
            }
        }
        _ => unreachable!("backend and naming source always match"),
    }
    let mut obj = Map::new();
    obj.insert("name".into(), Value::String(op.name.clone()));
    obj.insert("terms".into(), Value::Array(terms));
    Ok(Value::Object(obj))
}

/// Renders a system back into the file schema. Matrix-backend basis
/// matrices are deduplicated and named `M0`, `M1`, … in first-use order,
/// so writing is deterministic; re-reading reproduces the same system.
pub fn spec_to_value(sys: &SystemSpec) -> Result<Value> {
    let mut top = Map::new();
    top.insert("name".into(), Value::String(sys.name.clone()));
    top.insert("dimension".into(), Value::Number(sys.dim.into()));

    let mut matrix_names: Option<Vec<(DMatrix<Complex64>, String)>> = None;
    let mut element_names: Option<Vec<String>> = None;
    match &sys.backend {
        SystemBackend::Matrix => {
            top.insert("backend".into(), Value::String("matrix".into()));
            let mut named: Vec<(DMatrix<Complex64>, String)> = Vec::new();
            for op in sys.operators() {
                if let TDBody::Matrix(pairs) = &op.body {
                    for (poly, mat) in pairs {
                        if poly.is_zero() {
                            continue;
                        }
                        if !named.iter().any(|(m, _)| m == mat) {
                            let label = format!("M{}", named.len());
                            named.push((mat.clone(), label));
                        }
                    }
                }
            }
            let mut basis = Map::new();
            for (mat, label) in &named {
                basis.insert(label.clone(), matrix_value(mat));
            }
            top.insert("basis".into(), Value::Object(basis));
            matrix_names = Some(named);
        }
        SystemBackend::Structure(alg) => {
            top.insert("backend".into(), Value::String("structure".into()));
            top.insert(
                "names".into(),
                Value::Array(
                    alg.names()
                        .iter()
                        .map(|n| Value::String(n.clone()))
                        .collect(),
                ),
            );
            let n = alg.dim();
            let mut entries = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        let v = alg.c(i, j, k);
                        if v != 0.0 {
                            entries.push(Value::Array(vec![
                                Value::Number(i.into()),
                                Value::Number(j.into()),
                                Value::Number(k.into()),
                                float_value(v),
                            ]));
                        }
                    }
                }
            }
            top.insert("structure_constants".into(), Value::Array(entries));
            element_names = Some(alg.names().to_vec());
        }
    }

    top.insert(
        "drift".into(),
        operator_value(&sys.drift, matrix_names.as_ref(), element_names.as_deref())?,
    );
    let mut controls = Vec::new();
    for op in &sys.controls {
        controls.push(operator_value(
            op,
            matrix_names.as_ref(),
            element_names.as_deref(),
        )?);
    }
    top.insert("controls".into(), Value::Array(controls));

    if let Some(state) = &sys.initial_state {
        top.insert(
            "initial_state".into(),
            Value::Array(state.iter().map(|z| complex_value(*z)).collect()),
        );
    }
    top.insert("t0".into(), float_value(sys.t0));
    top.insert(
        "sample_times".into(),
        Value::Array(sys.sample_times.iter().map(|t| float_value(*t)).collect()),
    );
    if let Some(m) = sys.declared_orbit_dim {
        top.insert("orbit_dim".into(), Value::Number(m.into()));
    }
    top.insert("quantum".into(), Value::Bool(sys.quantum));
    if !sys.symbols.is_empty() {
        let mut table = Map::new();
        for (order, value) in sys.symbols.iter() {
            table.insert(order.to_string(), complex_value(value));
        }
        top.insert("symbol_values".into(), Value::Object(table));
    }
    Ok(Value::Object(top))
}

// ---------------------------------------------------------------------------
// Schedules and targets
// ---------------------------------------------------------------------------

/// Parses a control schedule `{"segments": [{"duration", "amplitudes"}]}`.
pub fn schedule_from_value(root: &Value) -> Result<ControlSchedule> {
    let top = as_obj(root, "")?;
    let segs_v = as_arr(req(top, "", "segments")?, "segments")?;
    let mut segments = Vec::with_capacity(segs_v.len());
    for (i, sv) in segs_v.iter().enumerate() {
        let path = format!("segments[{i}]");
        let seg = as_obj(sv, &path)?;
        let duration = as_f64(req(seg, &path, "duration")?, &join(&path, "duration"))?;
        let amps_path = join(&path, "amplitudes");
        let amps_v = as_arr(req(seg, &path, "amplitudes")?, &amps_path)?;
        let mut amplitudes = Vec::with_capacity(amps_v.len());
        for (j, av) in amps_v.iter().enumerate() {
            amplitudes.push(as_f64(av, &format!("{amps_path}[{j}]"))?);
        }
        segments.push(Segment {
            duration,
            amplitudes,
        });
    }
    Ok(ControlSchedule { segments })
}

/// Loads a schedule file.
pub fn load_schedule(path: &Path) -> Result<ControlSchedule> {
    let text = read_file(path)?;
    schedule_from_value(&parse_json(&text, path)?)
}

/// Renders a schedule into its file schema.
pub fn schedule_to_value(sched: &ControlSchedule) -> Value {
    let mut top = Map::new();
    top.insert(
        "total_time".into(),
        float_value(sched.segments.iter().map(|s| s.duration).sum()),
    );
    top.insert(
        "segments".into(),
        Value::Array(
            sched
                .segments
                .iter()
                .map(|s| {
                    let mut seg = Map::new();
                    seg.insert("duration".into(), float_value(s.duration));
                    seg.insert(
                        "amplitudes".into(),
                        Value::Array(s.amplitudes.iter().map(|a| float_value(*a)).collect()),
                    );
                    Value::Object(seg)
                })
                .collect(),
        ),
    );
    Value::Object(top)
}

/// Loads a target state: either `{"state": [[re,im], …]}` or a bare array.
pub fn load_target(path: &Path, dim: usize) -> Result<DVector<Complex64>> {
    let text = read_file(path)?;
    let root = parse_json(&text, path)?;
    match &root {
        Value::Object(top) => parse_state(req(top, "", "state")?, "state", dim),
        Value::Array(_) => parse_state(&root, "state", dim),
        _ => Err(bad("state", "expected an object with \"state\" or a bare array")),
    }
}

// ---------------------------------------------------------------------------
// Result serialization
// ---------------------------------------------------------------------------

/// Renders an analysis report. Dimension columns use the keys `dim_B`,
/// `dim_C`, `dim_A` and `orbit_B`, `orbit_C`, `orbit_A`.
pub fn report_to_value(report: &ControllabilityReport) -> Value {
    let mut top = Map::new();
    top.insert(
        "version".into(),
        Value::String(env!("CARGO_PKG_VERSION").into()),
    );
    top.insert("system".into(), Value::String(report.system.clone()));
    top.insert("check".into(), Value::String(report.check.label().into()));
    top.insert(
        "verdict".into(),
        Value::String(report.verdict.label().into()),
    );
    top.insert("m".into(), Value::Number(report.m.into()));
    top.insert("m_declared".into(), Value::Bool(report.m_declared));
    top.insert(
        "verification".into(),
        Value::String(report.verification_mode.label().into()),
    );
    top.insert("orbit_surrogate".into(), Value::Bool(report.orbit_surrogate));
    top.insert(
        "flags".into(),
        Value::Array(
            report
                .flags
                .iter()
                .map(|f| Value::String(f.clone()))
                .collect(),
        ),
    );
    let mut opts = Map::new();
    opts.insert(
        "jet_order".into(),
        Value::Number(report.options.jet_order.into()),
    );
    opts.insert("tol".into(), float_value(report.options.tol));
    opts.insert(
        "max_depth".into(),
        Value::Number(report.options.max_depth.into()),
    );
    opts.insert(
        "max_dim".into(),
        Value::Number(report.options.max_dim.into()),
    );
    opts.insert(
        "max_generations".into(),
        Value::Number(report.options.max_generations.into()),
    );
    top.insert("options".into(), Value::Object(opts));

    let samples = report
        .samples
        .iter()
        .map(|s| {
            let mut row = Map::new();
            row.insert("t".into(), float_value(s.t));
            row.insert("dim_B".into(), Value::Number(s.dim_b.into()));
            if let Some(dc) = s.dim_c {
                row.insert("dim_C".into(), Value::Number(dc.into()));
            }
            row.insert("dim_A".into(), Value::Number(s.dim_a.into()));
            row.insert("orbit_B".into(), Value::Number(s.orbit_b.into()));
            if let Some(oc) = s.orbit_c {
                row.insert("orbit_C".into(), Value::Number(oc.into()));
            }
            row.insert("orbit_A".into(), Value::Number(s.orbit_a.into()));
            if let Some(res) = s.ideal_residual {
                row.insert("ideal_residual".into(), float_value(res));
            }
            row.insert("symbolic".into(), Value::Bool(s.symbolic));
            row.insert(
                "flags".into(),
                Value::Array(s.flags.iter().map(|f| Value::String(f.clone())).collect()),
            );
            let mut prov = Map::new();
            for (role, words) in &s.provenance {
                prov.insert(
                    role.clone(),
                    Value::Array(words.iter().map(|w| Value::String(w.clone())).collect()),
                );
            }
            row.insert("provenance".into(), Value::Object(prov));
            Value::Object(row)
        })
        .collect();
    top.insert("samples".into(), Value::Array(samples));
    Value::Object(top)
}

/// Renders a trajectory (`leading` appears only for augmented runs).
pub fn trajectory_to_value(traj: &Trajectory) -> Value {
    let mut top = Map::new();
    top.insert(
        "times".into(),
        Value::Array(traj.times.iter().map(|t| float_value(*t)).collect()),
    );
    top.insert(
        "states".into(),
        Value::Array(
            traj.states
                .iter()
                .map(|s| Value::Array(s.iter().map(|z| complex_value(*z)).collect()))
                .collect(),
        ),
    );
    if let Some(leading) = &traj.leading {
        top.insert(
            "leading".into(),
            Value::Array(leading.iter().map(|t| float_value(*t)).collect()),
        );
    }
    top.insert("norm_drift".into(), float_value(traj.norm_drift));
    Value::Object(top)
}

/// Renders a steering outcome, embedding the winning schedule.
pub fn steering_to_value(res: &SteeringResult) -> Value {
    let mut top = Map::new();
    top.insert("schedule".into(), schedule_to_value(&res.schedule));
    top.insert("fidelity".into(), float_value(res.fidelity));
    top.insert("overlap".into(), complex_value(res.overlap));
    top.insert("evaluations".into(), Value::Number(res.evaluations.into()));
    top.insert("converged".into(), Value::Bool(res.converged));
    top.insert("seed".into(), Value::Number(res.seed.into()));
    top.insert(
        "winning_restart".into(),
        Value::Number(res.winning_restart.into()),
    );
    top.insert(
        "goal".into(),
        float_value(crate::steering::STEERING_GOAL),
    );
    Value::Object(top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn canonical_floats_and_key_order() {
        let mut obj = Map::new();
        obj.insert("b".into(), float_value(-0.0));
        obj.insert("a".into(), Value::Number(3u64.into()));
        obj.insert("c".into(), float_value(1.5e-3));
        let text = canonical_json(&Value::Object(obj));
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        let c = text.find("\"c\"").unwrap();
        assert!(a < b && b < c, "keys must be sorted:\n{text}");
        assert!(text.contains("0.0000000000000000e0"), "−0.0 normalized:\n{text}");
        assert!(text.contains("1.5000000000000000e-3"), "scientific floats:\n{text}");
        assert!(!text.contains("-0.0000000000000000"));
    }

    #[test]
    fn round_trip_is_idempotent_for_every_bundled_system() {
        for case in cases::bundled_systems() {
            let v1 = spec_to_value(&case.system).unwrap();
            let text1 = canonical_json(&v1);
            let reread = spec_from_value(&serde_json::from_str(&text1).unwrap(), "x").unwrap();
            let text2 = canonical_json(&spec_to_value(&reread).unwrap());
            assert_eq!(text1, text2, "canonical form stable for {}", case.slug);
        }
    }

    #[test]
    fn malformed_specs_name_the_offending_path() {
        let missing = serde_json::json!({
            "dimension": 2,
            "backend": "matrix",
            "basis": {},
            "drift": {"name": "d", "terms": []},
            "controls": []
        });
        let err = spec_from_value(&missing, "x").unwrap_err();
        assert!(
            err.to_string().contains("sample_times"),
            "got: {err}"
        );

        let bad_entry = serde_json::json!({
            "dimension": 2,
            "backend": "matrix",
            "basis": {"X": [[[0,0],[0,-1]],[[0,-1],"oops"]]},
            "drift": {"name": "d", "terms": []},
            "controls": [{"name": "u", "terms": [{"c": [1,0], "op": "X"}]}],
            "initial_state": [[1,0],[0,0]],
            "sample_times": [0]
        });
        let err = spec_from_value(&bad_entry, "x").unwrap_err();
        assert!(
            err.to_string().contains("basis.X[1][1]"),
            "got: {err}"
        );
    }

    #[test]
    fn quantum_files_must_be_skew_and_unit_norm() {
        // −iσx is skew-Hermitian; σx alone is not.
        let hermitian = serde_json::json!({
            "dimension": 2,
            "backend": "matrix",
            "basis": {"X": [[[0,0],[1,0]],[[1,0],[0,0]]]},
            "drift": {"name": "d", "terms": []},
            "controls": [{"name": "u", "terms": [{"c": [1,0], "op": "X"}]}],
            "initial_state": [[1,0],[0,0]],
            "sample_times": [0]
        });
        let err = spec_from_value(&hermitian, "x").unwrap_err();
        assert!(matches!(err, Error::NotSkewHermitian { ref name, .. } if name == "u"));

        // The same file is accepted once declared non-quantum.
        let mut relaxed = hermitian.clone();
        relaxed
            .as_object_mut()
            .unwrap()
            .insert("quantum".into(), Value::Bool(false));
        spec_from_value(&relaxed, "x").unwrap();

        // Slightly off-unit states are renormalized; badly off ones refused.
        let mut near = hermitian.clone();
        {
            let top = near.as_object_mut().unwrap();
            top.insert("quantum".into(), Value::Bool(true));
            top.insert(
                "basis".into(),
                serde_json::json!({"X": [[[0,0],[0,-1]],[[0,-1],[0,0]]]}),
            );
            top.insert(
                "initial_state".into(),
                serde_json::json!([[1.000000001, 0], [0, 0]]),
            );
        }
        let sys = spec_from_value(&near, "x").unwrap();
        assert!((sys.initial_state.unwrap().norm() - 1.0).abs() < 1e-14);

        let mut far = near.clone();
        far.as_object_mut()
            .unwrap()
            .insert("initial_state".into(), serde_json::json!([[1.1, 0], [0, 0]]));
        assert!(matches!(
            spec_from_value(&far, "x").unwrap_err(),
            Error::NotUnitNorm { .. }
        ));
    }

    #[test]
    fn schedule_and_target_parsing() {
        let v = serde_json::json!({
            "segments": [
                {"duration": 0.5, "amplitudes": [1.0, -0.25]},
                {"duration": 0.5, "amplitudes": [0.0, 2.0]}
            ]
        });
        let sched = schedule_from_value(&v).unwrap();
        assert_eq!(sched.segments.len(), 2);
        assert_eq!(sched.segments[1].amplitudes, vec![0.0, 2.0]);
        let round = canonical_json(&schedule_to_value(&sched));
        let again = schedule_from_value(&serde_json::from_str(&round).unwrap()).unwrap();
        assert_eq!(sched, again);

        let err = schedule_from_value(&serde_json::json!({"segments": [{"duration": 0.5}]}))
            .unwrap_err();
        assert!(err.to_string().contains("segments[0].amplitudes"), "got: {err}");
    }

    #[test]
    fn report_serialization_uses_spec_keys_and_is_deterministic() {
        use crate::system::{check_sufficiency, AnalysisOptions};
        let case = &cases::bundled_systems()[0];
        let report = check_sufficiency(&case.system, &AnalysisOptions::default()).unwrap();
        let t1 = canonical_json(&report_to_value(&report));
        let report2 = check_sufficiency(&case.system, &AnalysisOptions::default()).unwrap();
        let t2 = canonical_json(&report_to_value(&report2));
        assert_eq!(t1, t2);
        for key in ["\"dim_B\"", "\"dim_C\"", "\"dim_A\"", "\"verdict\"", "\"m\""] {
            assert!(t1.contains(key), "report lacks {key}:\n{t1}");
        }
    }
}
