//! JSON and CSV interchange for spaces, groups, measures, graphs, and chains.
//!
//! Parsing is strict: unknown structure is a parse error with the line and
//! column of the offending token, and decoded data passes through the same
//! validating constructors used everywhere else.
//!
//! Emission is canonical so that reports are byte-deterministic: object keys
//! are sorted, finite floats are printed with 17 significant digits in
//! scientific notation, and infinities appear as the strings `"inf"` and
//! `"-inf"`. Canonical output re-parses to a bitwise-equal value.

use serde::Deserialize;
use thiserror::Error;

use crate::foliation::LeafPartition;
use crate::graph::WeightedGraph;
use crate::perm::Perm;
use crate::space::Space;
use crate::transport::Measure;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
}

impl IoError {
    fn invalid(what: &'static str, err: impl std::fmt::Display) -> Self {
        IoError::Invalid { what, message: err.to_string() }
    }
}

fn decode<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        let mut message = e.to_string();
        let suffix = format!(" at line {line} column {column}");
        if message.ends_with(&suffix) {
            message.truncate(message.len() - suffix.len());
        }
        IoError::Parse { line, column, message }
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    labels: Option<Vec<String>>,
    distance: Vec<Vec<f64>>,
    measure: Vec<f64>,
}

/// Reads `{"labels": [...], "distance": [[...]], "measure": [...]}`.
/// Labels default to the row indices when absent.
pub fn parse_space(text: &str) -> Result<Space, IoError> {
    let file: SpaceFile = decode(text)?;
    let labels = file
        .labels
        .unwrap_or_else(|| (0..file.distance.len()).map(|i| i.to_string()).collect());
    Space::new(labels, file.distance, file.measure).map_err(|e| IoError::invalid("space", e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    generators: Vec<Vec<usize>>,
}

/// Reads `{"generators": [[perm as 0-based index array], ...]}` acting on
/// `degree` points. An empty generator list denotes the trivial group.
pub fn parse_group(text: &str, degree: usize) -> Result<Vec<Perm>, IoError> {
    let file: GroupFile = decode(text)?;
    file.generators
        .into_iter()
        .map(|image| Perm::new(image, degree).map_err(|e| IoError::invalid("generator", e)))
        .collect()
}

/// Reads a bare JSON weight array as a probability measure on `len` points.
pub fn parse_measure(text: &str, len: usize) -> Result<Measure, IoError> {
    let weights: Vec<f64> = decode(text)?;
    if weights.len() != len {
        return Err(IoError::Invalid {
            what: "measure",
            message: format!("expected {len} weights, got {}", weights.len()),
        });
    }
    Measure::new(weights).map_err(|e| IoError::invalid("measure", e))
}

/// Reads a bare JSON array of `len` finite nonnegative values. Unlike
/// [`parse_measure`] the total is unconstrained, so the result can serve as
/// a density against a reference measure.
pub fn parse_density(text: &str, len: usize) -> Result<Vec<f64>, IoError> {
    let values: Vec<f64> = decode(text)?;
    if values.len() != len {
        return Err(IoError::Invalid {
            what: "density",
            message: format!("expected {len} values, got {}", values.len()),
        });
    }
    for (index, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(IoError::Invalid {
                what: "density",
                message: format!("entry {index} is {v}, expected finite and nonnegative"),
            });
        }
    }
    Ok(values)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionFile {
    leaves: Vec<Vec<usize>>,
    conditionals: Option<Vec<Vec<f64>>>,
}

/// Reads `{"leaves": [[indices], ...], "conditionals": optional}` against a
/// previously parsed space.
pub fn parse_partition(text: &str, space: &Space) -> Result<LeafPartition, IoError> {
    let file: PartitionFile = decode(text)?;
    LeafPartition::new(space, file.leaves, file.conditionals)
        .map_err(|e| IoError::invalid("partition", e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
    measure: Option<Vec<f64>>,
}

/// Reads `{"vertices": [...], "edges": [[i, j, weight], ...], "measure": optional}`.
/// A missing measure defaults to the weighted degree.
pub fn parse_graph(text: &str) -> Result<WeightedGraph, IoError> {
    let file: GraphFile = decode(text)?;
    let n = file.vertices.len();
    let skeleton = WeightedGraph::from_edges(n, &file.edges, file.measure)
        .map_err(|e| IoError::invalid("graph", e))?;
    let omega = (0..n).map(|i| skeleton.omega_rows()[i].clone()).collect();
    WeightedGraph::new(file.vertices, omega, skeleton.masses().to_vec())
        .map_err(|e| IoError::invalid("graph", e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    kernel: Vec<Vec<f64>>,
    stationary: Option<Vec<f64>>,
}

/// Reads `{"kernel": [[row], ...], "stationary": optional}`. Validation
/// against a space or as a reversible chain is the caller's concern, since
/// the same file feeds both.
pub fn parse_chain(text: &str) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>), IoError> {
    let file: ChainFile = decode(text)?;
    Ok((file.kernel, file.stationary))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingInput {
    plan: Vec<Vec<f64>>,
    cost: f64,
    row_residual: Vec<f64>,
    column_residual: Vec<f64>,
}

/// A parsed coupling file: the transport plan, its cost, and the recorded
/// marginal residuals, exactly as written by [`emit_coupling`].
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFile {
    pub plan: Vec<Vec<f64>>,
    pub cost: f64,
    pub row_residual: Vec<f64>,
    pub column_residual: Vec<f64>,
}

/// Reads `{"plan": [[...]], "cost": c, "row_residual": [...],
/// "column_residual": [...]}` and checks the shapes agree.
pub fn parse_coupling(text: &str) -> Result<CouplingFile, IoError> {
    let file: CouplingInput = decode(text)?;
    let rows = file.plan.len();
    let cols = file.plan.first().map_or(0, Vec::len);
    if file.plan.iter().any(|r| r.len() != cols) {
        return Err(IoError::Invalid { what: "coupling", message: "ragged plan rows".into() });
    }
    if file.plan.iter().flatten().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(IoError::Invalid {
            what: "coupling",
            message: "plan entries must be finite and nonnegative".into(),
        });
    }
    if file.row_residual.len() != rows || file.column_residual.len() != cols {
        return Err(IoError::Invalid {
            what: "coupling",
            message: format!(
                "residual lengths {} x {} do not match the {rows} x {cols} plan",
                file.row_residual.len(),
                file.column_residual.len()
            ),
        });
    }
    Ok(CouplingFile {
        plan: file.plan,
        cost: file.cost,
        row_residual: file.row_residual,
        column_residual: file.column_residual,
    })
}

/// A JSON value restricted to what canonical emission needs. Object keys
/// are sorted at write time; insertion order never matters.
#[derive(Debug, Clone)]
pub enum Json {
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn floats(values: impl IntoIterator<Item = f64>) -> Json {
        Json::Arr(values.into_iter().map(Json::Num).collect())
    }

    pub fn float_rows<R: AsRef<[f64]>>(rows: impl IntoIterator<Item = R>) -> Json {
        Json::Arr(rows.into_iter().map(|r| Json::floats(r.as_ref().iter().copied())).collect())
    }

    pub fn strings<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Json {
        Json::Arr(values.into_iter().map(|s| Json::Str(s.into())).collect())
    }

    /// Serializes with sorted keys and a trailing newline.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, depth: usize) {
        match self {
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(v) => write_float(out, *v),
            Json::Str(s) => write_string(out, s),
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                // Arrays of scalars stay on one line; nested structure wraps.
                let flat = items
                    .iter()
                    .all(|it| !matches!(it, Json::Arr(_) | Json::Obj(_)));
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    if !flat {
                        newline(out, depth + 1);
                    }
                    item.write(out, depth + 1);
                }
                if !flat {
                    newline(out, depth);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                let mut order: Vec<usize> = (0..fields.len()).collect();
                order.sort_by(|&a, &b| fields[a].0.cmp(&fields[b].0));
                out.push('{');
                for (k, &idx) in order.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    newline(out, depth + 1);
                    write_string(out, &fields[idx].0);
                    out.push_str(": ");
                    fields[idx].1.write(out, depth + 1);
                }
                newline(out, depth);
                out.push('}');
            }
        }
    }
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_float(out: &mut String, v: f64) {
    out.push_str(&format_float(v));
}

/// Canonical float rendering: 17 significant digits in scientific notation
/// for finite values, quoted `"inf"`, `"-inf"`, or `"nan"` otherwise. The
/// finite form survives a parse round trip bit for bit.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "\"nan\"".to_string()
    } else if v > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

/// Emits a space in the schema accepted by [`parse_space`].
pub fn emit_space(space: &Space) -> String {
    Json::Obj(vec![
        ("labels".into(), Json::strings(space.labels().iter().cloned())),
        ("distance".into(), Json::float_rows(space.distance_rows())),
        ("measure".into(), Json::floats(space.masses().iter().copied())),
    ])
    .to_canonical_string()
}

/// Emits a graph in the schema accepted by [`parse_graph`]. Edges are listed
/// once per unordered pair, ascending.
pub fn emit_graph(graph: &WeightedGraph) -> String {
    let mut edges = Vec::new();
    for i in 0..graph.len() {
        for j in i + 1..graph.len() {
            let w = graph.omega(i, j);
            if w > 0.0 {
                edges.push(Json::Arr(vec![
                    Json::Int(i as i64),
                    Json::Int(j as i64),
                    Json::Num(w),
                ]));
            }
        }
    }
    Json::Obj(vec![
        ("vertices".into(), Json::strings(graph.labels().iter().cloned())),
        ("edges".into(), Json::Arr(edges)),
        ("measure".into(), Json::floats(graph.masses().iter().copied())),
    ])
    .to_canonical_string()
}

/// Emits a chain in the schema accepted by [`parse_chain`].
pub fn emit_chain(kernel: &[Vec<f64>], stationary: Option<&[f64]>) -> String {
    let mut fields = vec![("kernel".into(), Json::float_rows(kernel))];
    if let Some(pi) = stationary {
        fields.push(("stationary".into(), Json::floats(pi.iter().copied())));
    }
    Json::Obj(fields).to_canonical_string()
}

/// Emits a bare weight array in the schema accepted by [`parse_measure`].
pub fn emit_measure(measure: &Measure) -> String {
    Json::floats(measure.weights().iter().copied()).to_canonical_string()
}

/// Emits a coupling table together with its marginal residuals, so a reader
/// can audit feasibility without recomputing row and column sums.
pub fn emit_coupling(
    plan: &[Vec<f64>],
    cost: f64,
    row_residual: &[f64],
    column_residual: &[f64],
) -> String {
    Json::Obj(vec![
        ("plan".into(), Json::float_rows(plan)),
        ("cost".into(), Json::Num(cost)),
        ("row_residual".into(), Json::floats(row_residual.iter().copied())),
        ("column_residual".into(), Json::floats(column_residual.iter().copied())),
    ])
    .to_canonical_string()
}

/// One row of a curvature table: a vertex label with its dimension parameter
/// and curvature bound.
#[derive(Debug, Clone)]
pub struct CurvatureRow {
    pub vertex: String,
    pub dimension: f64,
    pub curvature: f64,
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Emits `vertex,N,K` rows. Labels containing commas or quotes are quoted.
pub fn curvature_csv(rows: &[CurvatureRow]) -> String {
    let mut out = String::from("vertex,N,K\n");
    for row in rows {
        let label = if row.vertex.contains([',', '"', '\n']) {
            format!("\"{}\"", row.vertex.replace('"', "\"\""))
        } else {
            row.vertex.clone()
        };
        out.push_str(&format!(
            "{},{},{}\n",
            label,
            csv_float(row.dimension),
            csv_float(row.curvature)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use rand::Rng;

    #[test]
    fn spaces_round_trip_bitwise() {
        let mut rng = gen::rng(11);
        for _ in 0..20 {
            let n = rng.gen_range(1..7);
            let space = gen::dyadic_space(&mut rng, n);
            let text = emit_space(&space);
            let back = parse_space(&text).expect("canonical space re-parses");
            assert_eq!(back.labels(), space.labels());
            assert_eq!(back.distance_rows(), space.distance_rows());
            assert_eq!(back.masses(), space.masses());
            assert_eq!(emit_space(&back), text);
        }
    }

    #[test]
    fn space_labels_default_to_indices() {
        let text = r#"{"distance": [[0.0, 1.0], [1.0, 0.0]], "measure": [1.0, 1.0]}"#;
        let space = parse_space(text).unwrap();
        assert_eq!(space.labels(), ["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn malformed_json_reports_line_and_column() {
        let text = "{\"distance\": [[0.0, 1.0],\n  [1.0,]]}";
        match parse_space(text) {
            Err(IoError::Parse { line, column, message }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
                assert!(!message.is_empty());
                assert!(!message.contains("at line"), "location stripped from {message:?}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_space_data_is_rejected_after_parsing() {
        let text = r#"{"distance": [[0.0, 1.0], [1.0, 0.0], [9.0, 9.0]], "measure": [1.0, 1.0, 1.0]}"#;
        match parse_space(text) {
            Err(IoError::Invalid { what: "space", .. }) => {}
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let text = r#"{"distance": [[0.0]], "measure": [1.0], "extra": 3}"#;
        assert!(matches!(parse_space(text), Err(IoError::Parse { .. })));
    }

    #[test]
    fn groups_parse_and_reject_non_permutations() {
        let perms = parse_group(r#"{"generators": [[1, 0, 2], [2, 0, 1]]}"#, 3).unwrap();
        assert_eq!(perms.len(), 2);
        assert_eq!(perms[0].apply(0), 1);
        assert!(parse_group(r#"{"generators": []}"#, 3).unwrap().is_empty());
        assert!(matches!(
            parse_group(r#"{"generators": [[0, 0, 1]]}"#, 3),
            Err(IoError::Invalid { what: "generator", .. })
        ));
        assert!(matches!(
            parse_group(r#"{"generators": [[1, 0]]}"#, 3),
            Err(IoError::Invalid { what: "generator", .. })
        ));
    }

    #[test]
    fn measures_are_bare_arrays_with_checked_length() {
        let mu = parse_measure("[0.25, 0.75]", 2).unwrap();
        assert_eq!(mu.weights(), [0.25, 0.75]);
        assert!(matches!(
            parse_measure("[0.25, 0.75]", 3),
            Err(IoError::Invalid { what: "measure", .. })
        ));
        assert!(matches!(
            parse_measure("[0.25, 0.25]", 2),
            Err(IoError::Invalid { what: "measure", .. })
        ));
        let text = emit_measure(&mu);
        let back = parse_measure(&text, 2).unwrap();
        assert_eq!(back.weights(), mu.weights());
    }

    #[test]
    fn partitions_validate_against_their_space() {
        let space = gen::euclidean_space(&mut gen::rng(7), 4);
        let part = parse_partition(r#"{"leaves": [[0, 3], [1, 2]]}"#, &space).unwrap();
        assert_eq!(part.leaves().len(), 2);
        assert_eq!(part.leaf_of(2), 1);
        assert!(matches!(
            parse_partition(r#"{"leaves": [[0, 1], [1, 2, 3]]}"#, &space),
            Err(IoError::Invalid { what: "partition", .. })
        ));
    }

    #[test]
    fn graphs_round_trip_and_default_to_the_degree_measure() {
        let mut rng = gen::rng(23);
        for _ in 0..20 {
            let n = rng.gen_range(2..7);
            let graph = gen::dyadic_graph(&mut rng, n);
            let text = emit_graph(&graph);
            let back = parse_graph(&text).expect("canonical graph re-parses");
            assert_eq!(back.labels(), graph.labels());
            assert_eq!(back.masses(), graph.masses());
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(back.omega(i, j), graph.omega(i, j));
                }
            }
            assert_eq!(emit_graph(&back), text);
        }
        let text = r#"{"vertices": ["a", "b", "c"], "edges": [[0, 1, 2.0], [1, 2, 1.0]]}"#;
        let graph = parse_graph(text).unwrap();
        assert_eq!(graph.masses(), [2.0, 3.0, 1.0]);
        assert_eq!(graph.label(0), "a");
    }

    #[test]
    fn chains_carry_an_optional_stationary_vector() {
        let (kernel, pi) = parse_chain(r#"{"kernel": [[0.0, 1.0], [1.0, 0.0]]}"#).unwrap();
        assert_eq!(kernel, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(pi.is_none());
        let text = emit_chain(&kernel, Some(&[0.5, 0.5]));
        let (back, back_pi) = parse_chain(&text).unwrap();
        assert_eq!(back, kernel);
        assert_eq!(back_pi, Some(vec![0.5, 0.5]));
    }

    #[test]
    fn canonical_floats_survive_a_parse_round_trip() {
        let mut rng = gen::rng(5);
        for _ in 0..2000 {
            let v: f64 = rng.gen_range(-1.0e9..1.0e9) * rng.gen_range(1.0e-9_f64..1.0).powi(3);
            let text = format_float(v);
            let back: f64 = text.parse().expect("scientific notation parses");
            assert_eq!(back.to_bits(), v.to_bits(), "{text}");
        }
        assert_eq!(format_float(f64::INFINITY), "\"inf\"");
        assert_eq!(format_float(f64::NEG_INFINITY), "\"-inf\"");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn canonical_objects_sort_their_keys() {
        let doc = Json::Obj(vec![
            ("zeta".into(), Json::Int(1)),
            ("alpha".into(), Json::Bool(true)),
            ("mid".into(), Json::Str("x\"y".into())),
        ]);
        let text = doc.to_canonical_string();
        let alpha = text.find("alpha").unwrap();
        let mid = text.find("mid").unwrap();
        let zeta = text.find("zeta").unwrap();
        assert!(alpha < mid && mid < zeta);
        assert!(text.contains("\"x\\\"y\""));
        assert!(text.ends_with('\n'));
        let value: serde_json::Value = serde_json::from_str(&text).expect("valid json");
        assert_eq!(value["zeta"], 1);
    }

    #[test]
    fn coupling_emission_carries_marginal_residuals() {
        let text = emit_coupling(
            &[vec![0.5, 0.0], vec![0.0, 0.5]],
            0.25,
            &[0.0, 0.0],
            &[0.0, 1.0e-17],
        );
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["plan"][0][0], 0.5);
        assert_eq!(value["column_residual"][1], 1.0e-17);
    }

    #[test]
    fn couplings_round_trip_bitwise() {
        let plan = vec![vec![0.5, 0.0], vec![0.125, 0.375]];
        let text = emit_coupling(&plan, 0.625, &[0.0, -1.0e-17], &[0.0, 0.0]);
        let file = parse_coupling(&text).unwrap();
        assert_eq!(file.plan, plan);
        assert_eq!(file.cost, 0.625);
        assert_eq!(file.row_residual, vec![0.0, -1.0e-17]);
        let again = emit_coupling(&file.plan, file.cost, &file.row_residual, &file.column_residual);
        assert_eq!(parse_coupling(&again).unwrap(), file);

        let ragged = r#"{"plan": [[0.5], [0.0, 0.5]], "cost": 0.0,
                         "row_residual": [0.0, 0.0], "column_residual": [0.0]}"#;
        assert!(matches!(parse_coupling(ragged), Err(IoError::Invalid { .. })));
    }

    #[test]
    fn densities_need_only_be_nonnegative() {
        let values = parse_density("[0.5, 1.5, 0.0]", 3).unwrap();
        assert_eq!(values, vec![0.5, 1.5, 0.0]);
        assert!(matches!(parse_density("[0.5, 1.5]", 3), Err(IoError::Invalid { .. })));
        assert!(matches!(parse_density("[0.5, -0.5, 2.0]", 3), Err(IoError::Invalid { .. })));
    }

    #[test]
    fn curvature_tables_render_infinities_bare() {
        let rows = vec![
            CurvatureRow { vertex: "0".into(), dimension: f64::INFINITY, curvature: 2.0 },
            CurvatureRow { vertex: "a,b".into(), dimension: 2.0, curvature: f64::NEG_INFINITY },
        ];
        let text = curvature_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vertex,N,K");
        assert_eq!(lines[1], "0,inf,2.0000000000000000e0");
        assert_eq!(lines[2], "\"a,b\",2.0000000000000000e0,-inf");
    }
}
