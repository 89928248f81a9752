//! KEEL `.dat` reader.
//!
//! ```text
//! @relation pima
//! @attribute Preg real [0.0, 17.0]
//! @attribute Class {positive, negative}
//! @inputs Preg
//! @outputs Class
//! @data
//! 6, positive
//! ```

use std::path::{Path, PathBuf};

use super::Dataset;
use crate::nn::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
enum AttrKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    kind: AttrKind,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|v| v.trim().trim_matches('\'').trim_matches('"').to_string())
        .filter(|v| !v.is_empty())
        .collect()
}

fn parse_attribute(rest: &str, path: &Path, line: usize) -> Result<Attribute> {
    let rest = rest.trim();
    let name_end = rest
        .find(|c: char| c.is_whitespace() || c == '{')
        .ok_or_else(|| parse_err(path, line, "@attribute needs a name and a type"))?;
    let name = rest[..name_end].trim_matches('\'').to_string();
    let spec = rest[name_end..].trim();
    if name.is_empty() || spec.is_empty() {
        return Err(parse_err(path, line, "@attribute needs a name and a type"));
    }
    let kind = if let Some(body) = spec.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| parse_err(path, line, "unterminated nominal value list"))?;
        let values = split_list(body);
        if values.is_empty() {
            return Err(parse_err(path, line, "empty nominal value list"));
        }
        AttrKind::Nominal(values)
    } else {
        let ty = spec.split(|c: char| c.is_whitespace() || c == '[').next().unwrap_or("");
        match ty.to_ascii_lowercase().as_str() {
            "real" | "integer" | "numeric" => AttrKind::Numeric,
            other => return Err(parse_err(path, line, format!("unsupported attribute type {other:?}"))),
        }
    };
    Ok(Attribute { name, kind })
}

fn is_missing(v: &str) -> bool {
    v.is_empty() || v == "?" || v.eq_ignore_ascii_case("<null>")
}

pub fn load_keel_dat(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    parse_keel(&text, &name, path)
}

/// Parses KEEL text. `origin` is only used in error messages.
pub fn parse_keel(text: &str, default_name: &str, origin: &Path) -> Result<Dataset> {
    let origin: PathBuf = origin.to_path_buf();
    let path = origin.as_path();
    let mut relation: Option<String> = None;
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut inputs: Option<Vec<String>> = None;
    let mut outputs: Option<Vec<String>> = None;
    let mut data_start = None;

    let lines: Vec<&str> = text.lines().collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !line.starts_with('@') {
            return Err(parse_err(path, i + 1, "data row before @data"));
        }
        let (directive, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match directive.to_ascii_lowercase().as_str() {
            "@relation" => relation = Some(rest.trim().to_string()),
            "@attribute" => attributes.push(parse_attribute(rest, path, i + 1)?),
            "@inputs" | "@input" => inputs = Some(split_list(rest)),
            "@outputs" | "@output" => outputs = Some(split_list(rest)),
            "@data" => {
                data_start = Some(i + 1);
                break;
            }
            other => return Err(parse_err(path, i + 1, format!("unknown directive {other}"))),
        }
    }
    let data_start = data_start.ok_or_else(|| parse_err(path, lines.len(), "missing @data section"))?;
    if attributes.len() < 2 {
        return Err(parse_err(path, data_start, "need at least one input and one class attribute"));
    }

    let position = |name: &str| -> Result<usize> {
        attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| parse_err(path, data_start, format!("unknown attribute {name:?} in @inputs/@outputs")))
    };
    let class_idx = match &outputs {
        Some(o) if !o.is_empty() => position(o.last().unwrap())?,
        _ => attributes.len() - 1,
    };
    let input_idx: Vec<usize> = match &inputs {
        Some(list) => list.iter().map(|n| position(n)).collect::<Result<_>>()?,
        None => (0..attributes.len()).filter(|&i| i != class_idx).collect(),
    };
    if input_idx.is_empty() || input_idx.contains(&class_idx) {
        return Err(parse_err(path, data_start, "class attribute must not be an input"));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut missing_rows = Vec::new();
    let mut row_no = 0usize;
    for (offset, raw) in lines[data_start..].iter().enumerate() {
        let line_no = data_start + offset + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        row_no += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != attributes.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} values, found {}", attributes.len(), fields.len()),
            ));
        }
        if fields.iter().any(|f| is_missing(f)) {
            missing_rows.push(row_no);
            continue;
        }
        for &j in &input_idx {
            let v = fields[j];
            let x = match &attributes[j].kind {
                AttrKind::Numeric => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(path, line_no, format!("non-numeric value {v:?} for {}", attributes[j].name)))?,
                AttrKind::Nominal(levels) => levels
                    .iter()
                    .position(|l| l == v)
                    .ok_or_else(|| parse_err(path, line_no, format!("value {v:?} not declared for {}", attributes[j].name)))?
                    as f64,
            };
            values.push(x);
        }
        raw_labels.push(fields[class_idx].to_string());
    }
    if !missing_rows.is_empty() {
        return Err(Error::MissingValues {
            path: origin,
            rows: missing_rows,
        });
    }

    let features = Matrix::from_vec(raw_labels.len(), input_idx.len(), values)?;
    let names = input_idx.iter().map(|&j| attributes[j].name.clone()).collect();
    let name = relation.filter(|r| !r.is_empty()).unwrap_or_else(|| default_name.to_string());
    Dataset::from_text_labels(name, features, &raw_labels, names, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_keel(text, "t", Path::new("t.dat"))
    }

    const SMALL: &str = "@relation tiny
@attribute A real [0.0, 1.0]
@attribute Colour {red, green, blue}
@attribute Class {negative, positive}
@inputs A, Colour
@outputs Class
@data
0.5, green, negative
0.1, blue, negative
0.9, red, positive
";

    #[test]
    fn parses_three_rows() {
        let d = parse(SMALL).unwrap();
        assert_eq!(d.name, "tiny");
        assert_eq!(d.labels, vec![0, 0, 1]);
        assert_eq!((d.counts.negative, d.counts.positive), (2, 1));
        assert_eq!(d.feature_names, vec!["A", "Colour"]);
        // categorical encoded by declaration order
        assert_eq!(d.features.column(1), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn class_mapping_is_by_name_not_declaration_order() {
        let text = "@relation r
@attribute x real
@attribute Class {positive, negative}
@data
1, positive
2, negative
3, negative
";
        let d = parse(text).unwrap();
        assert_eq!(d.labels, vec![1, 0, 0]);
        let upper = text.replace("positive", "POSITIVE");
        let d = parse(&upper).unwrap();
        assert_eq!(d.labels, vec![1, 0, 0]);
    }

    #[test]
    fn missing_values_report_rows() {
        let text = SMALL.replace("0.1, blue", "?, blue").replace("0.9, red", "<null>, red");
        match parse(&text) {
            Err(Error::MissingValues { rows, .. }) => assert_eq!(rows, vec![2, 3]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_input_rejected() {
        assert!(matches!(parse("@relation x\n@attribute\n@data\n"), Err(Error::Parse { .. })));
        assert!(parse("@relation x\n@attribute a real\n@attribute c {p,n}\n").is_err());
        assert!(parse("@relation x\n@attribute a real\n@attribute c {p,n}\n@data\nabc, p\np, n\n").is_err());
        assert!(parse("@relation x\n@attribute a real\n@attribute c {p,n}\n@data\n1, 2, p\n").is_err());
        assert!(parse("@relation x\n@attribute a date\n@attribute c {p,n}\n@data\n").is_err());
        let bad_level = SMALL.replace("0.5, green", "0.5, purple");
        assert!(parse(&bad_level).is_err());
    }
}
