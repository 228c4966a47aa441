//! Plain-text file formats.
//!
//! Genotypes: `#samples=<m> loci=<n>`, optional `##key=value` lines, then
//! `id<TAB>symbols` rows over `{0,1,2,?}`. Haplotypes use the same shape with
//! `#haplotypes=<m> loci=<n>` and symbols `{0,1}`. Locus maps are
//! `id<TAB>position<TAB>typed|untyped` rows. Models are versioned text with
//! every value printed to 17 significant digits.

use std::fmt::Write as _;

use fhmm_core::genotype::{
    Allele, Genotype, HaplotypeSequence, Locus, LocusMap, MultilocusGenotype,
};
use fhmm_core::model::FounderHmm;
use fhmm_core::simulate::Site;
use fhmm_core::tasks::{ErrorEntry, ErrorReport, Fill, ImputedCall};

use crate::error::{CliError, Result};

pub const MODEL_MAGIC: &str = "#fhmm-model";
pub const MODEL_VERSION: u32 = 1;

/// `key=value` pairs written as `##` lines under each header.
pub type Echo = [(String, String)];

fn fail(source: &str, line: usize, field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{source}:{line}: {field}: {msg}"))
}

fn echo_lines(out: &mut String, echo: &Echo) {
    for (k, v) in echo {
        let _ = writeln!(out, "##{k}={v}");
    }
}

/// Numbered lines that are neither blank nor `##` echo lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("##"))
}

/// Parses `#<what>=<m> loci=<n>`.
fn parse_header(source: &str, line: usize, text: &str, what: &str) -> Result<(usize, usize)> {
    let bad = || fail(source, line, "header", format!("expected `#{what}=<m> loci=<n>`, found {text:?}"));
    let rest = text.strip_prefix('#').ok_or_else(bad)?;
    let mut parts = rest.split_whitespace();
    let mut take = |key: &str| -> Result<usize> {
        let p = parts.next().ok_or_else(bad)?;
        let v = p.strip_prefix(key).and_then(|v| v.strip_prefix('=')).ok_or_else(bad)?;
        v.parse().map_err(|_| fail(source, line, key, format!("not a count: {v:?}")))
    };
    let m = take(what)?;
    let n = take("loci")?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((m, n))
}

fn split_row<'a>(source: &str, line: usize, text: &'a str) -> Result<(&'a str, &'a str)> {
    let (id, symbols) = text
        .split_once('\t')
        .ok_or_else(|| fail(source, line, "row", "expected `id<TAB>symbols`"))?;
    if id.is_empty() {
        return Err(fail(source, line, "id", "empty identifier"));
    }
    Ok((id, symbols))
}

fn check_counts(source: &str, rows: usize, m: usize, what: &str) -> Result<()> {
    if rows != m {
        return Err(CliError::Input(format!("{source}: header declares {what}={m} but {rows} rows follow")));
    }
    Ok(())
}

pub fn write_genotypes(corpus: &[MultilocusGenotype], echo: &Echo) -> String {
    let n = corpus.first().map_or(0, |g| g.len());
    let mut out = format!("#samples={} loci={n}\n", corpus.len());
    echo_lines(&mut out, echo);
    for g in corpus {
        let _ = writeln!(out, "{}\t{}", g.sample_id, g.symbol_string());
    }
    out
}

pub fn parse_genotypes(text: &str, source: &str) -> Result<Vec<MultilocusGenotype>> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{source}: empty genotype file")))?;
    let (m, n) = parse_header(source, line, header, "samples")?;
    let mut corpus = Vec::with_capacity(m);
    for (line, text) in lines {
        let (id, symbols) = split_row(source, line, text)?;
        let mut row = Vec::with_capacity(n);
        for (j, c) in symbols.chars().enumerate() {
            let g = Genotype::from_char(c)
                .ok_or_else(|| fail(source, line, &format!("symbol {}", j + 1), format!("invalid genotype {c:?}")))?;
            row.push(g);
        }
        if row.len() != n {
            return Err(fail(source, line, "symbols", format!("expected {n} symbols, found {}", row.len())));
        }
        corpus.push(MultilocusGenotype {
            sample_id: id.to_string(),
            symbols: row,
        });
    }
    check_counts(source, corpus.len(), m, "samples")?;
    Ok(corpus)
}

pub fn write_haplotypes(panel: &[HaplotypeSequence], echo: &Echo) -> String {
    let n = panel.first().map_or(0, |h| h.len());
    let mut out = format!("#haplotypes={} loci={n}\n", panel.len());
    echo_lines(&mut out, echo);
    for h in panel {
        let _ = writeln!(out, "{}\t{}", h.id, h.allele_string());
    }
    out
}

pub fn parse_haplotypes(text: &str, source: &str) -> Result<Vec<HaplotypeSequence>> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{source}: empty haplotype file")))?;
    let (m, n) = parse_header(source, line, header, "haplotypes")?;
    let mut panel = Vec::with_capacity(m);
    for (line, text) in lines {
        let (id, symbols) = split_row(source, line, text)?;
        let mut alleles = Vec::with_capacity(n);
        for (j, c) in symbols.chars().enumerate() {
            let a = Allele::from_char(c)
                .ok_or_else(|| fail(source, line, &format!("symbol {}", j + 1), format!("invalid allele {c:?}")))?;
            alleles.push(a);
        }
        if alleles.len() != n {
            return Err(fail(source, line, "symbols", format!("expected {n} symbols, found {}", alleles.len())));
        }
        panel.push(HaplotypeSequence::new(id, alleles));
    }
    check_counts(source, panel.len(), m, "haplotypes")?;
    Ok(panel)
}

pub fn write_map(map: &LocusMap, echo: &Echo) -> String {
    let mut out = String::new();
    echo_lines(&mut out, echo);
    for l in map.loci() {
        let _ = writeln!(out, "{}\t{}\t{}", l.id, l.position, if l.typed { "typed" } else { "untyped" });
    }
    out
}

pub fn parse_map(text: &str, source: &str) -> Result<LocusMap> {
    let mut loci = Vec::new();
    for (line, text) in content_lines(text).filter(|(_, l)| !l.starts_with('#')) {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(fail(source, line, "row", format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        if fields[0].is_empty() {
            return Err(fail(source, line, "id", "empty identifier"));
        }
        let position = fields[1]
            .parse()
            .map_err(|_| fail(source, line, "position", format!("not a position: {:?}", fields[1])))?;
        let typed = match fields[2] {
            "typed" => true,
            "untyped" => false,
            other => return Err(fail(source, line, "status", format!("expected typed or untyped, found {other:?}"))),
        };
        loci.push(Locus {
            id: fields[0].to_string(),
            position,
            typed,
        });
    }
    LocusMap::new(loci).map_err(|e| CliError::Input(format!("{source}: {e}")))
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        let _ = write!(out, "\t{v:.16e}");
    }
    out.push('\n');
}

pub fn write_model(model: &FounderHmm, echo: &Echo) -> String {
    let (k, n) = (model.founders(), model.loci());
    let mut out = format!("{MODEL_MAGIC} version={MODEL_VERSION} founders={k} loci={n}\n");
    echo_lines(&mut out, echo);
    out.push_str("initial");
    push_values(&mut out, model.initial());
    for i in 0..n.saturating_sub(1) {
        for (a, row) in model.transition(i).chunks(k).enumerate() {
            let _ = write!(out, "transition\t{i}\t{a}");
            push_values(&mut out, row);
        }
    }
    for i in 0..n {
        let _ = write!(out, "emission\t{i}");
        push_values(&mut out, model.emission(i));
    }
    out
}

pub fn parse_model(text: &str, source: &str) -> Result<FounderHmm> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{source}: empty model file")))?;
    let bad_header = || fail(source, line, "header", format!("expected `{MODEL_MAGIC} version={MODEL_VERSION} founders=<K> loci=<n>`"));
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MODEL_MAGIC) {
        return Err(bad_header());
    }
    let mut take = |key: &str| -> Result<usize> {
        let p = parts.next().ok_or_else(bad_header)?;
        let v = p.strip_prefix(key).and_then(|v| v.strip_prefix('=')).ok_or_else(bad_header)?;
        v.parse().map_err(|_| fail(source, line, key, format!("not a count: {v:?}")))
    };
    let version = take("version")?;
    if version != MODEL_VERSION as usize {
        return Err(fail(source, line, "version", format!("unsupported model version {version}")));
    }
    let k = take("founders")?;
    let n = take("loci")?;
    if k == 0 || n == 0 {
        return Err(fail(source, line, "header", "founders and loci must be positive"));
    }

    let mut next_row = |tag: &str, index: &[usize]| -> Result<Vec<f64>> {
        let (line, text) = lines
            .next()
            .ok_or_else(|| CliError::Input(format!("{source}: truncated model, expected a {tag} row")))?;
        let mut fields = text.split('\t');
        if fields.next() != Some(tag) {
            return Err(fail(source, line, "tag", format!("expected {tag}")));
        }
        for (pos, &want) in index.iter().enumerate() {
            let f = fields.next().unwrap_or("");
            if f.parse::<usize>().ok() != Some(want) {
                return Err(fail(source, line, &format!("index {}", pos + 1), format!("expected {want}, found {f:?}")));
            }
        }
        let values = fields
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>()
                    .map_err(|_| fail(source, line, &format!("value {}", j + 1), format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != k {
            return Err(fail(source, line, "values", format!("expected {k} values, found {}", values.len())));
        }
        Ok(values)
    };

    let initial = next_row("initial", &[])?;
    let mut transitions = Vec::with_capacity((n - 1) * k * k);
    for i in 0..n - 1 {
        for a in 0..k {
            transitions.extend(next_row("transition", &[i, a])?);
        }
    }
    let mut emissions = Vec::with_capacity(n * k);
    for i in 0..n {
        emissions.extend(next_row("emission", &[i])?);
    }
    if let Some((line, _)) = lines.next() {
        return Err(fail(source, line, "row", "unexpected content after the last emission row"));
    }
    FounderHmm::new(k, n, initial, transitions, emissions).map_err(|e| CliError::Input(format!("{source}: {e}")))
}

/// Reads a non-comment TSV body, checking the column header.
fn tsv_rows<'a>(text: &'a str, source: &str, columns: &[&str]) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{source}: empty table")))?;
    let want = columns.join("\t");
    if header != want {
        return Err(fail(source, line, "header", format!("expected {want:?}")));
    }
    lines
        .map(|(line, text)| {
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() != columns.len() {
                return Err(fail(source, line, "row", format!("expected {} fields, found {}", columns.len(), fields.len())));
            }
            Ok((line, fields))
        })
        .collect()
}

fn parse_genotype_field(source: &str, line: usize, field: &str, value: &str) -> Result<Genotype> {
    let mut chars = value.chars();
    match (chars.next().and_then(Genotype::from_char), chars.next()) {
        (Some(g), None) => Ok(g),
        _ => Err(fail(source, line, field, format!("invalid genotype {value:?}"))),
    }
}

fn parse_f64(source: &str, line: usize, field: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| fail(source, line, field, format!("not a number: {value:?}")))
}

pub const ERROR_COLUMNS: [&str; 6] = ["sample_id", "locus_id", "observed", "ratio", "flagged", "suggested"];

pub fn write_error_report(report: &ErrorReport, echo: &Echo) -> String {
    let mut out = String::new();
    echo_lines(&mut out, echo);
    let _ = writeln!(out, "##threshold={}", report.threshold);
    let _ = writeln!(out, "{}", ERROR_COLUMNS.join("\t"));
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.sample_id, e.locus_id, e.observed, e.ratio, e.flagged as u8, e.suggested
        );
    }
    out
}

pub fn parse_error_report(text: &str, source: &str) -> Result<ErrorReport> {
    let threshold = text
        .lines()
        .find_map(|l| l.strip_prefix("##threshold="))
        .ok_or_else(|| CliError::Input(format!("{source}: missing ##threshold line")))?;
    let threshold = threshold
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{source}: threshold: not a number: {threshold:?}")))?;
    let entries = tsv_rows(text, source, &ERROR_COLUMNS)?
        .into_iter()
        .map(|(line, f)| {
            Ok(ErrorEntry {
                sample_id: f[0].to_string(),
                locus_id: f[1].to_string(),
                observed: parse_genotype_field(source, line, "observed", f[2])?,
                ratio: parse_f64(source, line, "ratio", f[3])?,
                flagged: match f[4] {
                    "0" => false,
                    "1" => true,
                    v => return Err(fail(source, line, "flagged", format!("expected 0 or 1, found {v:?}"))),
                },
                suggested: parse_genotype_field(source, line, "suggested", f[5])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport { threshold, entries })
}

pub const IMPUTE_COLUMNS: [&str; 7] = ["sample_id", "locus_id", "call", "confidence", "p0", "p1", "p2"];

pub fn write_imputation(calls: &[ImputedCall], echo: &Echo) -> String {
    let mut out = String::new();
    echo_lines(&mut out, echo);
    let _ = writeln!(out, "{}", IMPUTE_COLUMNS.join("\t"));
    for c in calls {
        let [p0, p1, p2] = c.posterior;
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{p0}\t{p1}\t{p2}", c.sample_id, c.locus_id, c.call, c.confidence);
    }
    out
}

pub fn parse_imputation(text: &str, source: &str) -> Result<Vec<ImputedCall>> {
    tsv_rows(text, source, &IMPUTE_COLUMNS)?
        .into_iter()
        .map(|(line, f)| {
            Ok(ImputedCall {
                sample_id: f[0].to_string(),
                locus_id: f[1].to_string(),
                call: parse_genotype_field(source, line, "call", f[2])?,
                confidence: parse_f64(source, line, "confidence", f[3])?,
                posterior: [
                    parse_f64(source, line, "p0", f[4])?,
                    parse_f64(source, line, "p1", f[5])?,
                    parse_f64(source, line, "p2", f[6])?,
                ],
            })
        })
        .collect()
}

pub const FILL_COLUMNS: [&str; 4] = ["sample_id", "locus_id", "value", "confidence"];

pub fn write_fills(fills: &[Fill], echo: &Echo) -> String {
    let mut out = String::new();
    echo_lines(&mut out, echo);
    let _ = writeln!(out, "{}", FILL_COLUMNS.join("\t"));
    for f in fills {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", f.sample_id, f.locus_id, f.value, f.confidence);
    }
    out
}

pub const SITE_COLUMNS: [&str; 2] = ["sample_id", "locus_id"];

pub fn write_sites(sites: &[Site], echo: &Echo) -> String {
    let mut out = String::new();
    echo_lines(&mut out, echo);
    let _ = writeln!(out, "{}", SITE_COLUMNS.join("\t"));
    for s in sites {
        let _ = writeln!(out, "{}\t{}", s.sample_id, s.locus_id);
    }
    out
}

pub fn parse_sites(text: &str, source: &str) -> Result<Vec<Site>> {
    Ok(tsv_rows(text, source, &SITE_COLUMNS)?
        .into_iter()
        .map(|(_, f)| Site {
            sample_id: f[0].to_string(),
            locus_id: f[1].to_string(),
        })
        .collect())
}
