//! alist text I/O for sparse parity-check matrices.
//!
//! The format is the usual one exchanged between LDPC tools: a header line
//! `n m`, the maximum column and row degrees, per-column and per-row degree
//! lists, then the 1-based row indices of each column and the 1-based column
//! indices of each row, each list zero-padded to the maximum degree. The
//! loader also accepts unpadded entry lines, so `write_alist . load_alist`
//! is the identity up to whitespace.

use thiserror::Error;

use super::SparsePcm;

/// Parse failure with the 1-based line it was detected on.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("alist line {line}: {msg}")]
pub struct AlistError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, AlistError> {
    Err(AlistError { line, msg: msg.into() })
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { iter: text.lines(), line_no: 0 }
    }

    /// Next non-empty line as whitespace-separated tokens.
    fn tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), AlistError> {
        for line in self.iter.by_ref() {
            self.line_no += 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((self.line_no, toks));
            }
        }
        err(self.line_no + 1, format!("unexpected end of input, expected {what}"))
    }

    fn rest_is_blank(&mut self) -> Result<(), AlistError> {
        for line in self.iter.by_ref() {
            self.line_no += 1;
            if !line.trim().is_empty() {
                return err(self.line_no, "trailing content after matrix entries");
            }
        }
        Ok(())
    }
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize, AlistError> {
    tok.parse::<usize>().map_err(|_| AlistError {
        line,
        msg: format!("cannot parse {what} from {tok:?}"),
    })
}

fn parse_counts(
    lines: &mut Lines<'_>,
    count: usize,
    what: &str,
) -> Result<Vec<usize>, AlistError> {
    let (line_no, toks) = lines.tokens(what)?;
    if toks.len() != count {
        return err(line_no, format!("expected {count} {what}, found {}", toks.len()));
    }
    toks.iter().map(|t| parse_usize(line_no, t, what)).collect()
}

/// Reads 1-based entries padded with zeros to `max_degree` (or written
/// unpadded). Exactly `degree` nonzero entries are required, and zeros may
/// appear only as trailing padding.
fn parse_entries(
    lines: &mut Lines<'_>,
    degree: usize,
    max_degree: usize,
    limit: usize,
    what: &str,
) -> Result<(usize, Vec<u32>), AlistError> {
    let (line_no, toks) = lines.tokens(what)?;
    if toks.len() != degree && toks.len() != max_degree {
        return err(
            line_no,
            format!("expected {degree} (or {max_degree} padded) {what} entries, found {}", toks.len()),
        );
    }
    let mut out = Vec::with_capacity(degree);
    for (pos, tok) in toks.iter().enumerate() {
        let v = parse_usize(line_no, tok, what)?;
        if v == 0 {
            if pos < degree {
                return err(line_no, format!("zero padding before {degree} {what} entries present"));
            }
            continue;
        }
        if pos >= degree {
            return err(line_no, format!("more than {degree} nonzero {what} entries"));
        }
        if v > limit {
            return err(line_no, format!("{what} entry {v} out of range 1..={limit}"));
        }
        out.push((v - 1) as u32);
    }
    if out.len() != degree {
        return err(line_no, format!("expected {degree} nonzero {what} entries, found {}", out.len()));
    }
    Ok((line_no, out))
}

/// Parses alist text into a [`SparsePcm`]. The base split is inferred from
/// the trailing raptor structure (the format itself does not carry it), and
/// the raptor flag is set by that structural verification.
pub fn load_alist(text: &str) -> Result<SparsePcm, AlistError> {
    let mut lines = Lines::new(text);

    let (hline, toks) = lines.tokens("header `n m`")?;
    if toks.len() != 2 {
        return err(hline, format!("header must be `n m`, found {} tokens", toks.len()));
    }
    let n = parse_usize(hline, toks[0], "column count")?;
    let m = parse_usize(hline, toks[1], "row count")?;
    if n == 0 || m == 0 {
        return err(hline, "matrix dimensions must be positive");
    }

    let (dline, toks) = lines.tokens("maximum degrees")?;
    if toks.len() != 2 {
        return err(dline, "expected `max_col_degree max_row_degree`");
    }
    let dc_max = parse_usize(dline, toks[0], "max column degree")?;
    let dr_max = parse_usize(dline, toks[1], "max row degree")?;

    let col_degs = parse_counts(&mut lines, n, "column degrees")?;
    let row_degs = parse_counts(&mut lines, m, "row degrees")?;
    if let Some(d) = col_degs.iter().find(|&&d| d > dc_max) {
        return err(dline, format!("column degree {d} exceeds declared maximum {dc_max}"));
    }
    if let Some(d) = row_degs.iter().find(|&&d| d > dr_max) {
        return err(dline, format!("row degree {d} exceeds declared maximum {dr_max}"));
    }

    let mut cols: Vec<(usize, Vec<u32>)> = Vec::with_capacity(n);
    for &deg in &col_degs {
        cols.push(parse_entries(&mut lines, deg, dc_max, m, "column")?);
    }
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(m);
    let mut row_lines = Vec::with_capacity(m);
    for &deg in &row_degs {
        let (line_no, entries) = parse_entries(&mut lines, deg, dr_max, n, "row")?;
        rows.push(entries);
        row_lines.push(line_no);
    }
    lines.rest_is_blank()?;

    // The row lists are authoritative; verify the column lists describe the
    // same matrix.
    let mut transpose: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &c in row {
            transpose[c as usize].push(i as u32);
        }
    }
    for (c, (line_no, mut listed)) in cols.into_iter().enumerate() {
        listed.sort_unstable();
        transpose[c].sort_unstable();
        if listed != transpose[c] {
            return err(line_no, format!("column {} disagrees with the row lists", c + 1));
        }
    }

    SparsePcm::new(rows, n).map_err(|e| match e {
        super::PcmError::DuplicateColumn { row, col } => AlistError {
            line: row_lines[row],
            msg: format!("duplicate column {} in row {}", col + 1, row + 1),
        },
        other => AlistError { line: 0, msg: other.to_string() },
    })
}

/// Serializes in canonical zero-padded form.
pub fn write_alist(pcm: &SparsePcm) -> String {
    let n = pcm.n_total();
    let m = pcm.m_total();
    let mut col_entries: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..m {
        for &c in pcm.row(i) {
            col_entries[c as usize].push(i as u32);
        }
    }
    let dc_max = col_entries.iter().map(|c| c.len()).max().unwrap_or(0);
    let dr_max = (0..m).map(|i| pcm.row(i).len()).max().unwrap_or(0);

    let mut out = String::new();
    out.push_str(&format!("{n} {m}\n{dc_max} {dr_max}\n"));
    push_counts(&mut out, col_entries.iter().map(|c| c.len()));
    push_counts(&mut out, (0..m).map(|i| pcm.row(i).len()));
    for entries in &col_entries {
        push_padded(&mut out, entries, dc_max);
    }
    for i in 0..m {
        push_padded(&mut out, pcm.row(i), dr_max);
    }
    out
}

fn push_counts(out: &mut String, counts: impl Iterator<Item = usize>) {
    let line: Vec<String> = counts.map(|c| c.to_string()).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

fn push_padded(out: &mut String, entries: &[u32], width: usize) {
    let mut toks: Vec<String> = entries.iter().map(|&e| (e + 1).to_string()).collect();
    toks.resize(width, "0".to_string());
    out.push_str(&toks.join(" "));
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::super::generate_raptor_family;
    use super::*;

    const TOY: &str = "6 3\n1 2\n1 1 1 1 1 1\n2 2 2\n1\n1\n2\n2\n3\n3\n1 2\n3 4\n5 6\n";

    #[test]
    fn loads_toy_matrix() {
        let pcm = load_alist(TOY).unwrap();
        assert_eq!(pcm.m_total(), 3);
        assert_eq!(pcm.n_total(), 6);
        assert_eq!(pcm.row(0), &[0, 1]);
        assert_eq!(pcm.row(1), &[2, 3]);
        assert_eq!(pcm.row(2), &[4, 5]);
    }

    #[test]
    fn round_trips_text_up_to_whitespace() {
        let pcm = load_alist(TOY).unwrap();
        let text = write_alist(&pcm);
        let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(norm(&text), norm(TOY));
        assert_eq!(load_alist(&text).unwrap(), pcm);
    }

    #[test]
    fn round_trips_generated_matrix() {
        let pcm = generate_raptor_family(9, 40, 28, 12, 3).unwrap();
        let reloaded = load_alist(&write_alist(&pcm)).unwrap();
        assert_eq!(reloaded, pcm);
        assert!(reloaded.raptor_flag());
    }

    #[test]
    fn accepts_padded_and_unpadded_entries() {
        let padded = "4 2\n2 2\n1 1 1 1\n2 2\n1 0\n1 0\n2 0\n2 0\n1 2\n3 4\n";
        let unpadded = "4 2\n2 2\n1 1 1 1\n2 2\n1\n1\n2\n2\n1 2\n3 4\n";
        assert_eq!(load_alist(padded).unwrap(), load_alist(unpadded).unwrap());
    }

    #[test]
    fn reports_line_numbers_for_malformed_input() {
        let e = load_alist("6 3 9\n").unwrap_err();
        assert_eq!(e.line, 1);

        // Column degree list too short (line 3).
        let e = load_alist("6 3\n1 2\n1 1 1\n2 2 2\n").unwrap_err();
        assert_eq!(e.line, 3);

        // Row entry out of range (last line: header, degrees, 6 column
        // lines, then 3 row lines).
        let bad = TOY.replace("5 6", "5 7");
        let e = load_alist(&bad).unwrap_err();
        assert_eq!(e.line, 13);
        assert!(e.msg.contains("out of range"));

        // Column list inconsistent with the row lists (line 5).
        let bad = TOY.replace("\n1 2\n3 4", "\n2 2\n3 4");
        let e = load_alist(&bad).unwrap_err();
        assert!(e.msg.contains("disagrees") || e.msg.contains("duplicate"), "{e}");
    }

    #[test]
    fn rejects_interior_zero_padding() {
        let bad = "4 2\n1 2\n1 1 1 1\n2 2\n1\n1\n2\n2\n0 2\n3 4\n";
        let e = load_alist(bad).unwrap_err();
        assert_eq!(e.line, 9);
    }
}
