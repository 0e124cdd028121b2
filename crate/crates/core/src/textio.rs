//! Line-oriented UTF-8 file helpers shared by every file format in the crate.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads `path` as UTF-8 lines. LF separates lines; a trailing CR on a line
/// is dropped. A final terminating newline does not produce an extra empty
/// line. Decode failures report the 1-based line number.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    split_lines(&bytes).map_err(|line| Error::Decode {
        path: path.to_path_buf(),
        line,
    })
}

pub(crate) fn split_lines(bytes: &[u8]) -> std::result::Result<Vec<String>, usize> {
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            String::from_utf8(raw.to_vec()).map_err(|_| i + 1)
        })
        .collect()
}

/// Writes each line followed by LF.
pub fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut buf = String::new();
    for line in lines {
        buf.push_str(line.as_ref());
        buf.push('\n');
    }
    write_string(path, &buf)
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Splits a line into whitespace-separated tokens.
pub fn tokens(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_owned).collect()
}

pub fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?.iter().map(|l| tokens(l)).collect())
}

pub fn write_token_lines(path: &Path, lines: &[Vec<String>]) -> Result<()> {
    write_lines(path, lines.iter().map(|l| l.join(" ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crlf_and_trailing_newline() {
        assert_eq!(split_lines(b"a\r\nb\n").unwrap(), vec!["a", "b"]);
        assert_eq!(split_lines(b"a\n\nb").unwrap(), vec!["a", "", "b"]);
        assert_eq!(split_lines(b"").unwrap(), Vec::<String>::new());
        assert_eq!(split_lines(b"\n").unwrap(), vec![""]);
    }

    #[test]
    fn bad_utf8_reports_line() {
        assert_eq!(split_lines(b"ok\nfine\n\xff\xfe\n"), Err(3));
    }
}
