//! Text rendering of the delivery table: what each user extracts from each
//! transmission, with its time slot.

use num_rational::Rational64;

use super::plan::{build_row_plan_reduced, row_members};
use crate::content::{DemandVector, LibraryConfig, Regime};
use crate::error::{Error, Result};

/// `A`..`Z` for small libraries, `W27`-style beyond.
pub fn file_name(n: usize, files: usize) -> String {
    if files <= 26 {
        char::from(b'A' + n as u8).to_string()
    } else {
        format!("W{}", n + 1)
    }
}

fn render_terms(terms: &[(i64, String)]) -> String {
    let mut out = String::new();
    for (c, label) in terms.iter().filter(|(c, _)| *c != 0) {
        let sign = if *c < 0 {
            "-"
        } else if out.is_empty() {
            ""
        } else {
            "+"
        };
        out.push_str(sign);
        if c.abs() != 1 {
            out.push_str(&c.abs().to_string());
        }
        out.push_str(label);
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

fn fmt_ratio(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Renders the table for `cfg` and `demand`. Rows are ordered by owner, then
/// by transmission.
pub fn render_delivery_table(cfg: &LibraryConfig, demand: &DemandVector) -> Result<String> {
    let regime = cfg.validate_for_delivery()?;
    if demand.len() != cfg.users {
        return Err(Error::InconsistentInputs(format!(
            "{} demands for {} users",
            demand.len(),
            cfg.users
        )));
    }
    let users = cfg.users;
    let name = |u: usize| file_name(demand.file_of(u), cfg.files);

    let mut header = vec!["Row".to_string(), "Signal".to_string()];
    header.extend((1..=users).map(|u| format!("User {u}")));
    header.push("Time Slot".into());
    let mut body: Vec<Vec<String>> = Vec::new();

    match regime {
        Regime::FullAntenna => {
            let slot = fmt_ratio(Rational64::new(1, cfg.files as i64));
            for row in 0..users {
                let members = row_members(users, row);
                let mut line = vec![(row + 1).to_string(), format!("X_{}", row + 1)];
                for u in 0..users {
                    let cell = if u == row {
                        let terms: Vec<(i64, String)> = members
                            .iter()
                            .map(|&k| (1, format!("{}_{}", name(k), row + 1)))
                            .collect();
                        render_terms(&terms)
                    } else {
                        format!("{}_{}", name(u), row + 1)
                    };
                    line.push(cell);
                }
                line.push(slot.clone());
                body.push(line);
            }
        }
        Regime::Reduced => {
            let plan = build_row_plan_reduced(cfg.files, cfg.servers)?;
            let slot = fmt_ratio(Rational64::new(1, (cfg.files * cfg.servers) as i64));
            for row in 0..users {
                let members = row_members(users, row);
                for (t, tx) in plan.transmissions().iter().enumerate() {
                    let mut cells = vec!["-".to_string(); users];
                    let mut owner_terms = Vec::new();
                    for (p, coeffs) in &tx.served {
                        let u = members[*p];
                        let terms: Vec<(i64, String)> = coeffs
                            .iter()
                            .enumerate()
                            .map(|(j, &c)| (c, format!("{}_{}^{}", name(u), row + 1, j + 1)))
                            .collect();
                        cells[u] = render_terms(&terms);
                        owner_terms.extend(terms);
                    }
                    cells[row] = render_terms(&owner_terms);
                    let mut line = vec![(row + 1).to_string(), format!("X_{}^{}", row + 1, t + 1)];
                    line.extend(cells);
                    line.push(slot.clone());
                    body.push(line);
                }
            }
        }
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain(std::iter::once(header[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let fmt_line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = fmt_line(&header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for line in &body {
        out.push_str(&fmt_line(line));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_render_signs() {
        let t = vec![
            (1, "a".to_string()),
            (-1, "b".into()),
            (0, "c".into()),
            (2, "d".into()),
        ];
        assert_eq!(render_terms(&t), "a-b+2d");
        assert_eq!(render_terms(&[(-1, "x".into())]), "-x");
        assert_eq!(render_terms(&[]), "0");
    }

    #[test]
    fn smallest_table() {
        let cfg = LibraryConfig::new(2, 1, 1);
        let table = render_delivery_table(&cfg, &DemandVector::identity(2)).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains("B_1") && lines[2].contains("1/2"));
        assert!(lines[3].contains("A_2"));
    }

    #[test]
    fn unsupported_regime() {
        let cfg = LibraryConfig::new(9, 3, 1);
        assert!(render_delivery_table(&cfg, &DemandVector::identity(9)).is_err());
    }
}
