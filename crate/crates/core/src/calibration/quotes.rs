//! CDS quote strips and their CSV form.
//!
//! CSV layout: header `tenor_years,spread_bp[,bid_bp,ask_bp]`, UTF-8,
//! dot decimals. A blank `spread_bp` is filled with the bid/ask mid.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{CreditError, Result};

/// One quoted maturity. Spreads are kept in basis points as quoted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdsQuote {
    pub tenor: f64,
    pub spread_bp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bid_bp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ask_bp: Option<f64>,
}

impl CdsQuote {
    pub fn mid(tenor: f64, spread_bp: f64) -> Self {
        Self { tenor, spread_bp, bid_bp: None, ask_bp: None }
    }

    pub fn from_bid_ask(tenor: f64, bid_bp: f64, ask_bp: f64) -> Self {
        Self { tenor, spread_bp: 0.5 * (bid_bp + ask_bp), bid_bp: Some(bid_bp), ask_bp: Some(ask_bp) }
    }

    /// Running spread as a per-year rate.
    pub fn spread(&self) -> f64 {
        self.spread_bp * 1e-4
    }
}

/// Dated set of running CDS quotes sharing one recovery assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdsQuoteStrip {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quote_date: Option<NaiveDate>,
    pub quotes: Vec<CdsQuote>,
    pub recovery: f64,
}

impl CdsQuoteStrip {
    pub fn new(quote_date: Option<NaiveDate>, quotes: Vec<CdsQuote>, recovery: f64) -> Result<Self> {
        let strip = Self { quote_date, quotes, recovery };
        strip.validate()?;
        Ok(strip)
    }

    pub fn validate(&self) -> Result<()> {
        if self.quotes.is_empty() {
            return Err(CreditError::Precondition("quote strip is empty".into()));
        }
        if !(0.0..1.0).contains(&self.recovery) {
            return Err(CreditError::Domain(format!("recovery must lie in [0, 1), got {}", self.recovery)));
        }
        let mut prev = 0.0;
        for (i, q) in self.quotes.iter().enumerate() {
            if !(q.tenor.is_finite() && q.tenor > prev) {
                return Err(CreditError::Domain(format!("quote {i}: tenors must be positive and strictly increasing")));
            }
            if !(q.spread_bp.is_finite() && q.spread_bp >= 0.0) {
                return Err(CreditError::Domain(format!("quote {i}: spread must be non-negative, got {}", q.spread_bp)));
            }
            if let Some(b) = q.bid_bp {
                if b > q.spread_bp {
                    return Err(CreditError::Domain(format!("quote {i}: bid {b} above mid {}", q.spread_bp)));
                }
            }
            if let Some(a) = q.ask_bp {
                if a < q.spread_bp {
                    return Err(CreditError::Domain(format!("quote {i}: ask {a} below mid {}", q.spread_bp)));
                }
            }
            prev = q.tenor;
        }
        Ok(())
    }

    pub fn tenors(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.tenor).collect()
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn lgd(&self) -> f64 {
        1.0 - self.recovery
    }

    /// Parse the CSV form. Errors carry 1-based line and column numbers.
    pub fn read_csv<R: Read>(reader: R, quote_date: Option<NaiveDate>, recovery: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let parse_err = |line: usize, column: usize, message: String| CreditError::Parse { line, column, message };

        let headers = rdr.headers().map_err(|e| parse_err(1, 1, e.to_string()))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        let has_bid_ask = match names.as_slice() {
            ["tenor_years", "spread_bp"] => false,
            ["tenor_years", "spread_bp", "bid_bp", "ask_bp"] => true,
            _ => {
                return Err(parse_err(
                    1,
                    1,
                    format!("expected header 'tenor_years,spread_bp[,bid_bp,ask_bp]', got '{}'", names.join(",")),
                ))
            }
        };

        let mut quotes = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                parse_err(line, 1, e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            if record.len() != names.len() {
                return Err(parse_err(line, record.len().min(names.len()) + 1, format!(
                    "expected {} fields, found {}",
                    names.len(),
                    record.len()
                )));
            }
            let field = |col: usize| -> Result<Option<f64>> {
                let raw = &record[col];
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>()
                    .map(Some)
                    .map_err(|_| parse_err(line, col + 1, format!("'{raw}' is not a number")))
            };
            let tenor = field(0)?.ok_or_else(|| parse_err(line, 1, "missing tenor".into()))?;
            let mid = field(1)?;
            let (bid, ask) = if has_bid_ask { (field(2)?, field(3)?) } else { (None, None) };
            let spread_bp = match (mid, bid, ask) {
                (Some(m), _, _) => m,
                (None, Some(b), Some(a)) => 0.5 * (b + a),
                _ => return Err(parse_err(line, 2, "spread_bp missing and no bid/ask pair to derive it from".into())),
            };
            quotes.push(CdsQuote { tenor, spread_bp, bid_bp: bid, ask_bp: ask });
        }
        Self::new(quote_date, quotes, recovery)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_bid_ask = self.quotes.iter().any(|q| q.bid_bp.is_some() || q.ask_bp.is_some());
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| CreditError::Io(std::io::Error::other(e));
        if with_bid_ask {
            w.write_record(["tenor_years", "spread_bp", "bid_bp", "ask_bp"]).map_err(csv_err)?;
        } else {
            w.write_record(["tenor_years", "spread_bp"]).map_err(csv_err)?;
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for q in &self.quotes {
            let mut row = vec![q.tenor.to_string(), q.spread_bp.to_string()];
            if with_bid_ask {
                row.push(opt(q.bid_bp));
                row.push(opt(q.ask_bp));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mid_only() {
        let csv = "tenor_years,spread_bp\n1,16\n3,29\n5,45\n";
        let s = CdsQuoteStrip::read_csv(csv.as_bytes(), None, 0.4).unwrap();
        assert_eq!(s.tenors(), vec![1.0, 3.0, 5.0]);
        assert_eq!(s.quotes[2].spread_bp, 45.0);
    }

    #[test]
    fn derives_mid_from_bid_ask() {
        let csv = "tenor_years,spread_bp,bid_bp,ask_bp\n1,,25,31\n3,,34,39\n";
        let s = CdsQuoteStrip::read_csv(csv.as_bytes(), None, 0.4).unwrap();
        assert_eq!(s.quotes[0].spread_bp, 28.0);
        assert_eq!(s.quotes[1].spread_bp, 36.5);
    }

    #[test]
    fn malformed_number_names_line_and_column() {
        let csv = "tenor_years,spread_bp\n1,16\n3,abc\n";
        match CdsQuoteStrip::read_csv(csv.as_bytes(), None, 0.4) {
            Err(CreditError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header_rejected() {
        let csv = "maturity,spread\n1,16\n";
        assert!(matches!(CdsQuoteStrip::read_csv(csv.as_bytes(), None, 0.4), Err(CreditError::Parse { line: 1, .. })));
    }

    #[test]
    fn non_increasing_tenors_rejected() {
        let csv = "tenor_years,spread_bp\n3,16\n1,29\n";
        assert!(CdsQuoteStrip::read_csv(csv.as_bytes(), None, 0.4).is_err());
    }

    #[test]
    fn bid_above_mid_rejected() {
        let q = CdsQuote { tenor: 1.0, spread_bp: 20.0, bid_bp: Some(25.0), ask_bp: Some(30.0) };
        assert!(CdsQuoteStrip::new(None, vec![q], 0.4).is_err());
    }
}
