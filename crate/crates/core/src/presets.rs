//! Bundled market inputs: three dated Lehman Brothers CDS strips and the
//! counterparty strip plus equity terms for the equity return swap example.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{CdsQuote, CdsQuoteStrip};

/// Bumped whenever a preset's expansion changes.
pub const PRESET_VERSION: u32 = 1;

pub const PILLARS: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 10.0];
pub const DEFAULT_RECOVERY: f64 = 0.40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "lehman-2007-07-10")]
    Lehman20070710,
    #[serde(rename = "lehman-2008-06-12")]
    Lehman20080612,
    #[serde(rename = "lehman-2008-09-12")]
    Lehman20080912,
    #[serde(rename = "ers-2009-09-16")]
    Ers20090916,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::Lehman20070710, Preset::Lehman20080612, Preset::Lehman20080912, Preset::Ers20090916];

    pub const LEHMAN: [Preset; 3] = [Preset::Lehman20070710, Preset::Lehman20080612, Preset::Lehman20080912];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lehman20070710 => "lehman-2007-07-10",
            Preset::Lehman20080612 => "lehman-2008-06-12",
            Preset::Lehman20080912 => "lehman-2008-09-12",
            Preset::Ers20090916 => "ers-2009-09-16",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn date(self) -> NaiveDate {
        let (y, m, d) = match self {
            Preset::Lehman20070710 => (2007, 7, 10),
            Preset::Lehman20080612 => (2008, 6, 12),
            Preset::Lehman20080912 => (2008, 9, 12),
            Preset::Ers20090916 => (2009, 9, 16),
        };
        NaiveDate::from_ymd_opt(y, m, d).expect("valid preset date")
    }

    pub fn strip(self) -> CdsQuoteStrip {
        let quotes: Vec<CdsQuote> = match self {
            Preset::Lehman20070710 => mids(&[16.0, 29.0, 45.0, 50.0, 58.0]),
            Preset::Lehman20080612 => mids(&[397.0, 315.0, 277.0, 258.0, 240.0]),
            Preset::Lehman20080912 => mids(&[1437.0, 902.0, 710.0, 636.0, 588.0]),
            Preset::Ers20090916 => PILLARS
                .iter()
                .zip([(25.0, 31.0), (34.0, 39.0), (42.0, 47.0), (46.0, 51.0), (50.0, 55.0)])
                .map(|(&t, (bid, ask))| CdsQuote::from_bid_ask(t, bid, ask))
                .collect(),
        };
        CdsQuoteStrip { quote_date: Some(self.date()), quotes, recovery: DEFAULT_RECOVERY }
    }

    /// Equity return swap terms; only the ERS preset carries them.
    pub fn ers_terms(self) -> Option<ErsTerms> {
        match self {
            Preset::Ers20090916 => Some(ErsTerms::default()),
            _ => None,
        }
    }

    pub fn expansion(self) -> PresetExpansion {
        PresetExpansion { name: self.name().to_string(), version: PRESET_VERSION, strip: self.strip(), ers: self.ers_terms() }
    }
}

fn mids(spreads: &[f64]) -> Vec<CdsQuote> {
    PILLARS.iter().zip(spreads).map(|(&t, &s)| CdsQuote::mid(t, s)).collect()
}

/// Equity and contract terms of the bundled equity return swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErsTerms {
    pub stock_count: f64,
    pub s0: f64,
    pub equity_vol: f64,
    pub dividend_yield: f64,
    pub maturity: f64,
    pub payments_per_year: u32,
    pub recovery: f64,
}

impl Default for ErsTerms {
    fn default() -> Self {
        Self {
            stock_count: 1.0,
            s0: 20.0,
            equity_vol: 0.20,
            dividend_yield: 0.008,
            maturity: 5.0,
            payments_per_year: 2,
            recovery: DEFAULT_RECOVERY,
        }
    }
}

/// Versioned, checksummed record of what a preset expanded to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetExpansion {
    pub name: String,
    pub version: u32,
    pub strip: CdsQuoteStrip,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ers: Option<ErsTerms>,
}

impl PresetExpansion {
    /// SHA-256 of the canonical JSON encoding.
    pub fn checksum(&self) -> String {
        let json = serde_json::to_vec(self).expect("preset expansion serializes");
        hex::encode(Sha256::digest(&json))
    }
}
