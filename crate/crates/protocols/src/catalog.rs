use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use choreo_core::{ChoreoError, Result};

/// Prices and delivery dates, as kept by a seller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    prices: BTreeMap<String, u32>,
    delivery: BTreeMap<String, NaiveDate>,
}

/// The seller's answer to a title.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quote {
    Price(u32),
    UnknownTitle,
}

/// Error value a buyer ends up with when the seller has no such title.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PurchaseError {
    UnknownTitle(String),
}

/// What a buyer learns from a purchase attempt: the delivery date if the
/// book was bought, `None` if it was over budget.
pub type Purchase = std::result::Result<Option<NaiveDate>, PurchaseError>;

impl Catalog {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u32, NaiveDate)>,
        S: Into<String>,
    {
        let mut catalog = Self {
            prices: BTreeMap::new(),
            delivery: BTreeMap::new(),
        };
        for (title, price, date) in entries {
            let title = title.into();
            if catalog.prices.insert(title.clone(), price).is_some() {
                return Err(ChoreoError::Configuration(format!(
                    "title `{title}` listed twice"
                )));
            }
            catalog.delivery.insert(title, date);
        }
        Ok(catalog)
    }

    /// A small fixed catalog used by the demos and tests.
    pub fn sample() -> Self {
        let date = |m, d| NaiveDate::from_ymd_opt(2024, m, d).expect("valid date");
        Self::new([
            ("TAPL", 80, date(3, 1)),
            ("HoTT", 120, date(4, 15)),
            ("SICP", 45, date(2, 20)),
        ])
        .expect("distinct titles")
    }

    pub fn quote(&self, title: &str) -> Quote {
        self.prices
            .get(title)
            .map_or(Quote::UnknownTitle, |p| Quote::Price(*p))
    }

    pub fn price(&self, title: &str) -> Option<u32> {
        self.prices.get(title).copied()
    }

    pub fn delivery(&self, title: &str) -> Option<NaiveDate> {
        self.delivery.get(title).copied()
    }

    pub fn titles(&self) -> impl Iterator<Item = &str> {
        self.prices.keys().map(String::as_str)
    }
}

impl Quote {
    /// Whether a buyer with `funds` takes the offer.
    pub fn affordable(self, funds: u64) -> bool {
        matches!(self, Quote::Price(p) if u64::from(p) <= funds)
    }
}

/// Builds the buyer's result from the decision and, when buying, the date.
pub(crate) fn settle(title: &str, quote: Quote, date: Option<NaiveDate>) -> Purchase {
    match quote {
        Quote::UnknownTitle => Err(PurchaseError::UnknownTitle(title.to_owned())),
        Quote::Price(_) => Ok(date),
    }
}
