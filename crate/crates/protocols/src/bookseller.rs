//! A buyer asks a seller for a book and buys it if the price fits the budget.

use chrono::NaiveDate;

use choreo_core::{
    ChoreoError, ChoreoOp, Choreography, Located, Location, LocationSet, Placement, Result,
};

use crate::catalog::{settle, Catalog, Purchase};

pub fn buyer() -> Location {
    Location::named("buyer")
}

pub fn seller() -> Location {
    Location::named("seller")
}

pub fn locations() -> LocationSet {
    LocationSet::named(&["buyer", "seller"])
}

pub struct Bookseller {
    pub budget: Located<u32>,
    pub title: Located<String>,
    pub catalog: Located<Catalog>,
}

/// Plain inputs, placed per location by [`BooksellerInputs::place`].
#[derive(Debug, Clone)]
pub struct BooksellerInputs {
    pub budget: u32,
    pub title: String,
    pub catalog: Catalog,
}

impl BooksellerInputs {
    pub fn place(&self, p: &impl Placement) -> Bookseller {
        Bookseller {
            budget: p.place(buyer(), || self.budget),
            title: p.place(buyer(), || self.title.clone()),
            catalog: p.place(seller(), || self.catalog.clone()),
        }
    }
}

impl Choreography<Located<Purchase>> for Bookseller {
    fn location_set(&self) -> LocationSet {
        locations()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<Purchase>> {
        let (buyer, seller) = (buyer(), seller());
        let title_at_seller = op.comm(buyer, seller, &self.title)?;
        let quote_at_seller = op.locally(seller, |un| {
            Ok(un.unwrap(&self.catalog)?.quote(un.unwrap(&title_at_seller)?))
        })?;
        let quote = op.comm(seller, buyer, &quote_at_seller)?;
        let decision = op.locally(buyer, |un| {
            let budget = u64::from(*un.unwrap(&self.budget)?);
            Ok(un.unwrap(&quote)?.affordable(budget))
        })?;

        if op.broadcast(buyer, &decision)? {
            let date = op.locally(seller, |un| {
                delivery_for(un.unwrap(&self.catalog)?, un.unwrap(&title_at_seller)?)
            })?;
            let date = op.comm(seller, buyer, &date)?;
            op.locally(buyer, |un| {
                Ok(settle(
                    un.unwrap(&self.title)?,
                    *un.unwrap(&quote)?,
                    Some(*un.unwrap(&date)?),
                ))
            })
        } else {
            op.locally(buyer, |un| {
                Ok(settle(un.unwrap(&self.title)?, *un.unwrap(&quote)?, None))
            })
        }
    }
}

pub(crate) fn delivery_for(catalog: &Catalog, title: &str) -> Result<NaiveDate> {
    catalog
        .delivery(title)
        .ok_or_else(|| ChoreoError::Invariant(format!("sold `{title}` without a delivery date")))
}
