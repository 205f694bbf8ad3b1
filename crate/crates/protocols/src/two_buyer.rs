//! Two buyers split the price of a book.
//!
//! `buyer2` only contributes money. In the [`Variant::Naive`] form the
//! purchase decision is broadcast to every participant, `buyer2` included;
//! [`Variant::Enclave`] runs the decision inside an enclave of `buyer1` and
//! `seller`, so `buyer2` never hears about it.

use serde::{Deserialize, Serialize};

use choreo_core::{ChoreoOp, Choreography, Located, Location, LocationSet, Placement, Result};

use crate::bookseller::delivery_for;
use crate::catalog::{settle, Catalog, Purchase, Quote};

pub fn buyer1() -> Location {
    Location::named("buyer1")
}

pub fn buyer2() -> Location {
    Location::named("buyer2")
}

pub fn seller() -> Location {
    Location::named("seller")
}

pub fn locations() -> LocationSet {
    LocationSet::named(&["buyer1", "buyer2", "seller"])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Naive,
    Enclave,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Naive, Variant::Enclave];
}

pub struct TwoBuyer {
    pub variant: Variant,
    pub title: Located<String>,
    pub budget1: Located<u32>,
    pub budget2: Located<u32>,
    pub catalog: Located<Catalog>,
}

#[derive(Debug, Clone)]
pub struct TwoBuyerInputs {
    pub title: String,
    pub budget1: u32,
    pub budget2: u32,
    pub catalog: Catalog,
}

impl TwoBuyerInputs {
    pub fn place(&self, variant: Variant, p: &impl Placement) -> TwoBuyer {
        TwoBuyer {
            variant,
            title: p.place(buyer1(), || self.title.clone()),
            budget1: p.place(buyer1(), || self.budget1),
            budget2: p.place(buyer2(), || self.budget2),
            catalog: p.place(seller(), || self.catalog.clone()),
        }
    }
}

/// Everything the decision branch reads.
struct Decision<'a> {
    decision: Located<bool>,
    quote: Located<Quote>,
    title: &'a Located<String>,
    title_at_seller: Located<String>,
    catalog: &'a Located<Catalog>,
}

fn decide<O: ChoreoOp>(op: &O, d: &Decision<'_>) -> Result<Located<Purchase>> {
    let (buyer1, seller) = (buyer1(), seller());
    if op.broadcast(buyer1, &d.decision)? {
        let date = op.locally(seller, |un| {
            delivery_for(un.unwrap(d.catalog)?, un.unwrap(&d.title_at_seller)?)
        })?;
        let date = op.comm(seller, buyer1, &date)?;
        op.locally(buyer1, |un| {
            Ok(settle(
                un.unwrap(d.title)?,
                *un.unwrap(&d.quote)?,
                Some(*un.unwrap(&date)?),
            ))
        })
    } else {
        op.locally(buyer1, |un| {
            Ok(settle(un.unwrap(d.title)?, *un.unwrap(&d.quote)?, None))
        })
    }
}

struct Enclosed<'a>(Decision<'a>);

impl Choreography<Located<Purchase>> for Enclosed<'_> {
    fn location_set(&self) -> LocationSet {
        LocationSet::named(&["buyer1", "seller"])
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<Purchase>> {
        decide(op, &self.0)
    }
}

impl Choreography<Located<Purchase>> for TwoBuyer {
    fn location_set(&self) -> LocationSet {
        locations()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<Purchase>> {
        let (buyer1, buyer2, seller) = (buyer1(), buyer2(), seller());
        let title_at_seller = op.comm(buyer1, seller, &self.title)?;
        let quote_at_seller = op.locally(seller, |un| {
            Ok(un.unwrap(&self.catalog)?.quote(un.unwrap(&title_at_seller)?))
        })?;
        let quote = op.comm(seller, buyer1, &quote_at_seller)?;
        // buyer2 sees the quote but always offers its whole budget.
        let _quote_at_buyer2 = op.comm(seller, buyer2, &quote_at_seller)?;
        let contribution = op.comm(buyer2, buyer1, &self.budget2)?;
        let decision = op.locally(buyer1, |un| {
            let funds = u64::from(*un.unwrap(&self.budget1)?) + u64::from(*un.unwrap(&contribution)?);
            Ok(un.unwrap(&quote)?.affordable(funds))
        })?;

        let branch = Decision {
            decision,
            quote,
            title: &self.title,
            title_at_seller,
            catalog: &self.catalog,
        };
        match self.variant {
            Variant::Naive => decide(op, &branch),
            Variant::Enclave => op
                .enclave(&LocationSet::named(&["buyer1", "seller"]), Enclosed(branch))?
                .located_at(buyer1),
        }
    }
}
