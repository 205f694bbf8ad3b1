//! A client checks a password attempt against the server's secret.

use choreo_core::{ChoreoOp, Choreography, Located, Location, LocationSet, Placement, Result};

pub fn client() -> Location {
    Location::named("client")
}

pub fn server() -> Location {
    Location::named("server")
}

pub fn locations() -> LocationSet {
    LocationSet::named(&["client", "server"])
}

pub struct PasswordAuth {
    pub attempt: Located<String>,
    pub correct: Located<String>,
}

impl PasswordAuth {
    pub fn place(p: &impl Placement, attempt: &str, correct: &str) -> Self {
        Self {
            attempt: p.place(client(), || attempt.to_owned()),
            correct: p.place(server(), || correct.to_owned()),
        }
    }
}

impl Choreography<Located<bool>> for PasswordAuth {
    fn location_set(&self) -> LocationSet {
        locations()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<bool>> {
        let password = op.comm(client(), server(), &self.attempt)?;
        let valid = op.locally(server(), |un| {
            Ok(un.unwrap(&password)? == un.unwrap(&self.correct)?)
        })?;
        op.comm(server(), client(), &valid)
    }
}
