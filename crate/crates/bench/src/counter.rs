//! Counter microbenchmark: the cost of `locally` at a single location.

use choreo_core::transport::{in_process_registry, LocalTransport};
use choreo_core::{ChoreoOp, Choreography, Located, Location, LocationSet, Projector, Result};

use crate::{measure, BenchError, BenchSpec, Sample, Variant};

/// Hides `x` from the optimizer without forcing it to memory, so every
/// increment really happens and nothing else is spilled or reloaded.
#[inline(always)]
pub fn opaque(mut x: u64) -> u64 {
    #[cfg(any(target_arch = "x86_64", target_arch = "aarch64"))]
    // SAFETY: an empty template that only claims to modify `x`.
    unsafe {
        std::arch::asm!("/* {0} */", inout(reg) x, options(pure, nomem, nostack, preserves_flags));
    }
    #[cfg(not(any(target_arch = "x86_64", target_arch = "aarch64")))]
    {
        x = std::hint::black_box(x);
    }
    x
}

pub fn location() -> Location {
    Location::named("counter")
}

/// Initializes a counter and increments it `iterations` times, one
/// `locally` per step.
pub struct Counter {
    pub iterations: u64,
}

impl Choreography<Located<u64>> for Counter {
    fn location_set(&self) -> LocationSet {
        LocationSet::named(&["counter"])
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<u64>> {
        let at = location();
        let mut counter = op.locally(at, |_| Ok(opaque(0u64)))?;
        for _ in 0..self.iterations {
            counter = op.locally(at, |un| Ok(opaque(un.take(counter)? + 1)))?;
        }
        Ok(counter)
    }
}

pub fn count_handwritten(iterations: u64) -> u64 {
    let mut counter = opaque(0u64);
    for _ in 0..iterations {
        counter = opaque(counter + 1);
    }
    counter
}

/// Projects [`Counter`] onto its only location and runs it.
pub fn count_choreographic(transport: &LocalTransport, iterations: u64) -> Result<u64> {
    let set = LocationSet::named(&["counter"]);
    let projector = Projector::new(location(), set, transport)?;
    let counter = projector.epp_and_run(Counter { iterations })?;
    projector.unwrap(counter)
}

/// Single-location endpoint; it never sends.
pub fn endpoint() -> LocalTransport {
    in_process_registry(&LocationSet::named(&["counter"]))
        .remove(&location())
        .expect("registry holds the counter location")
}

pub fn bench(spec: &BenchSpec) -> std::result::Result<Vec<Sample>, BenchError> {
    let transport = endpoint();
    let mut samples = Vec::new();
    for &iterations in &spec.iterations {
        for variant in &spec.variants {
            let value = run_once(&transport, *variant, iterations)?;
            if value != iterations {
                return Err(BenchError::Mismatch(format!(
                    "{variant} counted to {value}, expected {iterations}"
                )));
            }
        }
        samples.extend(measure(spec, iterations, iterations, |variant| {
            Ok(run_once(&transport, variant, iterations)?)
        })?);
    }
    Ok(samples)
}

fn run_once(transport: &LocalTransport, variant: Variant, iterations: u64) -> Result<u64> {
    match variant {
        Variant::Handwritten => Ok(count_handwritten(iterations)),
        Variant::Choreographic => count_choreographic(transport, iterations),
    }
}
