//! The Andreotti–Mayer claim attached to a parameter triple.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::torus::moduli_dimension;
use crate::torus::scenario::check_parameters;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AndreottiMayerClaim {
    pub g: usize,
    pub delta: u64,
    pub n: usize,
    /// Lower bound `g − 2δ` for `dim Sing(Θ)`.
    pub k: usize,
    /// Dimension of the family of products `X × Y` the construction starts from.
    pub moduli_lower_bound: usize,
    pub note: Option<String>,
}

pub fn andreotti_mayer_report(g: usize, delta: u64, n: usize) -> Result<AndreottiMayerClaim> {
    check_parameters(n, g, delta)?;
    let k = g - 2 * delta as usize;
    let note = (n == 2 && delta == 2).then(|| {
        "general members are not Jacobians: they carry a positive-dimensional Gauss fiber, while the Gauss map of a \
         Jacobian is finite"
            .to_string()
    });
    Ok(AndreottiMayerClaim { g, delta, n, k, moduli_lower_bound: moduli_dimension(n, g)?, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn instances() {
        let r = andreotti_mayer_report(4, 2, 2).unwrap();
        assert_eq!((r.k, r.moduli_lower_bound), (0, 6));
        assert!(r.note.is_some());
        let r = andreotti_mayer_report(6, 2, 2).unwrap();
        assert_eq!((r.k, r.moduli_lower_bound), (2, 13));
        assert!(matches!(andreotti_mayer_report(4, 3, 2), Err(Error::ParametersOutOfRange { .. })));
    }
}
