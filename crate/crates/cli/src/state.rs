//! Initial-state files: one amplitude per line,
//! `sector n1x n1y n1z [n2x n2y n2z] re im`, `#` comments.

use gksl::lindblad::{DensityMatrix, FockBasis};
use gksl::C64;
use nalgebra::DVector;

use crate::CliError;

/// Reads a pure state over `basis`. Repeated basis states add up; the
/// vector is normalized.
pub fn parse_state(text: &str, basis: &FockBasis, origin: &str) -> Result<DensityMatrix, CliError> {
    let mut psi = DVector::from_element(basis.dim(), C64::new(0.0, 0.0));
    let mut any = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| CliError::usage(format!("{origin}:{}: {msg}: `{}`", lineno + 1, raw.trim()));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let sector: usize = fields[0].parse().map_err(|_| at("sector must be 0, 1 or 2"))?;
        let expected = 1 + 3 * sector + 2;
        if sector > 2 || fields.len() != expected {
            return Err(at(&format!("expected {expected} fields for sector {sector}")));
        }
        let ints: Vec<i32> = fields[1..1 + 3 * sector]
            .iter()
            .map(|f| f.parse().map_err(|_| at("mode labels must be integers")))
            .collect::<Result<_, _>>()?;
        let re: f64 = fields[expected - 2].parse().map_err(|_| at("bad real part"))?;
        let im: f64 = fields[expected - 1].parse().map_err(|_| at("bad imaginary part"))?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(at("amplitude must be finite"));
        }
        let labels: Vec<[i32; 3]> = ints.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let index = basis
            .index_of_modes(&labels)
            .ok_or_else(|| at("mode outside the momentum grid"))?;
        psi[index] += C64::new(re, im);
        any = true;
    }
    if !any {
        return Err(CliError::usage(format!("{origin}: state file has no amplitudes")));
    }
    DensityMatrix::pure(&psi).map_err(|e| CliError::usage(format!("{origin}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gksl::lindblad::{BasisState, MomentumGrid};

    fn basis() -> FockBasis {
        FockBasis::new(MomentumGrid::new(4.0, 1, 10.0).unwrap())
    }

    #[test]
    fn superposition_is_normalized() {
        let b = basis();
        let rho = parse_state(
            "# pair superposition\n2 1 0 0 -1 0 0 1 0\n2 0 1 0 0 -1 0 0 1\n",
            &b,
            "s",
        )
        .unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.sector_populations(&b)[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_line() {
        let b = basis();
        let rho = parse_state("0 1 0\n", &b, "s").unwrap();
        let vac = b.index_of(BasisState::Vacuum).unwrap();
        assert_eq!(rho.matrix()[(vac, vac)].re, 1.0);
    }

    #[test]
    fn errors_name_the_line() {
        let b = basis();
        let err = parse_state("0 1 0\n1 0 0 x 1 0\n", &b, "s").unwrap_err();
        assert!(err.message.contains("s:2"), "{}", err.message);
        let err = parse_state("1 5 0 0 1 0\n", &b, "s").unwrap_err();
        assert!(err.message.contains("outside"));
        assert!(parse_state("3 1 0\n", &b, "s").is_err());
    }
}
