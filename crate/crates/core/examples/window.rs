//! Eigenvalues of an exponential well in one momentum window, beside the
//! finite-difference oracle, and the spacing bound for the same interval.

use spacing_core::{eigenvalues_in_window, fd_oracle_eigenvalues, h_of, OracleConfig, Potential, PotentialSpec};

fn main() -> spacing_core::Result<()> {
    let pot = Potential::new(PotentialSpec::exponential(4.0, 1.0))?;
    let (x, k_lo, k_hi) = (30.0, 1.0, 3.0);

    let set = eigenvalues_in_window(&pot, x, k_lo, k_hi)?;
    let e_hi = k_hi * k_hi;
    let oracle = fd_oracle_eigenvalues(&pot, x, k_lo * k_lo, e_hi, &OracleConfig::for_window(x, e_hi))?;

    println!("{:>12} {:>18} {:>18}", "k", "E", "oracle E");
    for (i, (k, e)) in set.eigen_momenta.iter().zip(&set.eigen_energies).enumerate() {
        let o = oracle.eigen_energies.get(i).copied().unwrap_or(f64::NAN);
        println!("{k:>12.8} {e:>18.12} {o:>18.12}");
    }
    println!("h({x}) with a = {k_lo}: {:.6}", h_of(&pot, k_lo, x)?);
    Ok(())
}
