//! Quantitative checks on solution fields: the Weiss functional, growth and
//! non-degeneracy, the subharmonic witness, blow-ups, Campanato decay and the
//! homogeneous profiles.

mod blowup;
mod campanato;
mod growth;
mod profile;
mod quad;
mod weiss;

pub use blowup::{blowup, blowup_sequence, BlowupSequence};
pub use campanato::{campanato_rate, A0Rule, campanato_rate_about, CampanatoFit};
pub use growth::{
    growth_fit, log_log_fit, nondeg_check, nondeg_check_with, nondeg_floor, subharmonic_witness,
    subharmonic_witness_with, witness_tolerance, GrowthFit, NondegReport,
};
pub use profile::{angular_profile, halfplane_constant, match_profile, AngularProfile, ProfileMatch, Sign};
pub use weiss::{weiss, weiss_series, weiss_with, WeissFactor, WeissSeries};

/// Dyadic radii `r_max, r_max/2, ...` down to `r_min`, ascending.
pub fn dyadic_radii(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        out.push(r);
        r *= 0.5;
    }
    out.reverse();
    out
}
