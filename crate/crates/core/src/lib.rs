//! Time-reversal reconstruction of the photoacoustic initial pressure in
//! attenuating media (thermo-viscous, KSB power-law and NSW relaxation laws),
//! with first- and second-order asymptotic attenuation corrections.

pub mod dispersion;
pub mod error;
pub mod forward;
pub mod jet;
pub mod reversal;
pub mod spectral;
pub mod stats;

pub use dispersion::{AttenuationModel, CorrectionOrder, Relaxation, RhoThreshold};
pub use error::{PatError, Result};
pub use jet::{Jet, JetScalar, TaylorJet};
