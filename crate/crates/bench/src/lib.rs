//! Shared inputs for the benchmarks: one realistic estimation instance on
//! a square array.

use nrc_core::channel::{assemble_channels, gen_physical_channel};
use nrc_core::estimation::{gen_pilot_matrix, process_observation, roundtrip};
use nrc_core::{
    ArrayGeometry, CMat, CVec, Complex64, ImpedanceMatrix, NrcParams, NrcRealization,
    ProcessedObservation, Result, SparsitySupport,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub geometry: ArrayGeometry,
    pub impedance: ImpedanceMatrix,
    pub support: SparsitySupport,
    pub nrc: NrcRealization,
    pub g: CMat,
    pub h: CMat,
    pub observation: ProcessedObservation,
}

impl Instance {
    /// `side x side` array at half-wavelength spacing, `k` users, -20 dB
    /// mismatch variances and 10 dB round-trip SNR.
    pub fn new(side: usize, k: usize, d: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geometry = ArrayGeometry::new(side, side, 0.5)?;
        let impedance = ImpedanceMatrix::from_geometry(&geometry)?;
        let support = SparsitySupport::new(&geometry, d)?;
        let nrc = NrcRealization::draw(
            &NrcParams::from_db(-20.0, -20.0, -20.0),
            &impedance,
            k,
            &mut rng,
        )?;
        let p = gen_physical_channel(side * side, k, &mut rng)?;
        let set = assemble_channels(&p, &nrc, 0)?;
        let pilot = gen_pilot_matrix(side * side)?;
        let y = roundtrip(&set.g, &set.h, &pilot, 10.0, 10.0, Some(&mut rng))?;
        let observation = process_observation(&y, &pilot, 10.0, 10.0, 0)?;
        Ok(Instance {
            geometry,
            impedance,
            support,
            nrc,
            g: set.g,
            h: set.h,
            observation,
        })
    }

    pub fn identity_a(&self) -> CVec {
        CVec::from_element(self.g.ncols(), Complex64::new(1.0, 0.0))
    }
}
