use serde::Serialize;

use crate::dynsys::{spectral_data, SpectralData, SpectralOptions, VectorFieldModel};
use crate::error::Result;
use crate::flow::{boundary_hits, h_constants, CurveOptions, HConstants, HGrid, UnstableCurveData};
use crate::scalar::Real;

use super::law::{ExitLawParams, LimitLaw};
use super::sigma::{sigma_via_adjoint, AdjointOptions, SigmaEstimate};

#[derive(Clone, Copy, Debug)]
pub struct AnalysisOptions<T> {
    pub spectral: SpectralOptions<T>,
    pub curve: CurveOptions<T>,
    pub grid: HGrid<T>,
    pub adjoint: AdjointOptions<T>,
}

impl<T: Real> Default for AnalysisOptions<T> {
    fn default() -> Self {
        Self {
            spectral: SpectralOptions::default(),
            curve: CurveOptions::default(),
            grid: HGrid::default(),
            adjoint: AdjointOptions::default(),
        }
    }
}

/// Every deterministic ingredient of the limit law for one start point.
#[derive(Clone, Debug, Serialize)]
pub struct Analysis<T> {
    pub spectral: SpectralData<T>,
    pub curve: UnstableCurveData<T>,
    pub h: HConstants<T>,
    pub sigma: SigmaEstimate<T>,
    pub law: LimitLaw<T>,
}

/// Spectral data, boundary hits, `h±` and `σ(x0)` for a model whose saddle
/// sits at the origin.
pub fn analyze<T: Real>(model: &VectorFieldModel<T>, x0: &[T], opts: &AnalysisOptions<T>) -> Result<Analysis<T>> {
    let spectral = spectral_data(model, opts.spectral)?;
    let curve = boundary_hits(model, &spectral, &opts.curve)?;
    let h = h_constants(model, &spectral, &curve, &opts.grid, &opts.curve)?;
    let sigma = sigma_via_adjoint(model, &spectral, x0, &opts.adjoint)?;
    let law = LimitLaw::new(ExitLawParams {
        q_plus: curve.q_plus.clone(),
        q_minus: curve.q_minus.clone(),
        h_plus: h.h_plus,
        h_minus: h.h_minus,
        sigma: sigma.sigma,
        lambda: spectral.lambda,
    })?;
    Ok(Analysis { spectral, curve, h, sigma, law })
}
