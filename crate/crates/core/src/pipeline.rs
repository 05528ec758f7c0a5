//! Dataset to fitted model to AUC, with knots placed from the data.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::estimators::{self, RocCurve, DEFAULT_GRID};
use crate::optimizer::{self, FitOptions};
use crate::scalar::Scalar;
use crate::sieve::{build_design, DesignRows, SieveFit, SieveParams};
use crate::splines::{interior_knot_count, make_knots, KnotVector, DEFAULT_ORDER};

/// Everything besides the data that determines a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SieveSettings {
    pub order: usize,
    /// Requested interior time knots; `None` means the integer nearest `n^(1/3)`.
    pub time_knots: Option<usize>,
    pub marker_knots: Option<usize>,
    pub fit: FitOptions,
    pub grid: usize,
}

impl Default for SieveSettings {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            time_knots: None,
            marker_knots: None,
            fit: FitOptions::default(),
            grid: DEFAULT_GRID,
        }
    }
}

/// Knot vectors for `dataset`: time knots at quantiles of the knot anchors,
/// marker knots at quantiles of the markers, on `[0, tau_t]` and `[0, tau_m]`.
pub fn place_knots<T: Scalar>(
    dataset: &Dataset<T>,
    settings: &SieveSettings,
) -> Result<(KnotVector<T>, KnotVector<T>)> {
    let default_count = interior_knot_count(dataset.len());
    let time = make_knots(
        &dataset.anchors(),
        settings.time_knots.unwrap_or(default_count),
        settings.order,
        T::zero(),
        dataset.tau_t(),
    )?;
    let marker = make_knots(
        &dataset.markers(),
        settings.marker_knots.unwrap_or(default_count),
        settings.order,
        T::zero(),
        dataset.tau_m(),
    )?;
    Ok((time, marker))
}

pub fn design_for<T: Scalar>(
    dataset: &Dataset<T>,
    settings: &SieveSettings,
) -> Result<DesignRows<T>> {
    let (time, marker) = place_knots(dataset, settings)?;
    build_design(dataset, &time, &marker)
}

pub fn fit_dataset<T: Scalar>(
    dataset: &Dataset<T>,
    settings: &SieveSettings,
    init: Option<&SieveParams<T>>,
) -> Result<SieveFit<T>> {
    let design = design_for(dataset, settings)?;
    // A start from a differently sized basis (knots collapsed differently) is
    // ignored in favour of the default start.
    let init = init.filter(|start| {
        start.time_count() == design.time_count() && start.marker_count() == design.marker_count()
    });
    optimizer::fit(&design, &settings.fit, init)
}

pub fn roc_at<T: Scalar>(fit: &SieveFit<T>, t: T, settings: &SieveSettings) -> Result<RocCurve<T>> {
    estimators::roc_curve(fit, t, settings.grid)
}

pub fn auc_at<T: Scalar>(fit: &SieveFit<T>, t: T, settings: &SieveSettings) -> Result<T> {
    estimators::auc(fit, t, settings.grid)
}
