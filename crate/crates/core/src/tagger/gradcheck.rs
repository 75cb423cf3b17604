use super::{GoldTags, Gradients, TaggerModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Worst relative error per named parameter.
    pub per_group: Vec<(String, f64)>,
}

/// Central finite differences against the analytic gradient over every
/// parameter; relative error is `|a − f| / max(|a|, |f|, 1e-8)`.
pub fn gradient_check(
    model: &TaggerModel,
    features: &FeatureMatrix,
    gold: &GoldTags,
    eps: f64,
) -> Result<GradCheckReport> {
    gradient_check_with(model, features, gold, eps, |m, x, g| {
        let (_, cache) = m.forward(x)?;
        m.backward(&cache, g, &m.config().class_weights).map(|(_, grads)| grads)
    })
}

/// As [`gradient_check`] with a caller-supplied analytic gradient.
pub fn gradient_check_with<F>(
    model: &TaggerModel,
    features: &FeatureMatrix,
    gold: &GoldTags,
    eps: f64,
    analytic: F,
) -> Result<GradCheckReport>
where
    F: Fn(&TaggerModel, &FeatureMatrix, &GoldTags) -> Result<Gradients>,
{
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidValue(format!("finite-difference step must be positive, got {eps}")));
    }
    let grads = analytic(model, features, gold)?;
    let mut probe = model.clone();
    let mut per_group = Vec::with_capacity(grads.groups.len());
    let mut max_rel_error: f64 = 0.0;
    for (gi, group) in grads.groups.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for (i, &a) in group.iter().enumerate() {
            let orig = probe.params()[gi].data[i];
            probe.params_mut()[gi].data[i] = orig + eps;
            let plus = probe.loss_on(features, gold)?;
            probe.params_mut()[gi].data[i] = orig - eps;
            let minus = probe.loss_on(features, gold)?;
            probe.params_mut()[gi].data[i] = orig;
            let fd = (plus - minus) / (2.0 * eps);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        max_rel_error = max_rel_error.max(worst);
        per_group.push((model.params()[gi].name.clone(), worst));
    }
    Ok(GradCheckReport {
        max_rel_error,
        per_group,
    })
}
