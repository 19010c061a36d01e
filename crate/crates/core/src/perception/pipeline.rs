use super::{
    form_output_profile, BoxImage, CnnModel, DisturbanceProfile, LstmModel, PerceptionError,
};

/// Every `stride`-th sample, starting with the first.
pub fn downsample(x: &[f64], stride: usize) -> Vec<f64> {
    x.iter().step_by(stride.max(1)).copied().collect()
}

/// Linear interpolation of a `stride`-spaced series back to `len` samples;
/// the last value is held past the end.
pub fn upsample(y: &[f64], stride: usize, len: usize) -> Vec<f64> {
    let stride = stride.max(1);
    (0..len)
        .map(|k| {
            let j = k / stride;
            match (y.get(j), y.get(j + 1)) {
                (Some(a), Some(b)) => {
                    let f = (k % stride) as f64 / stride as f64;
                    a + f * (b - a)
                }
                (Some(a), None) => *a,
                _ => y.last().copied().unwrap_or(0.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub output_profile: DisturbanceProfile,
    /// Predicted input disturbance at the simulation rate.
    pub d_p: DisturbanceProfile,
}

/// Profile formation and LSTM mapping for a known class.
pub fn predict_for_class(
    class: usize,
    lstm: &LstmModel,
    base: &DisturbanceProfile,
) -> Result<Prediction, PerceptionError> {
    let output_profile = form_output_profile(class, base)?;
    let coarse = lstm.forward(&downsample(&output_profile.samples, lstm.downsample));
    let d_p = output_profile.with_samples(upsample(&coarse, lstm.downsample, output_profile.len()));
    Ok(Prediction {
        class,
        output_profile,
        d_p,
    })
}

/// Classifies `img`, forms the output profile of the predicted class and
/// maps it to the input disturbance.
pub fn predict_input_disturbance(
    img: &BoxImage,
    cnn: &CnnModel,
    lstm: &LstmModel,
    base: &DisturbanceProfile,
) -> Result<Prediction, PerceptionError> {
    predict_for_class(cnn.classify(img)?, lstm, base)
}
