use super::{build_reference, encode, stratified_split, DataError, EncodedDataset, FeatureSchema, RawDataset, Reference};

/// Train/test encodings plus the reference, all fitted on the training split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: EncodedDataset,
    pub test: EncodedDataset,
    pub reference: Reference,
}

pub fn prepare(raw: &RawDataset, schema: &FeatureSchema, test_fraction: f64, seed: u64) -> Result<Prepared, DataError> {
    let (train_raw, test_raw) = stratified_split(raw, test_fraction, seed)?;
    let train = encode(&train_raw, schema, None)?;
    let test = encode(&test_raw, schema, Some(&train.space.standardization))?;
    let reference = build_reference(&train)?;
    Ok(Prepared { train, test, reference })
}

/// Same as [`prepare`] for a split fixed in advance; row order is kept.
pub fn prepare_fixed(train_raw: &RawDataset, test_raw: &RawDataset, schema: &FeatureSchema) -> Result<Prepared, DataError> {
    let train = encode(train_raw, schema, None)?;
    let test = encode(test_raw, schema, Some(&train.space.standardization))?;
    let reference = build_reference(&train)?;
    Ok(Prepared { train, test, reference })
}
