from .io import load_csv, read_feature_csv, read_labels_csv, write_feature_csv, write_raw_csv
from .types import (
    ALL_BEHAVIOURS,
    RAW_CHANNELS,
    Behaviour,
    Dataset,
    FeatureSequence,
    LabelSet,
    RawSequence,
    SensorFrame,
)

__all__ = [
    "ALL_BEHAVIOURS", "RAW_CHANNELS", "Behaviour", "Dataset", "FeatureSequence", "LabelSet",
    "RawSequence", "SensorFrame", "load_csv", "read_feature_csv", "read_labels_csv",
    "write_feature_csv", "write_raw_csv",
]
