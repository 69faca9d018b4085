"""Feed-forward tan-sigmoid classifier for categorical election-participation surveys."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .dataset import (  # noqa: E402
    DataError,
    Dataset,
    EncodedDataset,
    Record,
    SplitIndices,
    dedupe,
    encode,
    load_csv,
    split,
)
from .network import Mlp, backprop, forward, init, mse, predict, tansig  # noqa: E402
from .schema import FeatureDef, FeatureSchema, SchemaError, default_schema  # noqa: E402
from .synth import PlantedRule, synthesize  # noqa: E402
from .training import NumericalError, TrainConfig, TrainResult, evaluate, train  # noqa: E402
