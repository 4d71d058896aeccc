from .data import CutoutDataset, load_image, load_mask, save_probability_map
from .model import UNet, UNetSpec, layer_count
from .predict import combined_predict, predict, predict_array
from .train import TrainConfig, load_checkpoint, train

__all__ = [
    "CutoutDataset", "load_image", "load_mask", "save_probability_map",
    "UNet", "UNetSpec", "layer_count",
    "combined_predict", "predict", "predict_array",
    "TrainConfig", "load_checkpoint", "train",
]
