from .datasets import (
    ImageSet,
    bilinear_resize,
    load_cifar10,
    load_csv,
    load_idx,
    load_points,
    read_column,
    read_idx,
    split_train_test,
    to_grayscale_resize,
)
from .formats import FormatError, read_matrix, write_image, write_matrix

__all__ = [
    "FormatError",
    "ImageSet",
    "bilinear_resize",
    "load_cifar10",
    "load_csv",
    "load_idx",
    "load_points",
    "read_column",
    "read_idx",
    "read_matrix",
    "split_train_test",
    "to_grayscale_resize",
    "write_image",
    "write_matrix",
]
