"""Synthetic dynamic grounding scenes: generator, file format and loader."""
from .actors import Actor, sample_actors
from .dataset import DatasetManifest, build_dataset
from .fileformat import (
    SceneAnnotation,
    decode_scene,
    encode_scene,
    read_annotation,
    read_scene,
    write_scene,
)
from .language import (
    Attributes,
    describe,
    ground_words,
    parse_words,
    resolve,
    template_vocabulary,
)
from .loader import Batch, SceneDataset, collate
from .scene import Scene, generate_scene
from .seeds import child_seed, splitmix64

__all__ = [
    "Actor",
    "Attributes",
    "Batch",
    "DatasetManifest",
    "Scene",
    "SceneAnnotation",
    "SceneDataset",
    "build_dataset",
    "child_seed",
    "collate",
    "decode_scene",
    "describe",
    "encode_scene",
    "generate_scene",
    "ground_words",
    "parse_words",
    "read_annotation",
    "read_scene",
    "resolve",
    "sample_actors",
    "splitmix64",
    "template_vocabulary",
    "write_scene",
]
