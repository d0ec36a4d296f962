"""Cadastral boundary delineation from orthoimages."""

from ._boundline import (
    BoundlineError,
    GeoTransform,
    LineNetwork,
    assess,
    build_network,
    buffer_filter,
    classify_sinuosity,
    clean_topology,
    connect_nodes,
    detect_contours,
    load_image,
    parse_world_file,
    read_world_file,
    run_pipeline,
    simplify_line,
    sinuosity,
    slic,
    srgb_to_lab,
)

__all__ = [
    "BoundlineError",
    "GeoTransform",
    "LineNetwork",
    "assess",
    "build_network",
    "buffer_filter",
    "classify_sinuosity",
    "clean_topology",
    "connect_nodes",
    "detect_contours",
    "load_image",
    "parse_world_file",
    "read_world_file",
    "run_pipeline",
    "simplify_line",
    "sinuosity",
    "slic",
    "srgb_to_lab",
]
