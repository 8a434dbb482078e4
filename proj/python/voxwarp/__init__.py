"""Voxel-grid NeRF rendering with sparse radiance warping and trace-driven
memory-system simulation. Thin re-export of the compiled module."""

from _voxwarp import (
    Scene,
    builtin_trajectory,
    psnr,
    remote_cost,
    render_frame,
    run_experiment,
    trace_stats,
    warp_sequence,
)

__all__ = [
    "Scene",
    "builtin_trajectory",
    "psnr",
    "remote_cost",
    "render_frame",
    "run_experiment",
    "trace_stats",
    "warp_sequence",
]
