"""Click and scribble driven segmentation refinement.

Masks are 2-D boolean (or 0/1 uint8) arrays, images are HxWx3 uint8 arrays
and coordinates are (x, y) with x along columns.
"""

from ._core import (
    FcxlError,
    Session,
    eval_click,
    eval_scribble,
    evaluate,
    expand_box,
    focus_crop,
    iou,
    medial_axis,
    perturb_mask,
    progressive_merge,
    refine_blend,
    rle_decode,
    rle_encode,
    simulate_defective_mask,
    slic,
)


def error_code(err: FcxlError) -> str:
    """Stable machine-readable code of an FcxlError, e.g. "already-perfect"."""
    return str(err).split(":", 1)[0]


__all__ = [
    "FcxlError",
    "Session",
    "error_code",
    "eval_click",
    "eval_scribble",
    "evaluate",
    "expand_box",
    "focus_crop",
    "iou",
    "medial_axis",
    "perturb_mask",
    "progressive_merge",
    "refine_blend",
    "rle_decode",
    "rle_encode",
    "simulate_defective_mask",
    "slic",
]
