"""Action-conditioned human motion generation (Python front end).

Motions are plain dicts with ``rotations`` [T, J, 6], ``displacement`` [T, 3],
``action`` and ``fps``.
"""

import json

from ._actor import (
    ActorError,
    Model,
    builtin_actions,
    fid,
    forward_kinematics,
    geodesic_distance,
    jitter_score,
    kl_divergence,
    load_motion,
    matrix_to_sixd,
    sixd_to_matrix,
)
from . import _actor

__all__ = [
    "ActorError",
    "Model",
    "builtin_actions",
    "fid",
    "forward_kinematics",
    "generate_dataset",
    "geodesic_distance",
    "jitter_score",
    "kl_divergence",
    "load_motion",
    "matrix_to_sixd",
    "save_motion",
    "sixd_to_matrix",
]


def generate_dataset(out_dir, **spec):
    """Synthesize a labeled dataset into ``out_dir``.

    Keyword arguments override the dataset spec, e.g.
    ``generate_dataset("data", sequences_per_action=20, duration=[40, 60])``.
    """
    _actor.generate_dataset(json.dumps(spec), out_dir)


def save_motion(path, motion):
    _actor.save_motion(path, motion["rotations"], motion["displacement"],
                       int(motion.get("action", 0)), float(motion.get("fps", 20.0)))
