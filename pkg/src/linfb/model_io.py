"""Robot model file loader.

Models are YAML files listing joints in topological order. Schema
(units in comments):

    name: bolt-lite
    gravity: [0.0, 0.0, -9.81]        # m/s^2, world frame
    joints:
      - name: r_hip_abduction
        parent: base                  # "base" or the name of an earlier joint
        translation: [0.0, -0.1, 0.0] # m, parent link frame -> joint frame
        rpy: [0.0, 0.0, 0.0]          # rad, fixed placement rotation (XYZ)
        axis: [1.0, 0.0, 0.0]         # unit, joint frame
        mass: 0.15                    # kg
        com: [0.0, 0.0, -0.02]        # m, link frame
        inertia: [ixx, iyy, izz, ixy, ixz, iyz]   # kg m^2, about the COM
        damping: 0.01                 # N m s/rad
        torque_limit: 2.7             # N m
    frames:
      right_foot: {link: r_knee_flexion, translation: [0.0, 0.0, -0.2]}
"""

from __future__ import annotations

import importlib.resources
import math

import numpy as np
import yaml

from .dynamics import Frame, JointSpec, ModelError, RobotModel

DEFAULT_MODEL = "bolt_lite"


def _rpy_matrix(rpy) -> np.ndarray:
    r, p, y = [float(a) for a in rpy]
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]], dtype=float)
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]], dtype=float)
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]], dtype=float)
    return Rz @ Ry @ Rx


def _inertia_matrix(vals) -> np.ndarray:
    try:
        arr = np.asarray(vals, dtype=float)
    except (TypeError, ValueError) as e:
        raise ModelError(f"bad inertia entry: {e}") from None
    if arr.shape == (6,):
        ixx, iyy, izz, ixy, ixz, iyz = arr
        return np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    if arr.shape in ((3, 3), (9,)):
        return arr.reshape(3, 3)
    raise ModelError("inertia must be 6 values (ixx iyy izz ixy ixz iyz) "
                     "or a full 3x3 matrix")


def model_from_dict(doc: dict) -> RobotModel:
    try:
        joint_docs = doc["joints"]
    except KeyError:
        raise ModelError("model file is missing 'joints'") from None
    index = {"base": -1}
    joints = []
    for i, jd in enumerate(joint_docs):
        name = str(jd.get("name", f"joint{i}"))
        parent_name = str(jd.get("parent", "base"))
        if parent_name not in index:
            raise ModelError(f"joint {name!r}: unknown parent "
                             f"{parent_name!r} (joints must be listed in "
                             "topological order)")
        joints.append(JointSpec(
            parent=index[parent_name],
            translation=jd.get("translation", (0.0, 0.0, 0.0)),
            rotation=_rpy_matrix(jd.get("rpy", (0.0, 0.0, 0.0))),
            axis=jd["axis"],
            mass=float(jd["mass"]),
            com=jd.get("com", (0.0, 0.0, 0.0)),
            inertia=_inertia_matrix(jd["inertia"]),
            damping=float(jd.get("damping", 0.0)),
            torque_limit=float(jd.get("torque_limit", 2.7)),
            name=name,
        ))
        index[name] = i
    frames = {}
    for fname, fd in (doc.get("frames") or {}).items():
        link = fd["link"]
        if isinstance(link, str):
            if link not in index or link == "base":
                raise ModelError(f"frame {fname!r}: unknown link {link!r}")
            link = index[link]
        frames[str(fname)] = Frame(
            link=int(link),
            translation=fd.get("translation", (0.0, 0.0, 0.0)),
            rotation=_rpy_matrix(fd.get("rpy", (0.0, 0.0, 0.0))),
        )
    return RobotModel(joints, gravity=doc.get("gravity", (0.0, 0.0, -9.81)),
                      frames=frames, name=str(doc.get("name", "robot")))


def load_model(path_or_name: str) -> RobotModel:
    """Load a model from a YAML file path or a packaged model name."""
    if path_or_name == DEFAULT_MODEL or path_or_name == "bolt-lite":
        text = (importlib.resources.files("linfb.data") / "bolt_lite.yaml"
                ).read_text()
    else:
        with open(path_or_name) as f:
            text = f.read()
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a YAML mapping")
    return model_from_dict(doc)
