"""Scenario-config JSON serialization and validation.

The schema is documented in docs/formats.md; every field error raises
ConfigError naming the offending field.
"""
from __future__ import annotations

import json

import numpy as np

from .chain import FrictionParams, JointState, KinematicChain
from .controller import AlignmentParams, ImpedanceParams, SmcParams
from .environment import EndToolGeometry, EnvParams, SurfaceModel
from .errors import ConfigError
from .simulator import ScenarioConfig


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}.{key}" if where else key, "missing required field")
    return d[key]


def _inertias_from(raw, n: int) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape == (n, 3):
        return np.stack([np.diag(row) for row in arr])
    if arr.shape == (n, 3, 3):
        return arr
    raise ConfigError("chain.inertias", f"expected shape ({n},3) or ({n},3,3), got {arr.shape}")


def chain_from_dict(d: dict) -> KinematicChain:
    axes = np.asarray(_req(d, "axes", "chain"), dtype=float)
    n = axes.shape[0]
    return KinematicChain(
        axes=axes,
        offsets=np.asarray(_req(d, "offsets", "chain"), dtype=float),
        masses=np.asarray(_req(d, "masses", "chain"), dtype=float),
        coms=np.asarray(_req(d, "coms", "chain"), dtype=float),
        inertias=_inertias_from(_req(d, "inertias", "chain"), n),
        ee_offset=np.asarray(d.get("ee_offset", [0.0, 0.0, 0.0]), dtype=float),
        gravity=np.asarray(d.get("gravity", [0.0, 0.0, -9.81]), dtype=float),
        joint_limits=np.asarray(d.get("joint_limits", [[-np.pi, np.pi]] * n), dtype=float),
    )


def chain_to_dict(c: KinematicChain) -> dict:
    return {
        "axes": c.axes.tolist(),
        "offsets": c.offsets.tolist(),
        "masses": c.masses.tolist(),
        "coms": c.coms.tolist(),
        "inertias": c.inertias.tolist(),
        "ee_offset": c.ee_offset.tolist(),
        "gravity": c.gravity.tolist(),
        "joint_limits": c.joint_limits.tolist(),
    }


def surface_from_dict(d: dict) -> SurfaceModel:
    kind = _req(d, "kind", "surface")
    if kind == "plane":
        return SurfaceModel(kind="plane",
                            anchor=np.asarray(_req(d, "anchor", "surface"), dtype=float),
                            normal=np.asarray(_req(d, "normal", "surface"), dtype=float),
                            z_n=float(d.get("z_n", 0.0)))
    if kind == "sphere":
        return SurfaceModel(kind="sphere",
                            anchor=np.asarray(_req(d, "center", "surface"), dtype=float),
                            radius=float(_req(d, "radius", "surface")),
                            z_n=float(d.get("z_n", 0.0)))
    raise ConfigError("surface.kind", f"unknown kind {kind!r}")


def surface_to_dict(s: SurfaceModel) -> dict:
    if s.kind == "plane":
        return {"kind": "plane", "anchor": s.anchor.tolist(),
                "normal": s.normal.tolist(), "z_n": s.z_n}
    return {"kind": "sphere", "center": s.anchor.tolist(),
            "radius": s.radius, "z_n": s.z_n}


def config_from_dict(d: dict) -> ScenarioConfig:
    try:
        chain = chain_from_dict(_req(d, "chain", ""))
        fric = d.get("friction")
        friction = None
        if fric is not None:
            friction = FrictionParams(
                Fc=np.asarray(_req(fric, "Fc", "friction"), dtype=float),
                Fs=np.asarray(_req(fric, "Fs", "friction"), dtype=float),
                Fv=np.asarray(_req(fric, "Fv", "friction"), dtype=float),
                vs=np.asarray(_req(fric, "vs", "friction"), dtype=float))
        env_d = _req(d, "env", "")
        imp = _req(d, "impedance", "")
        smc = _req(d, "smc", "")
        ali = d.get("alignment", {})
        noise = d.get("noise", {})
        me = d.get("model_error", {})
        fp = d.get("force_profile", {})
        init = _req(d, "initial_state", "")
        mw = d.get("metrics_window")
        return ScenarioConfig(
            name=str(d.get("name", "scenario")),
            seed=int(_req(d, "seed", "")),
            dt=float(_req(d, "dt", "")),
            duration=float(_req(d, "duration", "")),
            chain=chain,
            friction=friction,
            surface=surface_from_dict(_req(d, "surface", "")),
            env=EnvParams(k_e=float(_req(env_d, "k_e", "env")),
                          b_e=float(env_d.get("b_e", 0.0)),
                          damp_at_contact_point=bool(env_d.get("damp_at_contact_point", False))),
            tool=EndToolGeometry(r_off=float(_req(d["tool"], "r_off", "tool")),
                                 r_R=float(_req(d["tool"], "r_R", "tool"))),
            impedance=ImpedanceParams(
                M_d=np.asarray(_req(imp, "M_d", "impedance"), dtype=float),
                B_d=np.asarray(_req(imp, "B_d", "impedance"), dtype=float),
                K_d=np.asarray(_req(imp, "K_d", "impedance"), dtype=float),
                I_d=np.asarray(_req(imp, "I_d", "impedance"), dtype=float),
                K_1=np.asarray(_req(imp, "K_1", "impedance"), dtype=float),
                P_bar=np.asarray(_req(imp, "P_bar", "impedance"), dtype=float)),
            smc=SmcParams(
                bD0=float(_req(smc, "bD0", "smc")), bD1=float(_req(smc, "bD1", "smc")),
                bD2=float(_req(smc, "bD2", "smc")), alpha=float(_req(smc, "alpha", "smc")),
                K=np.asarray(smc.get("K", [0.0] * chain.n), dtype=float),
                phi=float(smc.get("phi", 0.05)),
                Q_floor=None if smc.get("Q_floor") is None
                else np.asarray(smc["Q_floor"], dtype=float),
                mode=str(smc.get("mode", "tanh"))),
            alignment=AlignmentParams(
                mode=str(ali.get("mode", "frictionless")),
                r_m=float(ali.get("r_m", 0.1)),
                torque_deadband=float(ali.get("torque_deadband", 1e-4)),
                force_threshold=float(ali.get("force_threshold", 0.5)),
                B_d_omega=np.asarray(ali.get("B_d_omega", [2.0, 2.0, 2.0]), dtype=float)),
            initial_state=JointState(q=np.asarray(_req(init, "q", "initial_state"), dtype=float),
                                     qdot=np.asarray(init.get("qdot", [0.0] * chain.n), dtype=float)),
            force_amplitude=float(fp.get("amplitude", 10.0)),
            force_rate=float(fp.get("rate", 0.2)),
            velocity_segments=tuple(tuple(s) for s in d.get("velocity_segments", [])),
            velocity_ramp=float(d.get("velocity_ramp", 0.0)),
            noise_mean=float(noise.get("mean", 0.0)),
            noise_std=float(noise.get("std", 0.0)),
            noise_on_qdot=bool(noise.get("on_qdot", False)),
            gravity_scale=float(me.get("gravity_scale", 1.0)),
            inertia_scale=float(me.get("inertia_scale", 1.0)),
            inertia_joints=tuple(me.get("inertia_joints", [])),
            filter_window=int(d.get("filter_window", 1)),
            controller_divider=int(d.get("controller_divider", 1)),
            metrics_window=None if mw is None else (float(mw[0]), float(mw[1])),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("<config>", str(exc)) from exc


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "name": cfg.name,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "duration": cfg.duration,
        "chain": chain_to_dict(cfg.chain),
        "friction": None if cfg.friction is None else {
            "Fc": cfg.friction.Fc.tolist(), "Fs": cfg.friction.Fs.tolist(),
            "Fv": cfg.friction.Fv.tolist(), "vs": cfg.friction.vs.tolist()},
        "surface": surface_to_dict(cfg.surface),
        "env": {"k_e": cfg.env.k_e, "b_e": cfg.env.b_e,
                "damp_at_contact_point": cfg.env.damp_at_contact_point},
        "tool": {"r_off": cfg.tool.r_off, "r_R": cfg.tool.r_R},
        "impedance": {k: getattr(cfg.impedance, k).tolist()
                      for k in ("M_d", "B_d", "K_d", "I_d", "K_1", "P_bar")},
        "smc": {"bD0": cfg.smc.bD0, "bD1": cfg.smc.bD1, "bD2": cfg.smc.bD2,
                "alpha": cfg.smc.alpha, "K": cfg.smc.K.tolist(), "phi": cfg.smc.phi,
                "Q_floor": None if cfg.smc.Q_floor is None else cfg.smc.Q_floor.tolist(),
                "mode": cfg.smc.mode},
        "alignment": {"mode": cfg.alignment.mode, "r_m": cfg.alignment.r_m,
                      "torque_deadband": cfg.alignment.torque_deadband,
                      "force_threshold": cfg.alignment.force_threshold,
                      "B_d_omega": cfg.alignment.B_d_omega.tolist()},
        "force_profile": {"amplitude": cfg.force_amplitude, "rate": cfg.force_rate},
        "velocity_segments": [list(s) for s in cfg.velocity_segments],
        "velocity_ramp": cfg.velocity_ramp,
        "noise": {"mean": cfg.noise_mean, "std": cfg.noise_std,
                  "on_qdot": cfg.noise_on_qdot},
        "model_error": {"gravity_scale": cfg.gravity_scale,
                        "inertia_scale": cfg.inertia_scale,
                        "inertia_joints": list(cfg.inertia_joints)},
        "filter_window": cfg.filter_window,
        "controller_divider": cfg.controller_divider,
        "initial_state": {"q": cfg.initial_state.q.tolist(),
                          "qdot": cfg.initial_state.qdot.tolist()},
    }
    if cfg.metrics_window is not None:
        d["metrics_window"] = list(cfg.metrics_window)
    return d


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw)


def save_config(path: str, cfg: ScenarioConfig):
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
