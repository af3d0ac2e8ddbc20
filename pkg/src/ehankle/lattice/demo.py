"""Demonstration valve block: skin, two routed channels, lattice infill."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..channels.routes import Port, build_route, preset_ports
from .grid import ScalarGrid
from .implicit import box_solid, boolean_union, shell_solid
from .period import PeriodField, fit_period_field
from .pipes import CenterlineSet, bore_solid, pipe_wall_solid
from .tpms import MIN_WALL, DensitySolution, solve_thickness_for_density


@dataclass(frozen=True)
class ChannelSpec:
    layout: str
    kind: str = "bspline"
    offset: tuple = (0.0, 0.0, 0.0)


def _default_period_samples():
    lo, hi = np.zeros(3), np.array([0.05, 0.048, 0.032])
    corners = [[(lo, hi)[i][0], (lo, hi)[j][1], (lo, hi)[k][2]]
               for i in (0, 1) for j in (0, 1) for k in (0, 1)]
    inner = [[0.0125, 0.024, 0.016], [0.0375, 0.024, 0.016],
             [0.025, 0.012, 0.016], [0.025, 0.036, 0.016]]
    pts = [list(map(float, c)) for c in corners] + inner
    vals = [110.0] * 8 + [140.0] * 4
    return [{"point": p, "t": v} for p, v in zip(pts, vals)]


@dataclass(frozen=True)
class LatticeConfig:
    bbox: tuple = ((0.0, 0.0, 0.0), (0.05, 0.048, 0.032))
    dims: tuple = (128, 128, 128)
    skin: float = 1.5e-3
    channel_diameter: float = 3.2e-3
    pipe_wall: float = 1.0e-3
    target_density: float = 0.512
    min_wall: float = MIN_WALL
    period_samples: tuple = field(default_factory=_default_period_samples)
    period_support: float = 0.03
    period_t_min: float = 80.0
    channels: tuple = (
        ChannelSpec("perpendicular", "bspline", (0.0, 0.008, 0.008)),
        ChannelSpec("parallel", "bspline", (0.0, 0.010, 0.026)),
    )

    def __post_init__(self):
        lo, hi = (np.asarray(b, dtype=float) for b in self.bbox)
        if lo.shape != (3,) or hi.shape != (3,) or not np.all(hi > lo):
            raise ValueError("bbox must be two 3-vectors with positive extent")
        if len(self.dims) != 3 or min(self.dims) < 2:
            raise ValueError("dims must be three integers >= 2")
        if not 0.0 < self.target_density < 1.0:
            raise ValueError("target_density must lie in (0, 1)")
        chans = tuple(c if isinstance(c, ChannelSpec) else ChannelSpec(**c) for c in self.channels)
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "bbox", (tuple(lo.tolist()), tuple(hi.tolist())))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bbox"] = [list(b) for b in self.bbox]
        d["dims"] = list(self.dims)
        d["channels"] = [{"layout": c.layout, "kind": c.kind, "offset": list(c.offset)}
                         for c in self.channels]
        d["period_samples"] = [dict(s) for s in self.period_samples]
        return d

    @classmethod
    def from_dict(cls, d) -> "LatticeConfig":
        kw = dict(d)
        if "bbox" in kw:
            kw["bbox"] = tuple(tuple(b) for b in kw["bbox"])
        if "dims" in kw:
            kw["dims"] = tuple(kw["dims"])
        if "channels" in kw:
            kw["channels"] = tuple(ChannelSpec(c["layout"], c.get("kind", "bspline"),
                                               tuple(c.get("offset", (0.0, 0.0, 0.0))))
                                   for c in kw["channels"])
        if "period_samples" in kw:
            kw["period_samples"] = [dict(s) for s in kw["period_samples"]]
        return cls(**kw)


def load_lattice_config(path) -> LatticeConfig:
    with Path(path).open(encoding="utf-8") as fh:
        return LatticeConfig.from_dict(json.load(fh))


@dataclass
class DemoBlock:
    config: LatticeConfig
    period: PeriodField
    routes: list
    centerlines: CenterlineSet
    design: object
    keep: object
    void: object


def build_demo_block(cfg: LatticeConfig = LatticeConfig()) -> DemoBlock:
    pts = [s["point"] for s in cfg.period_samples]
    vals = [s["t"] for s in cfg.period_samples]
    period = fit_period_field(pts, vals, cfg.period_support, cfg.period_t_min)
    routes = []
    for ch in cfg.channels:
        a, b = preset_ports(ch.layout, cfg.channel_diameter)
        off = np.asarray(ch.offset, dtype=float)
        a = Port(a.position + off, a.normal, a.diameter)
        b = Port(b.position + off, b.normal, b.diameter)
        routes.append(build_route(ch.kind, a, b))
    cs = CenterlineSet([r.curve for r in routes],
                       refine_within=cfg.channel_diameter + 2.0 * cfg.pipe_wall)
    lo, hi = cfg.bbox
    r = 0.5 * cfg.channel_diameter
    keep = boolean_union(shell_solid(lo, hi, cfg.skin), pipe_wall_solid(cs, r, cfg.pipe_wall))
    return DemoBlock(cfg, period, routes, cs, box_solid(lo, hi), keep, bore_solid(cs, r))


def solve_demo(cfg: LatticeConfig = LatticeConfig()) -> tuple[DemoBlock, DensitySolution]:
    block = build_demo_block(cfg)
    sol = solve_thickness_for_density(block.period, cfg.target_density, cfg.bbox, cfg.dims,
                                      design=block.design, keep=block.keep, void=block.void,
                                      floor=cfg.min_wall)
    return block, sol


def interior_subgrid(grid: ScalarGrid, margin: int) -> ScalarGrid:
    """Grid restricted to indices ``margin .. n - 1 - margin`` on every axis."""
    m = int(margin)
    v = grid.values[m:-m, m:-m, m:-m] if m > 0 else grid.values
    lo, sp = grid.origin, grid.spacing
    new_lo = lo + m * sp
    new_hi = new_lo + (np.asarray(v.shape) - 1) * sp
    return ScalarGrid((tuple(new_lo), tuple(new_hi)), v)
