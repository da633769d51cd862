"""Piecewise loading histories.

A protocol is a list of segments evaluated one after the other.  Each
segment starts from the value reached at the end of the previous one:

* ``ramp``: linear change to ``target`` over ``duration``;
* ``hold``: constant value for ``duration``;
* ``cyclic``: adds ``amplitude * g(t - t_start)`` with
  ``g(t) = 2e-3 (1 - cos(pi t / (5 t0))) cos(30 pi t / (5 t0))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, RangeError

SEGMENT_KINDS = ("ramp", "hold", "cyclic")


def cyclic_g(t, t0):
    """Oscillation with a smoothly growing envelope; ``g(0) = 0``."""
    t = np.asarray(t, dtype=float)
    return 2e-3 * (1.0 - np.cos(np.pi * t / (5.0 * t0))) * np.cos(30.0 * np.pi * t / (5.0 * t0))


@dataclass(frozen=True)
class Segment:
    kind: str
    duration: float
    steps: int = 200
    target: float = 0.0
    amplitude: float = 1.0
    t0: float = 1.0

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ConfigError(f"unknown segment kind {self.kind!r}; expected one of {SEGMENT_KINDS}")
        if not self.duration > 0:
            raise ConfigError("segment duration must be positive")
        if int(self.steps) < 1 or int(self.steps) != self.steps:
            raise ConfigError("segment step count must be a positive integer")
        if self.kind == "cyclic" and not self.t0 > 0:
            raise ConfigError("cyclic segment needs t0 > 0")

    def value(self, start, tau):
        if self.kind == "ramp":
            return start + (self.target - start) * tau / self.duration
        if self.kind == "hold":
            return start + 0.0 * tau
        return start + self.amplitude * cyclic_g(tau, self.t0)

    @classmethod
    def from_dict(cls, d):
        try:
            kind = d["kind"]
            return cls(
                kind,
                float(d["duration"]),
                int(d.get("steps", 200)),
                float(d.get("target", 0.0)),
                float(d.get("amplitude", 1.0)),
                float(d.get("t0", 1.0)),
            )
        except KeyError as exc:
            raise ConfigError(f"segment is missing key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid segment {d!r}: {exc}") from exc

    def to_dict(self):
        out = {"kind": self.kind, "duration": self.duration, "steps": self.steps}
        if self.kind == "ramp":
            out["target"] = self.target
        if self.kind == "cyclic":
            out.update(amplitude=self.amplitude, t0=self.t0)
        return out


@dataclass(frozen=True)
class LoadProtocol:
    segments: tuple
    initial: float = 0.0

    def __post_init__(self):
        if not self.segments:
            raise ConfigError("a protocol needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def duration(self):
        return float(sum(s.duration for s in self.segments))

    def _starts(self):
        vals, times = [self.initial], [0.0]
        for seg in self.segments:
            vals.append(float(seg.value(vals[-1], seg.duration)))
            times.append(times[-1] + seg.duration)
        return np.array(times), np.array(vals)

    def __call__(self, t):
        """Evaluate at time(s) ``t``.

        Raises
        ------
        RangeError
            If any ``t`` lies outside ``[0, duration]``.
        """
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        total = self.duration
        tol = 1e-12 * max(total, 1.0)
        if np.any(t_arr < -tol) or np.any(t_arr > total + tol):
            raise RangeError(f"time outside the protocol duration [0, {total}]")
        times, vals = self._starts()
        k = np.clip(np.searchsorted(times, t_arr, side="right") - 1, 0, len(self.segments) - 1)
        out = np.array([self.segments[j].value(vals[j], ti - times[j]) for j, ti in zip(k, t_arr)])
        return out if np.ndim(t) else float(out[0])

    def time_grid(self):
        """Step end times of all segments, excluding ``t = 0``."""
        times, _ = self._starts()
        grid = [times[j] + np.linspace(0.0, s.duration, s.steps + 1)[1:] for j, s in enumerate(self.segments)]
        return np.concatenate(grid)

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, list):
            d = {"segments": d}
        if "segments" not in d:
            raise ConfigError("protocol needs a 'segments' list")
        return cls(tuple(Segment.from_dict(s) for s in d["segments"]), float(d.get("initial", 0.0)))

    def to_dict(self):
        return {"initial": self.initial, "segments": [s.to_dict() for s in self.segments]}


def protocol_eval(protocol, t):
    return protocol(t)


def combined_time_grid(protocols):
    """Sorted union of several protocols' step times (they must share a duration)."""
    protocols = list(protocols)
    total = protocols[0].duration
    for p in protocols[1:]:
        if abs(p.duration - total) > 1e-12 * max(total, 1.0):
            raise ConfigError("all load components must have the same total duration")
    grid = np.unique(np.concatenate([p.time_grid() for p in protocols]))
    merged = [grid[0]]
    for t in grid[1:]:
        if t - merged[-1] > 1e-12 * max(total, 1.0):
            merged.append(t)
    merged[-1] = total
    return np.array(merged)
