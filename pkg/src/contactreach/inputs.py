"""Discrete-time input trajectories and their per-step set enclosures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sets import Zonotope, interval_hull, minkowski_sum


@dataclass(frozen=True)
class InputModel:
    """Zero-order-hold samples plus a bounded uncertainty set.

    samples: (k, m) array of input vectors, sampled every sample_interval
    seconds starting at t = 0; lookups are delayed by input_delay.  Lookups
    before the first sample hold the first one, past the end hold the last.
    """

    samples: np.ndarray
    sample_interval: float
    input_delay: float
    uncertainty: Zonotope

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s.reshape(-1, 1)
        if self.sample_interval <= 0:
            raise ValueError("sample_interval must be positive")
        if self.uncertainty.dim != s.shape[1]:
            raise ValueError("uncertainty dimension mismatch")
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def sample_at(self, t: float) -> np.ndarray:
        """Nominal zero-order-hold value u_d(t - input_delay)."""
        idx = int(np.floor((t - self.input_delay) / self.sample_interval))
        idx = min(max(idx, 0), self.samples.shape[0] - 1)
        return self.samples[idx]

    def sample_indices(self, t_lo: float, t_hi: float) -> tuple[int, int]:
        """Inclusive index range of samples active in [t_lo, t_hi] after delay."""
        lo = int(np.floor((t_lo - self.input_delay) / self.sample_interval))
        hi = int(np.floor((t_hi - self.input_delay) / self.sample_interval))
        last = self.samples.shape[0] - 1
        return min(max(lo, 0), last), min(max(hi, 0), last)


def enclose_window(im: InputModel, t_lo: float, t_hi: float) -> Zonotope:
    """Box enclosure of all hold values active during [t_lo, t_hi], plus
    the uncertainty set."""
    i_lo, i_hi = im.sample_indices(t_lo, t_hi)
    window = im.samples[i_lo:i_hi + 1]
    lo = window.min(axis=0)
    hi = window.max(axis=0)
    box = Zonotope.from_box(0.5 * (lo + hi), 0.5 * (hi - lo))
    return minkowski_sum(box, im.uncertainty)


@dataclass(frozen=True)
class StepInput:
    """Exact zero-order-hold input description for one propagation step.

    segments: ((tau, u), ...) nominal hold pieces along the step for the
    clock-center trajectory, tau summing to the step size.  radius:
    input-space radius of a time-varying disturbance (the uncertainty
    set).  t_center / width: clock interval of the step start.  boundaries:
    ((offset, du), ...) sample switches near the step, offset relative to
    t_center; a trajectory whose clock is delta ahead of the center sees
    each switch delta early, so its state deviates by delta times the
    switch response -- a signed, clock-correlated term, not noise.
    """

    segments: tuple
    radius: np.ndarray
    t_center: float
    width: float
    boundaries: tuple = ()


def step_input(im: InputModel, R_k: Zonotope, dt: float,
               clock_index: int = -1) -> StepInput:
    hull = interval_hull(R_k)
    t_lo = float(hull.lower[clock_index])
    t_hi = float(hull.upper[clock_index])
    t_c = 0.5 * (t_lo + t_hi)
    width = t_hi - t_lo

    # nominal hold pieces between sample boundaries along [t_c, t_c + dt]
    segments = []
    t = t_c
    end = t_c + dt
    while t < end - 1e-15:
        idx = int(np.floor((t - im.input_delay) / im.sample_interval))
        boundary = (idx + 1) * im.sample_interval + im.input_delay
        while boundary <= t + 1e-15:
            idx += 1
            boundary = (idx + 1) * im.sample_interval + im.input_delay
        t_next = min(boundary, end)
        u = im.sample_at(t + 0.25 * (t_next - t)) + im.uncertainty.c
        segments.append((t_next - t, u))
        t = t_next
    if not segments:
        segments.append((dt, im.sample_at(t_c) + im.uncertainty.c))

    # sample switches whose crossing window [offset - width/2,
    # offset + width/2] overlaps the step; the propagation handles them as
    # clock-correlated deviations
    boundaries = []
    if width > 1e-9:
        half = 0.5 * width
        last = im.samples.shape[0] - 1
        k_lo = int(np.floor((t_c - half - im.input_delay)
                            / im.sample_interval)) + 1
        k_hi = int(np.floor((t_c + dt + half - im.input_delay)
                            / im.sample_interval))
        for k in range(max(k_lo, 1), min(k_hi, last) + 1):
            du = im.samples[k] - im.samples[k - 1]
            if np.any(du != 0.0):
                offset = k * im.sample_interval + im.input_delay - t_c
                boundaries.append((offset, du))
    radius = interval_hull(im.uncertainty).radius
    return StepInput(tuple(segments), radius, t_c, width, tuple(boundaries))


def unify_inputs(im: InputModel, R_k: Zonotope, dt: float,
                 clock_index: int = -1) -> Zonotope:
    """Input set covering the step from R_k over duration dt.

    The time window is taken from the clock coordinate of R_k, widened by
    dt, so time uncertainty after guard intersections is captured.
    """
    hull = interval_hull(R_k)
    t_lo = hull.lower[clock_index]
    t_hi = hull.upper[clock_index] + dt
    return enclose_window(im, t_lo, t_hi)
