"""Fixed-step RK4 integration and trajectory comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from hjcheck.errors import DomainError, InputError, IntegrationError
from hjcheck.geometry import FiberedBivector, ScalarField, hamiltonian_field
from hjcheck.hj import Section, projected_field

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    exit_time: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if s.ndim == 1:
            s = s.reshape(-1, 1)
        if t.ndim != 1 or s.shape[0] != t.size:
            raise InputError(f"{t.size} times but {s.shape[0]} states")
        if not np.isfinite(s).all():
            raise InputError("trajectory states must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @property
    def exited(self) -> bool:
        return self.exit_time is not None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def truncated(self, length: int) -> "Trajectory":
        return Trajectory(self.times[:length], self.states[:length], self.exit_time)

    def to_csv(self, path, names: Sequence[str]) -> None:
        """Write ``t,<names...>`` with one row per step, values in shortest round-trip form."""
        if len(names) != self.states.shape[1]:
            raise InputError(f"{len(names)} column names for {self.states.shape[1]} coordinates")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *names])
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def read_csv(path) -> tuple[list[str], Trajectory]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body])
    return header[1:], Trajectory(data[:, 0], data[:, 1:])


@dataclass(frozen=True)
class FlowSpec:
    field: Field
    t0: float
    t1: float
    steps: int
    initial: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if int(self.steps) < 1:
            raise InputError("steps must be at least 1")
        if not self.t1 > self.t0:
            raise InputError("t1 must exceed t0")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=float))

    @property
    def step(self) -> float:
        return (self.t1 - self.t0) / self.steps


def integrate(spec: FlowSpec, stop_on_domain_exit: bool = False) -> Trajectory:
    """Classical RK4 with the fixed step (t1 - t0) / steps.

    A non-finite field value raises IntegrationError. A DomainError from the
    field is re-raised, or with ``stop_on_domain_exit`` ends the trajectory at
    the last state reached and records the time of the failed step.
    """
    n = spec.steps
    dt = spec.step
    times = spec.t0 + dt * np.arange(n + 1)
    times[-1] = spec.t1
    states = np.empty((n + 1, spec.initial.size))
    states[0] = spec.initial

    def evaluate(y, t):
        v = np.asarray(spec.field(y), dtype=float)
        if v.shape != y.shape:
            raise InputError(f"vector field returned shape {v.shape}, expected {y.shape}")
        if not np.isfinite(v).all():
            raise IntegrationError("vector field is not finite", t)
        return v

    y = spec.initial.copy()
    for i in range(n):
        t = times[i]
        try:
            k1 = evaluate(y, t)
            k2 = evaluate(y + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = evaluate(y + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = evaluate(y + dt * k3, t + dt)
        except DomainError:
            if not stop_on_domain_exit:
                raise
            return Trajectory(times[: i + 1], states[: i + 1], exit_time=float(t))
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[i + 1] = y
    return Trajectory(times, states)


def compare(a: Trajectory, b: Trajectory, indices: Sequence[int] | None = None) -> float:
    """sup over times of the Euclidean norm of a - b on the selected coordinates."""
    if a.times.shape != b.times.shape or np.max(np.abs(a.times - b.times), initial=0.0) > 1e-12:
        raise InputError("trajectories are on different time grids")
    diff = a.states - b.states
    if indices is not None:
        diff = diff[:, list(indices)]
    return float(np.max(np.linalg.norm(diff, axis=1), initial=0.0))


@dataclass(frozen=True)
class LiftComparison:
    max_error: float
    base: Trajectory
    lifted: Trajectory
    upstairs: Trajectory

    @property
    def exited(self) -> bool:
        return self.base.exited

    @property
    def exit_time(self) -> float | None:
        return self.base.exit_time


def lift_and_compare(bivector: FiberedBivector, h: ScalarField, section: Section, x0,
                     t1: float, steps: int, t0: float = 0.0,
                     indices: Sequence[int] | None = None) -> LiftComparison:
    """Integrate X_h^gamma on the base and lift it through gamma; integrate X_h from
    gamma(x0) upstairs; return the sup distance between the two curves.

    If the base curve leaves the section's domain, both curves are compared up
    to the last common time and the result carries the exit time.
    """
    x0 = section.chart.check_base_point(x0)
    base = integrate(FlowSpec(lambda x: projected_field(bivector, h, section, x), t0, t1, steps, x0),
                     stop_on_domain_exit=True)
    up = integrate(FlowSpec(lambda z: hamiltonian_field(bivector, h, z), t0, t1, steps,
                            section.point(x0)),
                   stop_on_domain_exit=True)
    length = min(base.times.size, up.times.size)
    lifted_states = []
    for i in range(length):
        try:
            lifted_states.append(section.point(base.states[i]))
        except DomainError:
            length = i
            break
    exits = [t.exit_time for t in (base, up) if t.exit_time is not None]
    if length < base.times.size:
        exits.append(float(base.times[length]))
    exit_time = min(exits) if exits else None
    base = Trajectory(base.times[:length], base.states[:length], exit_time)
    up = Trajectory(up.times[:length], up.states[:length], exit_time)
    lifted = Trajectory(base.times, np.array(lifted_states), exit_time)
    error = compare(lifted, up, indices)
    return LiftComparison(error, base, lifted, up)


def write_comparison_csv(result: LiftComparison, directory, stem: str,
                         base_names: Sequence[str], total_names: Sequence[str]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [directory / f"{stem}_base.csv", directory / f"{stem}_lifted.csv",
             directory / f"{stem}_upstairs.csv"]
    result.base.to_csv(paths[0], base_names)
    result.lifted.to_csv(paths[1], total_names)
    result.upstairs.to_csv(paths[2], total_names)
    return paths
