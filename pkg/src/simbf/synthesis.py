"""Least-squares synthesis of the layer coefficients for a target beamformer.

Given a target ``G*`` the stack is fitted by minimising
``f2 = ||cascade(Ws, stack) - G*||_F^2`` with an alternating projected
gradient descent over the layers: phases of PC layers, amplitudes of AC
layers (projected onto the amplitude box).  Each layer's gradient comes
from the quadratic form ``f2 = gamma^H A gamma - 2 Re(gamma^H v) + const``
obtained by splitting the cascade around that layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from simbf.errors import ConfigurationError, StructuralError
from simbf.propagation import LayerKind, LayerStack, cascade, partial_products, suffix_products

TWO_PI = 2 * math.pi

__all__ = [
    "FitOptions",
    "FitResult",
    "ls_objective",
    "coupling",
    "coupling_from_products",
    "grad_phase",
    "grad_amplitude",
    "quantize_phases",
    "quantize_stack",
    "pgd_fit",
]

QUANTIZATION = ("continuous", "post", "step")


@dataclass(frozen=True)
class FitOptions:
    """Knobs of :func:`pgd_fit`.

    quantization
        ``"continuous"`` leaves PC phases free, ``"post"`` rounds them to
        the ``2**bits`` alphabet once after convergence and ``"step"``
        rounds them inside every update.
    amplitude_gradient
        ``"scaled"`` uses ``2 Re{conj(gamma) (A gamma - v)}``; ``"exact"``
        uses the true derivative ``2 Re{exp(-j phi) (A gamma - v)}``.  The
        two differ by the positive factor ``alpha`` per atom.
    """

    max_iter: int = 1000
    tol: float = 1e-10
    quantization: str = "continuous"
    bits: int | None = None
    step_init: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_halvings: int = 30
    amplitude_gradient: str = "scaled"
    inner_steps: int = 1

    def __post_init__(self):
        if self.quantization not in QUANTIZATION:
            raise ConfigurationError(f"quantization must be one of {QUANTIZATION}, got {self.quantization!r}")
        if self.amplitude_gradient not in ("scaled", "exact"):
            raise ConfigurationError(f"unknown amplitude gradient {self.amplitude_gradient!r}")
        if not 0 < self.shrink < 1:
            raise ConfigurationError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.bits is not None and self.bits < 1:
            raise ConfigurationError(f"need at least one phase bit, got {self.bits}")
        if not (self.tol > 0 and self.step_init > 0):
            raise ConfigurationError("tolerance and initial step must be positive")


@dataclass
class FitResult:
    """Outcome of :func:`pgd_fit`.

    ``trace[0]`` is the objective of the starting stack and ``trace[k]``
    the objective after sweep ``k``.  ``objective`` is evaluated on the
    returned ``stack``, i.e. after any post-convergence rounding, while
    ``continuous`` keeps the unrounded fit in that case.
    """

    stack: LayerStack
    trace: list = field(default_factory=list)
    iterations: int = 0
    objective: float = float("nan")
    continuous: LayerStack | None = None


def ls_objective(stack, Ws, target) -> float:
    """Squared Frobenius distance between the cascade and the target."""
    return float(np.sum(np.abs(cascade(Ws, stack) - target) ** 2))


def coupling_from_products(E, B, target):
    """``A = (conj(B) B^T) o (E^H E)`` and ``v = [E^H o (conj(B) G*^T)] 1``."""
    EhE = E.conj().T @ E
    A = (B.conj() @ B.T) * EhE
    v = np.sum(E.conj().T * (B.conj() @ np.asarray(target).T), axis=1)
    return A, v


def coupling(stack, Ws, target, ell: int):
    """Quadratic-form coefficients of ``f2`` in the coefficients of layer ``ell``."""
    E, B = partial_products(Ws, stack, ell)
    return coupling_from_products(E, B, target)


def grad_phase(stack: LayerStack, ell: int, A, v) -> np.ndarray:
    """``d f2 / d phi`` for a PC layer: ``2 Im{conj(gamma) (A gamma - v)}``."""
    if stack.kinds[ell] is not LayerKind.PC:
        raise StructuralError(f"layer {ell} is not phase-controlled")
    gamma = stack.layer(ell)
    return 2 * np.imag(gamma.conj() * (A @ gamma - v))


def grad_amplitude(stack: LayerStack, ell: int, A, v, exact: bool = False) -> np.ndarray:
    """Amplitude descent direction for an AC layer.

    By default ``2 Re{conj(gamma) (A gamma - v)}``, which equals the true
    gradient scaled atom-wise by the (positive) amplitudes.  ``exact=True``
    returns the true gradient ``2 Re{exp(-j phi) (A gamma - v)}``.
    """
    if stack.kinds[ell] is not LayerKind.AC:
        raise StructuralError(f"layer {ell} is not amplitude-controlled")
    gamma = stack.layer(ell)
    resid = A @ gamma - v
    if exact:
        return 2 * np.real(np.exp(-1j * stack.phases[ell]) * resid)
    return 2 * np.real(gamma.conj() * resid)


def quantize_phases(phases, bits: int) -> np.ndarray:
    """Round phases to the nearest of ``2 pi m / 2**bits``, ``m = 0..M-1``.

    Distance is measured on the circle; ties go to the smaller ``m``.
    """
    if bits < 1:
        raise ConfigurationError(f"need at least one phase bit, got {bits}")
    m = 2**bits
    x = np.mod(np.asarray(phases, dtype=float), TWO_PI) * (m / TWO_PI)
    lo = np.floor(x)
    frac = x - lo
    up = frac > 0.5
    # a tie between the top level and a full turn goes to index 0
    up |= (frac == 0.5) & (lo == m - 1)
    idx = np.mod(lo + up, m)
    return idx * (TWO_PI / m)


def quantize_stack(stack: LayerStack, bits: int | None = None) -> LayerStack:
    """Copy of ``stack`` with every PC phase rounded to the alphabet."""
    bits = stack.bits if bits is None else bits
    out = stack.copy()
    for ell in out.pc_layers:
        out.set_phases(ell, quantize_phases(out.phases[ell], bits))
    return out


def _layer_objective(E, gamma, B, target) -> float:
    return float(np.sum(np.abs(E @ (gamma[:, None] * B) - target) ** 2))


def pgd_fit(Ws, target, stack: LayerStack, options: FitOptions | None = None) -> FitResult:
    """Fit ``stack`` to ``target`` by alternating projected gradient descent.

    One iteration sweeps the layers from the array side outwards.  A PC
    layer takes a gradient step on its phases; an AC layer takes a step on
    its amplitudes followed by the nearest-point projection onto
    ``[amp_min, amp_max]``.  Each step length is backtracked until a
    sufficient decrease of ``f2`` holds, so the trace never increases.

    With ``quantization="step"`` the phases stay on the alphabet throughout:
    rounding acts as the projection of every PC update.  Since rounded
    steps are piecewise constant in the step length, the search tries the
    whole ladder ``pi / max|g| * shrink**k`` (until no atom moves) and
    keeps the best strictly improving candidate.  The input ``stack`` is
    not modified.
    """
    options = options or FitOptions()
    target = np.asarray(target, dtype=complex)
    bits = stack.bits if options.bits is None else options.bits
    stack = stack.copy()
    stepwise = options.quantization == "step"
    if stepwise:
        stack = quantize_stack(stack, bits)
    n_layers = stack.n_layers
    exact_amp = options.amplitude_gradient == "exact"
    steps = np.full(n_layers, options.step_init)

    f = ls_objective(stack, Ws, target)
    trace = [f]
    floor = 1e-300
    it = 0
    for it in range(1, options.max_iter + 1):
        f_start = f
        Es = suffix_products(Ws, stack)
        B = Ws[0]
        for ell in range(n_layers):
            E = Es[ell]
            A, v = coupling_from_products(E, B, target)
            for _ in range(options.inner_steps):
                gamma = stack.layer(ell)
                if stack.kinds[ell] is LayerKind.PC:
                    grad = grad_phase(stack, ell, A, v)
                    if stepwise:
                        f_new = _ladder_phase_update(stack, ell, grad, E, B, target, f, options, bits)
                    else:
                        f_new = _phase_update(stack, ell, grad, E, B, target, f, steps, options)
                else:
                    direction = grad_amplitude(stack, ell, A, v, exact=exact_amp)
                    true_grad = direction if exact_amp else 2 * np.real(np.exp(-1j * stack.phases[ell]) * (A @ gamma - v))
                    f_new = _amplitude_update(stack, ell, direction, true_grad, E, B, target, f, steps, options)
                if f_new == f:
                    break
                f = f_new
            if ell + 1 < n_layers:
                B = Ws[ell + 1] @ (stack.layer(ell)[:, None] * B)
        trace.append(f)
        if f <= floor or f_start - f <= options.tol * f_start:
            break

    result = FitResult(stack=stack, trace=trace, iterations=it, objective=f)
    if options.quantization == "post":
        result.continuous = stack
        result.stack = quantize_stack(stack, bits)
        result.objective = ls_objective(result.stack, Ws, target)
    return result


def _phase_update(stack, ell, grad, E, B, target, f, steps, options):
    phi = stack.phases[ell]
    lam = steps[ell] / options.shrink
    amp = stack.amplitudes[ell]
    slope = float(grad @ grad)
    for _ in range(options.max_halvings + 1):
        cand = phi - lam * grad
        f_new = _layer_objective(E, amp * np.exp(1j * cand), B, target)
        if f_new <= f - options.armijo * lam * slope:
            stack.set_phases(ell, cand)
            steps[ell] = lam
            return f_new
        lam *= options.shrink
    return f


def _ladder_phase_update(stack, ell, grad, E, B, target, f, options, bits):
    # rounded gradient steps on the ladder pi/max|g| * shrink^k; keep the best
    peak = np.max(np.abs(grad))
    if peak == 0:
        return f
    phi = stack.phases[ell]
    amp = stack.amplitudes[ell]
    lam = math.pi / peak
    best_f, best = f, None
    for _ in range(options.max_halvings + 1):
        cand = quantize_phases(phi - lam * grad, bits)
        if np.array_equal(cand, phi):
            break
        f_new = _layer_objective(E, amp * np.exp(1j * cand), B, target)
        if f_new < best_f:
            best_f, best = f_new, cand
        lam *= options.shrink
    if best is not None:
        stack.set_phases(ell, best)
    return best_f


def _amplitude_update(stack, ell, direction, grad, E, B, target, f, steps, options):
    alpha = stack.amplitudes[ell]
    rot = np.exp(1j * stack.phases[ell])
    lam = steps[ell] / options.shrink
    for _ in range(options.max_halvings + 1):
        cand = np.clip(alpha - lam * direction, stack.amp_min, stack.amp_max)
        f_new = _layer_objective(E, cand * rot, B, target)
        if f_new <= f - options.armijo * float(grad @ (alpha - cand)) and f_new <= f:
            if np.any(cand != alpha):
                stack.set_amplitudes(ell, cand)
                steps[ell] = lam
                return f_new
            return f
        lam *= options.shrink
    return f
