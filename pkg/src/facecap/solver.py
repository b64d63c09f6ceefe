"""Inverse-rendering motion solve: block coordinate descent on the image
loss over (pose, jaw, expression) parameter blocks, plus utilities for
solving frame sequences and blending parameter tracks.

A point-sampled render is piecewise constant in the parameters, so the
pixel loss is a staircase: plateaus separated by steps where a region
boundary or silhouette crosses a pixel center.  Supersampling softens the
staircase but cannot remove it, and greedy per-coordinate descent stalls
in basins that only a joint move of three or more parameters can leave.
The default "pattern" rule therefore runs a staged search:

1. coarse yaw scan (expression cannot fake a large rotation it would
   later have to unlearn),
2. annealed per-block coordinate sweeps,
3. a covariance-adapting random search started from the center of the
   control box, which crosses inter-control barriers the sweeps cannot,
4. plateau band centering: on a staircase the loss is flat over an
   interval around the true value, so each coordinate moves to the
   midpoint of its minimal band (windows grow while the band touches the
   window edge),
5. a local covariance-adapting polish and re-centering,
6. residual-guided subspace restarts: controls are ranked by how much of
   their pixel footprint still mismatches, and the worst few are re-solved
   jointly from scratch.

The "gradient" rule instead takes one normalized-gradient step per block
with a backtracking (Armijo) line search; it is the right tool on smooth
RGB textures where bilinear sampling makes the loss differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _fast
from .errors import LengthMismatch
from .render import (Camera, Mesh, SegTexture, image_loss, image_loss_grad,
                     rasterize, set_slots)
from .rig import BlendshapeRig, PoseParams


@dataclass(frozen=True)
class SolveConfig:
    block_order: tuple = ("pose", "jaw", "expression")
    # epochs bounds the gradient rule's outer loop; the pattern rule runs
    # its fixed stage list instead
    epochs: int = 40
    #   "pattern": staged stall-proof search (see module docstring); use on
    #     segmented or otherwise piecewise-constant targets.
    #   "gradient": normalized finite-difference gradient direction with a
    #     backtracking (Armijo) line search; best on smooth RGB textures.
    step_rule: str = "pattern"
    # render supersampling for the pattern rule's loss; the base raster is
    # point-sampled, and averaging an aligned finer grid multiplies the
    # number of distinguishable loss levels, narrowing the flat bands that
    # bound attainable precision.  The gradient rule keeps the native grid
    # (bilinear sampling already smooths it).
    supersample: int = 2
    armijo_c: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 20
    rel_tol: float = 1e-5
    patience: int = 3
    # finite differences see pixels flipping across region boundaries and
    # silhouettes; the frozen-correspondence chain rule is blind to both,
    # which matters on piecewise-constant segmented textures.  Solves over
    # smooth RGB textures can switch to "fixed-correspondence" for speed.
    gradient_method: str = "finite-diff"
    pose_gradient_method: str = "finite-diff"
    resolution_schedule: tuple = ()   # gradient pyramid sizes, coarse first
    include_translation: bool = False
    step_pose: float = 6.0            # initial line-search scale, degrees
    step_w: float = 0.35              # initial line-search scale, weight units
    step_translation: float = 0.05
    # coordinate-sweep probe scales: start value, annealed by probe_anneal
    # each round down to the floor
    probe_w: float = 0.15
    probe_w_floor: float = 0.02
    probe_pose: float = 2.0
    probe_pose_floor: float = 0.2
    probe_translation: float = 0.02
    probe_translation_floor: float = 0.002
    probe_anneal: float = 0.6
    sweep_rounds: int = 6
    # box-center covariance-adapting search over all parameters
    cma_budget: int = 900
    cma_sigma_pose: float = 1.0       # degrees per unit step
    cma_sigma_w: float = 0.25
    # local polish around the centered point
    local_cma_budget: int = 300
    local_sigma_pose: float = 0.25
    local_sigma_w: float = 0.06
    # residual-guided subspace restarts
    restart_rounds: int = 6
    restart_subset: int = 4
    restart_budget: int = 220
    restart_first_budget: int = 420   # round 0 gets the larger budget and
    restart_first_popsize: int = 16   # population (plateau rank diversity)
    restart_eval_gate: int = 2400     # stop starting rounds past this many
                                      # loss evaluations
    seed: int = 0
    # coarse yaw probe (lo, hi, step) run once before anything else
    yaw_scan: tuple = (-60.0, 60.0, 10.0)

    def __post_init__(self):
        if sorted(self.block_order) != sorted(("pose", "jaw", "expression")):
            raise ValueError("block order must contain pose, jaw, expression")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.step_rule not in ("pattern", "gradient"):
            raise ValueError("step_rule must be 'pattern' or 'gradient'")
        if self.supersample < 1:
            raise ValueError("supersample must be >= 1")


@dataclass
class SolveResult:
    params: PoseParams
    loss: float
    trace: list
    converged: bool
    no_descent: bool = False
    error: str | None = None
    n_evals: int = 0


# band-centering stage constants (window half-width and scan step per
# coordinate kind, after the box-center search / local polish / an accepted
# restart); windows grow in place while a band touches the window edge
_CENTER_MAIN = {"pose": (0.6, 0.05), "w": (0.08, 0.008), "t": (0.03, 0.004)}
_CENTER_LOCAL = {"pose": (0.3, 0.04), "w": (0.05, 0.006), "t": (0.02, 0.004)}
_CENTER_RESTART = {"pose": (0.2, 0.03), "w": (0.04, 0.005), "t": (0.02, 0.004)}
_CENTER_GROW_CAP = {"pose": 3.0, "w": 0.5, "t": 0.1}


def _block_slots(rig: BlendshapeRig, config: SolveConfig) -> dict:
    jaw = set(rig.jaw_control_indices)
    pose = [("pitch",), ("yaw",)]
    if config.include_translation:
        pose += [("tx",), ("ty",)]
    return {
        "pose": pose,
        "jaw": [("w", i) for i in sorted(jaw)],
        "expression": [("w", i) for i in range(rig.n_shapes) if i not in jaw],
    }


def _slot_scales(slots, config: SolveConfig) -> np.ndarray:
    scale = {"pitch": config.step_pose, "yaw": config.step_pose,
             "tx": config.step_translation, "ty": config.step_translation,
             "w": config.step_w}
    return np.array([scale[s[0]] for s in slots])


def _slot_values(params: PoseParams, slots) -> np.ndarray:
    return np.array([params.w[s[1]] if s[0] == "w" else getattr(params, s[0])
                     for s in slots])


def _project(params: PoseParams) -> PoseParams:
    return params.replace(w=np.clip(params.w, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Pattern rule: staged search over a flat parameter vector
# ---------------------------------------------------------------------------

class _Objective:
    """Image loss as a function of the flat vector [pitch, yaw, (tx, ty,) w].

    Control weights are clipped to [0,1] before rendering, so the score
    always reflects a feasible point.  Renders go through the fused seg
    path when it reproduces the general render exactly, else through the
    reference rasterizer.
    """

    def __init__(self, target, rig, mesh, camera, texture, config):
        self.target = np.ascontiguousarray(target, dtype=np.float64)
        self.rig, self.mesh, self.camera = rig, mesh, camera
        self.texture = texture
        self.supersample = config.supersample
        self.include_t = config.include_translation
        self.start_w = 4 if self.include_t else 2
        self.n_w = rig.n_shapes
        self.kinds = (["pose", "pose"] + (["t", "t"] if self.include_t else [])
                      + ["w"] * self.n_w)
        self.evals = 0
        self.ctx = None
        if (isinstance(texture, SegTexture)
                and _fast.seg_fast_ok(mesh, texture)):
            self.ctx = _fast.SegRenderContext(mesh, camera, texture, rig=rig,
                                              supersample=config.supersample)

    def vector(self, params: PoseParams) -> np.ndarray:
        head = [params.pitch, params.yaw]
        if self.include_t:
            head += [params.tx, params.ty]
        return np.concatenate([head, np.clip(params.w, 0.0, 1.0)])

    def params(self, x: np.ndarray) -> PoseParams:
        pitch, yaw, tx, ty, w = self._split(x)
        return PoseParams(pitch=pitch, yaw=yaw, w=w, tx=tx, ty=ty)

    def _split(self, x):
        if self.include_t:
            return (float(x[0]), float(x[1]), float(x[2]), float(x[3]),
                    np.clip(x[4:], 0.0, 1.0))
        return (float(x[0]), float(x[1]), 0.0, 0.0, np.clip(x[2:], 0.0, 1.0))

    def loss(self, x) -> float:
        self.evals += 1
        pitch, yaw, tx, ty, w = self._split(x)
        if self.ctx is not None:
            return self.ctx.loss(pitch, yaw, w, self.target, tx, ty)
        p = PoseParams(pitch=pitch, yaw=yaw, w=w, tx=tx, ty=ty)
        return image_loss(self.target, self.mesh, self.camera, self.rig, p,
                          self.texture, supersample=self.supersample)

    def image(self, x) -> np.ndarray:
        pitch, yaw, tx, ty, w = self._split(x)
        if self.ctx is not None:
            return self.ctx.image(pitch, yaw, w, tx, ty)
        p = PoseParams(pitch=pitch, yaw=yaw, w=w, tx=tx, ty=ty)
        return rasterize(self.mesh, self.camera, texture=self.texture,
                         rig=self.rig, params=p, shaded=False,
                         supersample=self.supersample).image

    def bounds(self):
        lo = [-90.0, -90.0] + ([-0.5, -0.5] if self.include_t else [])
        hi = [90.0, 90.0] + ([0.5, 0.5] if self.include_t else [])
        return (np.array(lo + [0.0] * self.n_w),
                np.array(hi + [1.0] * self.n_w))


def _cma_minimize(f, mean0, sigma0, scales, lo, hi, budget, rng, popsize=None):
    """Compact covariance-matrix-adaptation minimizer.

    Samples x = mean0 + scales * z with z from an adapted Gaussian,
    clipping to [lo, hi] at evaluation.  Standard rank-mu weights, step
    and covariance paths; eigendecomposition every 5 generations.  Stops
    at an exact zero or when the budget is spent.  Returns the best
    clipped point, its loss, and evaluations used.
    """
    n = len(mean0)
    lam = popsize if popsize is not None else 4 + int(3 * math.log(n))
    mu = lam // 2
    wts = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    wts /= wts.sum()
    mueff = 1.0 / np.sum(wts ** 2)
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
    mean = np.zeros(n)
    sigma = sigma0
    C = np.eye(n)
    pc = np.zeros(n)
    ps = np.zeros(n)
    B = np.eye(n)
    D = np.ones(n)
    evals = 0
    fbest = np.inf
    xbest = np.clip(mean0, lo, hi)
    gen = 0
    while evals + lam <= budget and fbest > 0.0:
        if gen % 5 == 0:
            C = (C + C.T) / 2
            vals, B = np.linalg.eigh(C)
            D = np.sqrt(np.maximum(vals, 1e-20))
        gen += 1
        zs = rng.standard_normal((lam, n))
        ys = zs @ (B * D).T
        xz = mean + sigma * ys
        fs = np.empty(lam)
        for k in range(lam):
            fs[k] = f(np.clip(mean0 + scales * xz[k], lo, hi))
        evals += lam
        order = np.argsort(fs)
        if fs[order[0]] < fbest:
            fbest = fs[order[0]]
            xbest = np.clip(mean0 + scales * xz[order[0]], lo, hi)
        ysel = ys[order[:mu]]
        yw = wts @ ysel
        mean = mean + sigma * yw
        ps = ((1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff)
              * (B @ ((B.T @ yw) / np.maximum(D, 1e-20))))
        hsig = (np.linalg.norm(ps) / math.sqrt(1 - (1 - cs) ** (2 * evals / lam))
                / chi_n < 1.4 + 2 / (n + 1))
        pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * yw
        C = ((1 - c1 - cmu) * C
             + c1 * (np.outer(pc, pc) + (not hsig) * cc * (2 - cc) * C)
             + cmu * (ysel.T * wts) @ ysel)
        sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))
        sigma = min(sigma, 4.0)
    return xbest, fbest, evals


def _scan_yaw(obj, x, loss, config):
    lo, hi, step = config.yaw_scan
    for yaw in np.arange(lo, hi + 0.5 * step, step):
        y = x.copy()
        y[1] = yaw
        l = obj.loss(y)
        if l < loss:
            loss, x = l, y
    return x, loss


def _sweep_rounds(obj, x, loss, order, config):
    """Annealed coordinate sweeps in block order.

    Each round probes every coordinate at +-h and +-2h (best sampled value
    wins), then shrinks the probes toward their floors.
    """
    probe = np.empty(len(x))
    floor = np.empty(len(x))
    start = {"pose": config.probe_pose, "w": config.probe_w,
             "t": config.probe_translation}
    stop = {"pose": config.probe_pose_floor, "w": config.probe_w_floor,
            "t": config.probe_translation_floor}
    for i, kind in enumerate(obj.kinds):
        probe[i] = start[kind]
        floor[i] = stop[kind]
    for _ in range(config.sweep_rounds):
        for k in order:
            x0 = x[k]
            h = probe[k]
            best, bx = loss, x0
            for d in (-2.0 * h, -h, h, 2.0 * h):
                y = x.copy()
                y[k] = x0 + d
                l = obj.loss(y)
                if l < best:
                    best, bx = l, x0 + d
            if bx != x0:
                x[k] = bx
                loss = best
        probe = np.maximum(probe * config.probe_anneal, floor)
    return x, loss


def _center_bands(obj, x, loss, windows):
    """Move each coordinate to the midpoint of its minimal flat band.

    The staircase loss is constant over an interval around the optimum of
    each coordinate; the interval midpoint halves the worst-case error.
    The scan window doubles (up to a per-kind cap) while the minimal band
    still touches the window edge, so bands wider than the window are
    centered too."""
    for k, kind in enumerate(obj.kinds):
        bounded = kind == "w"
        half, step = windows[kind]
        for _ in range(4):
            lo_k = max(0.0, x[k] - half) if bounded else x[k] - half
            hi_k = min(1.0, x[k] + half) if bounded else x[k] + half
            xs = np.arange(lo_k, hi_k + 1e-12, step)
            ls = np.empty(len(xs))
            for j, v in enumerate(xs):
                y = x.copy()
                y[k] = v
                ls[j] = obj.loss(y)
            lm = ls.min()
            if lm > loss:
                break
            jb = int(np.argmin(ls))
            a = b = jb
            while a > 0 and ls[a - 1] == lm:
                a -= 1
            while b < len(xs) - 1 and ls[b + 1] == lm:
                b += 1
            at_lo = a == 0 and (not bounded or xs[0] > 1e-9)
            at_hi = b == len(xs) - 1 and (not bounded or xs[-1] < 1.0 - 1e-9)
            x[k] = 0.5 * (xs[a] + xs[b])
            loss = lm
            if (at_lo or at_hi) and half < _CENTER_GROW_CAP[kind]:
                half *= 2.0
                continue
            break
    return x, loss


def _residual_restarts(obj, x, loss, config):
    """Re-solve the most implicated controls jointly from scratch.

    A stalled point renders almost right; the pixels that still differ
    from the target pinpoint which controls are wrong.  Controls are
    ranked by the fraction of their own pixel footprint (pixels that
    change between the control's 0 and 1 settings) still mismatching, and
    the top few are re-searched together from the center of their box.
    The ranking window slides on failure so later rounds try the next
    candidates."""
    shift = 0
    start_w = obj.start_w
    for rr in range(config.restart_rounds):
        if loss <= 0.0 or obj.evals > config.restart_eval_gate:
            break
        resid = np.abs(obj.image(x) - obj.target).sum(axis=-1) > 1e-12
        if not resid.any():
            break
        scored = []
        for k in range(start_w, start_w + obj.n_w):
            y0 = x.copy()
            y0[k] = 0.0
            y1 = x.copy()
            y1[k] = 1.0
            footprint = np.abs(obj.image(y0) - obj.image(y1)).sum(axis=-1) > 1e-12
            n = footprint.sum()
            frac = (footprint & resid).sum() / n if n else 0.0
            scored.append((frac, k))
        scored.sort(reverse=True)
        idx = [k for s, k in scored[shift:shift + config.restart_subset]
               if s > 0]
        if not idx:
            break

        def sub_loss(sub):
            y = x.copy()
            y[idx] = sub
            return obj.loss(y)

        budget = config.restart_first_budget if rr == 0 else config.restart_budget
        popsize = config.restart_first_popsize if rr == 0 else None
        m = len(idx)
        xs, ls, _ = _cma_minimize(
            sub_loss, np.full(m, 0.5), 1.0, np.full(m, 0.30), np.zeros(m),
            np.ones(m), budget,
            np.random.default_rng(9000 + 10 * config.seed + rr),
            popsize=popsize)
        if ls < loss:
            x[idx] = xs
            loss = ls
            x, loss = _center_bands(obj, x, loss, _CENTER_RESTART)
            shift = 0
        else:
            shift += config.restart_subset // 2
    return x, loss


def _solve_pattern(target, rig, mesh, camera, texture, init, config):
    obj = _Objective(target, rig, mesh, camera, texture, config)
    blocks = _block_slots(rig, config)
    pos = {("pitch",): 0, ("yaw",): 1}
    if config.include_translation:
        pos[("tx",)] = 2
        pos[("ty",)] = 3
    for i in range(rig.n_shapes):
        pos[("w", i)] = obj.start_w + i
    order = [pos[s] for name in config.block_order for s in blocks[name]]

    x = obj.vector(init)
    loss0 = obj.loss(x)
    trace = [loss0]
    if loss0 == 0.0:
        return SolveResult(params=_project(init), loss=0.0, trace=trace,
                           converged=True, n_evals=obj.evals)
    loss = loss0

    if config.yaw_scan:
        x, loss = _scan_yaw(obj, x, loss, config)
    x, loss = _sweep_rounds(obj, x, loss, order, config)
    trace.append(loss)

    lo, hi = obj.bounds()
    sig = {"pose": config.cma_sigma_pose, "w": config.cma_sigma_w,
           "t": config.probe_translation}
    scales = np.array([sig[k] for k in obj.kinds])
    mean0 = x.copy()
    mean0[obj.start_w:] = 0.5
    xc, lc, _ = _cma_minimize(obj.loss, mean0, 1.0, scales, lo, hi,
                              config.cma_budget,
                              np.random.default_rng(1000 + config.seed))
    if lc < loss:
        x, loss = xc.copy(), lc
    x, loss = _center_bands(obj, x, loss, _CENTER_MAIN)
    trace.append(loss)

    if loss > 0.0 and config.local_cma_budget > 0:
        sig2 = {"pose": config.local_sigma_pose, "w": config.local_sigma_w,
                "t": config.probe_translation / 2.0}
        scales2 = np.array([sig2[k] for k in obj.kinds])
        x2, l2, _ = _cma_minimize(obj.loss, x, 1.0, scales2, lo, hi,
                                  config.local_cma_budget,
                                  np.random.default_rng(5000 + config.seed))
        if l2 < loss:
            x, loss = x2.copy(), l2
        x, loss = _center_bands(obj, x, loss, _CENTER_LOCAL)
        trace.append(loss)

    if rig.n_shapes and config.restart_rounds:
        x, loss = _residual_restarts(obj, x, loss, config)
        trace.append(loss)

    if loss >= loss0:
        return SolveResult(params=_project(init), loss=loss0, trace=trace,
                           converged=False, no_descent=True,
                           n_evals=obj.evals)
    return SolveResult(params=obj.params(x), loss=loss, trace=trace,
                       converged=loss == 0.0, n_evals=obj.evals)


# ---------------------------------------------------------------------------
# Gradient rule: Armijo line search per block
# ---------------------------------------------------------------------------

def _grad_size_for_epoch(epoch: int, config: SolveConfig, native: int):
    if not config.resolution_schedule:
        return None
    phase = min(epoch * len(config.resolution_schedule) // config.epochs,
                len(config.resolution_schedule) - 1)
    size = config.resolution_schedule[phase]
    return None if size == native else size


def _gradient_step(target, mesh, camera, rig, current, tex, slots, loss,
                   step0, method, grad_size, config, scales):
    """Backtracking line search along the normalized negative gradient.

    Returns (params, loss, accepted_step, improved)."""
    _, grad = image_loss_grad(target, mesh, camera, rig, current, tex,
                              slots, method=method, grad_size=grad_size)
    gnorm = float(np.linalg.norm(grad))
    if gnorm < 1e-14:
        return current, loss, step0, False
    direction = -grad / gnorm
    slope = float(grad @ (scales * direction))  # negative
    base = _slot_values(current, slots)
    step = min(1.0, 4.0 * step0)
    for _ in range(config.max_backtracks):
        cand = _project(set_slots(current, slots,
                                  base + step * scales * direction))
        cand_loss = image_loss(target, mesh, camera, rig, cand, tex)
        if cand_loss <= loss + config.armijo_c * step * slope:
            return cand, cand_loss, step, True
        step *= config.shrink
    return current, loss, step0, False


def _solve_gradient(target, rig, mesh, camera, texture, init, config):
    blocks = _block_slots(rig, config)
    current = _project(init)
    loss = image_loss(target, mesh, camera, rig, current, texture)
    trace = [loss]
    if loss == 0.0:
        return SolveResult(params=current, loss=0.0, trace=trace,
                           converged=True)
    converged = False

    scan_improved = False
    if config.yaw_scan:
        lo, hi, step = config.yaw_scan
        for yaw in np.arange(lo, hi + 0.5 * step, step):
            cand = current.replace(yaw=float(yaw))
            cand_loss = image_loss(target, mesh, camera, rig, cand, texture)
            if cand_loss < loss:
                current, loss = cand, cand_loss
                scan_improved = True

    step_memory = {name: 1.0 for name in config.block_order}
    for epoch in range(config.epochs):
        improved = scan_improved if epoch == 0 else False
        grad_size = _grad_size_for_epoch(epoch, config, camera.width)
        for name in config.block_order:
            slots = blocks[name]
            if not slots:
                continue
            scales = _slot_scales(slots, config)
            method = (config.pose_gradient_method if name == "pose"
                      else config.gradient_method)
            current, loss, step_memory[name], took = _gradient_step(
                target, mesh, camera, rig, current, texture, slots, loss,
                step_memory[name], method, grad_size, config, scales)
            improved = improved or took
        trace.append(loss)
        if epoch == 0 and not improved:
            return SolveResult(params=_project(init), loss=trace[0],
                               trace=trace, converged=False, no_descent=True)
        if loss == 0.0:
            converged = True
            break
        window = config.patience
        if len(trace) > window + 1:
            past = trace[-window - 1]
            if past - loss < config.rel_tol * max(past, 1e-12):
                converged = True
                break
    return SolveResult(params=current, loss=loss, trace=trace,
                       converged=converged)


def solve_frame(target: np.ndarray, rig: BlendshapeRig, mesh: Mesh,
                camera: Camera, texture, init: PoseParams,
                config: SolveConfig | None = None) -> SolveResult:
    """Fit pose, jaw, and expression to a target image.

    The target must already live in the same (segmented or textured)
    domain the render produces, at the camera's output resolution.
    Returns the best parameters seen; if nothing improves on the initial
    parameters they come back flagged no_descent.
    """
    config = config or SolveConfig()
    if target.shape[:2] != (camera.height, camera.width):
        raise ValueError("target dimensions must match the camera")
    target = np.asarray(target, dtype=float)
    if config.step_rule == "pattern":
        return _solve_pattern(target, rig, mesh, camera, texture, init,
                              config)
    return _solve_gradient(target, rig, mesh, camera, texture, init, config)


def solve_sequence(targets: list, rig: BlendshapeRig, mesh: Mesh,
                   camera: Camera, texture, init: PoseParams | None = None,
                   config: SolveConfig | None = None, parallel: bool = True,
                   workers: int = 1) -> list:
    """Solve a list of target frames.

    parallel=True solves every frame independently from `init` (frontal
    neutral by default), so frames can fan out across workers and the
    output is invariant to frame order.  parallel=False warm-starts each
    frame from the previous solution.  Per-frame failures are recorded in
    the result's error field rather than raised.
    """
    if init is None:
        init = PoseParams(w=np.zeros(rig.n_shapes))

    def solve_one(tgt, start):
        try:
            return solve_frame(tgt, rig, mesh, camera, texture, start, config)
        except Exception as exc:
            return SolveResult(params=start, loss=float("inf"), trace=[],
                               converged=False, error=str(exc))

    if parallel and workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(solve_frame, t, rig, mesh, camera, texture,
                                   init, config) for t in targets]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except Exception as exc:
                    results.append(SolveResult(params=init, loss=float("inf"),
                                               trace=[], converged=False,
                                               error=str(exc)))
            return results
    if parallel:
        return [solve_one(t, init) for t in targets]

    results = []
    start = init
    for t in targets:
        res = solve_one(t, start)
        results.append(res)
        if res.error is None:
            start = res.params
    return results


def blend_parameters(track_a: list, track_b: list, lip_mask) -> list:
    """Combine two parameter tracks: pose and non-masked controls from
    track_a, masked (lip/mouth, optionally jaw) controls from track_b."""
    if len(track_a) != len(track_b):
        raise LengthMismatch(
            f"track lengths differ: {len(track_a)} vs {len(track_b)}")
    mask = np.asarray(sorted(set(int(i) for i in lip_mask)), dtype=int)
    out = []
    for a, b in zip(track_a, track_b):
        w = a.w.copy()
        if len(mask):
            if mask.max() >= len(w):
                raise ValueError("lip mask index out of range")
            w[mask] = b.w[mask]
        out.append(a.replace(w=w))
    return out
