"""Staged motion-capture regressor.

Four small dense networks map a latent image code to animation
parameters: pose_net reads the latent alone, jaw_net reads (latent,
pose), expr_net reads (latent, pose, jaw), and landmark_net maps the
predicted parameters to 68 screen-space landmarks.  Inference runs the
chain sequentially, like a traditional solver refining pose before
expression.

Training decouples into three stages.  Stage 1 fits pose/jaw/expression
nets on synthetic samples with known ground truth, each downstream net
seeing both predicted and ground-truth upstream inputs (teacher
forcing).  Stage 2 freezes those nets and fits the landmark net under a
per-marker hinge loss that ignores errors below a tolerance (landmark
estimates are noisy; only gross disagreement should pull).  Stage 3
freezes the landmark net and fine-tunes pose/jaw/expression on synthetic
plus unlabeled real samples, backpropagating the hinge through the
frozen landmark net into the parameter nets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .rig import PoseParams

LEAKY_SLOPE = 0.2
HINGE_DELTA = 0.01
PITCH_RANGE = (-10.0, 10.0)
YAW_RANGE = (-80.0, 80.0)
N_LANDMARKS = 68


@dataclass
class Mlp:
    """Fully-connected stack: leaky-ReLU hidden layers, sigmoid output."""

    weights: list                  # per layer, (fan_out, fan_in)
    biases: list                   # per layer, (fan_out,)
    slope: float = LEAKY_SLOPE

    @classmethod
    def create(cls, sizes, seed: int = 0, slope: float = LEAKY_SLOPE) -> "Mlp":
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            std = np.sqrt(2.0 / (fan_in * (1.0 + slope * slope)))
            weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights=weights, biases=biases, slope=slope)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def forward(self, x):
        """Returns (output, activation cache for backward)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        a = np.atleast_2d(x)
        if a.shape[1] != self.in_dim:
            raise DimensionMismatch(
                f"input has {a.shape[1]} features, net expects {self.in_dim}")
        acts = [a]
        last = len(self.weights) - 1
        for i, (wt, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ wt.T + b
            a = _sigmoid(z) if i == last else np.where(z > 0, z, self.slope * z)
            acts.append(a)
        return (acts[-1][0] if single else acts[-1]), acts

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, acts, grad_out):
        """Gradients for a forward cache and dLoss/d(output).

        Returns (weight grads, bias grads, dLoss/d(input)); the input
        gradient keeps grad_out's batch shape."""
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        single = np.asarray(grad_out).ndim == 1
        y = acts[-1]
        delta = g * y * (1.0 - y)
        wgrads = [None] * len(self.weights)
        bgrads = [None] * len(self.weights)
        for i in reversed(range(len(self.weights))):
            prev = acts[i]
            wgrads[i] = delta.T @ prev
            bgrads[i] = delta.sum(axis=0)
            upstream = delta @ self.weights[i]
            if i:
                # prev holds the post-activation values; positive entries
                # came from the identity branch, the rest from the slope
                delta = upstream * np.where(prev > 0, 1.0, self.slope)
            else:
                grad_in = upstream
        return wgrads, bgrads, (grad_in[0] if single else grad_in)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mlp_forward(mlp: Mlp, x) -> np.ndarray:
    return mlp(x)


def mlp_backward(mlp: Mlp, x, grad_output):
    """(weight grads, bias grads, input grad) at input x."""
    _, acts = mlp.forward(x)
    return mlp.backward(acts, grad_output)


# ---------------------------------------------------------------------------
# Samples and the bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainSample:
    """One training datapoint.

    latent is the domain-roundtripped image code; landmarks are 68
    points in [0,1]^2 screen coordinates.  Synthetic samples carry the
    ground-truth pose and control split; real footage carries only the
    latent and landmark estimates."""

    latent: np.ndarray
    landmarks: np.ndarray
    pitch: float | None = None
    yaw: float | None = None
    jaw: np.ndarray | None = None
    expression: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "latent",
                           np.asarray(self.latent, dtype=float).reshape(-1))
        m = np.asarray(self.landmarks, dtype=float)
        if m.shape != (N_LANDMARKS, 2):
            raise DimensionMismatch(
                f"landmarks must be ({N_LANDMARKS}, 2), got {m.shape}")
        object.__setattr__(self, "landmarks", m)
        truth = (self.pitch, self.yaw, self.jaw, self.expression)
        if any(t is not None for t in truth) and any(t is None for t in truth):
            raise ValueError("ground truth must be complete or absent")
        if self.jaw is not None:
            object.__setattr__(self, "jaw",
                               np.asarray(self.jaw, dtype=float).reshape(-1))
            object.__setattr__(
                self, "expression",
                np.asarray(self.expression, dtype=float).reshape(-1))

    @property
    def has_truth(self) -> bool:
        return self.pitch is not None


@dataclass
class RegressorBundle:
    pose_net: Mlp         # latent -> (pitch, yaw) normalized to [0,1]
    jaw_net: Mlp          # latent + pose -> jaw controls
    expr_net: Mlp         # latent + pose + jaw -> expression controls
    landmark_net: Mlp     # pose + jaw + expression -> 68*2 landmarks
    jaw_indices: tuple
    n_controls: int
    pitch_range: tuple = PITCH_RANGE
    yaw_range: tuple = YAW_RANGE
    history: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.pose_net.in_dim
        nj = len(self.jaw_indices)
        nc = self.n_controls - nj
        chain = (self.pose_net.out_dim == 2
                 and self.jaw_net.in_dim == d + 2
                 and self.jaw_net.out_dim == nj
                 and self.expr_net.in_dim == d + 2 + nj
                 and self.expr_net.out_dim == nc
                 and self.landmark_net.in_dim == 2 + self.n_controls
                 and self.landmark_net.out_dim == 2 * N_LANDMARKS)
        if not chain:
            raise DimensionMismatch("network input/output sizes do not chain")

    @classmethod
    def create(cls, latent_dim: int, n_controls: int, jaw_indices,
               seed: int = 0, hidden: int = 256, n_hidden: int = 3,
               landmark_hidden: int = 128) -> "RegressorBundle":
        jaw_indices = tuple(int(i) for i in jaw_indices)
        nj = len(jaw_indices)
        nc = n_controls - nj
        mid = [hidden] * n_hidden
        return cls(
            pose_net=Mlp.create([latent_dim] + mid + [2], seed=seed),
            jaw_net=Mlp.create([latent_dim + 2] + mid + [nj], seed=seed + 1),
            expr_net=Mlp.create([latent_dim + 2 + nj] + mid + [nc],
                                seed=seed + 2),
            landmark_net=Mlp.create(
                [2 + n_controls] + [landmark_hidden] * 2 + [2 * N_LANDMARKS],
                seed=seed + 3),
            jaw_indices=jaw_indices, n_controls=n_controls)

    @property
    def expr_indices(self) -> tuple:
        jaw = set(self.jaw_indices)
        return tuple(i for i in range(self.n_controls) if i not in jaw)

    def normalize_pose(self, pitch, yaw) -> np.ndarray:
        (p0, p1), (y0, y1) = self.pitch_range, self.yaw_range
        return np.stack([(np.asarray(pitch, dtype=float) - p0) / (p1 - p0),
                         (np.asarray(yaw, dtype=float) - y0) / (y1 - y0)],
                        axis=-1)

    def denormalize_pose(self, pose_norm):
        pose_norm = np.asarray(pose_norm, dtype=float)
        (p0, p1), (y0, y1) = self.pitch_range, self.yaw_range
        pitch = p0 + pose_norm[..., 0] * (p1 - p0)
        yaw = y0 + pose_norm[..., 1] * (y1 - y0)
        return pitch, yaw

    def assemble_w(self, jaw, expression) -> np.ndarray:
        jaw = np.atleast_2d(jaw)
        expression = np.atleast_2d(expression)
        w = np.zeros((len(jaw), self.n_controls))
        w[:, list(self.jaw_indices)] = jaw
        w[:, list(self.expr_indices)] = expression
        return w

    def predict_chain(self, latents):
        """Sequential forward pass; returns (pose_norm, jaw, expression)."""
        e = np.atleast_2d(np.asarray(latents, dtype=float))
        p = self.pose_net(e)
        j = self.jaw_net(np.hstack([e, p]))
        c = self.expr_net(np.hstack([e, p, j]))
        return p, j, c


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def _mse_grad(pred, target):
    """Mean over batch of squared norms; returns (loss, dLoss/dpred)."""
    diff = pred - target
    return float((diff ** 2).sum(axis=1).mean()), 2.0 * diff / len(pred)


def hinge_landmark_loss(pred, markers, delta: float = HINGE_DELTA):
    """Per-marker hinge: distances below delta cost (and pull) nothing.

    pred and markers are (B, 68, 2); returns the mean per-marker hinge
    and dLoss/dpred of the same shape."""
    diff = pred - markers
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    slack = np.maximum(0.0, dist - delta)
    loss = float(slack.mean())
    grad = np.zeros_like(diff)
    active = slack > 0
    if active.any():
        grad[active] = diff[active] / dist[active, None] / slack.size
    return loss, grad


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 0.05
    momentum: float = 0.9
    decay: float = 0.99             # per-epoch learning-rate multiplier
    delta: float = HINGE_DELTA
    seed: int = 0


class _Momentum:
    """SGD with momentum; one velocity buffer set per registered net."""

    def __init__(self, nets, momentum):
        self.momentum = momentum
        self.vel = {id(net): ([np.zeros_like(w) for w in net.weights],
                              [np.zeros_like(b) for b in net.biases])
                    for net in nets}

    def step(self, net, wgrads, bgrads, lr):
        vw, vb = self.vel[id(net)]
        for w, v, g in zip(net.weights, vw, wgrads):
            v *= self.momentum
            v -= lr * g
            w += v
        for b, v, g in zip(net.biases, vb, bgrads):
            v *= self.momentum
            v -= lr * g
            b += v


def _truth_arrays(bundle, samples):
    e = np.stack([s.latent for s in samples])
    p = bundle.normalize_pose([s.pitch for s in samples],
                              [s.yaw for s in samples])
    j = np.stack([s.jaw for s in samples])
    c = np.stack([s.expression for s in samples])
    m = np.stack([s.landmarks for s in samples])
    return e, p, j, c, m


def _require_truth(samples):
    if not samples:
        raise ValueError("no training samples")
    if not all(s.has_truth for s in samples):
        raise ValueError("every sample in this stage needs ground truth")


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_stage1(bundle: RegressorBundle, synthetic: list,
                 config: TrainConfig | None = None) -> RegressorBundle:
    """Fit pose/jaw/expression nets on ground-truth synthetic samples.

    Downstream nets train on two terms per batch: one fed the upstream
    predictions (held constant), one fed the ground-truth upstream
    values.  The landmark net is untouched."""
    config = config or TrainConfig()
    _require_truth(synthetic)
    e, p, j, c, _ = _truth_arrays(bundle, synthetic)
    rng = np.random.default_rng(config.seed)
    opt = _Momentum([bundle.pose_net, bundle.jaw_net, bundle.expr_net],
                    config.momentum)
    curve = []
    lr = config.learning_rate
    for _ in range(config.epochs):
        total = 0.0
        nb = 0
        for idx in _batches(len(e), config.batch_size, rng):
            total += _stage1_batch(bundle, opt, e[idx], p[idx], j[idx],
                                   c[idx], lr)
            nb += 1
        curve.append(float(total / nb))
        lr *= config.decay
    bundle.history["stage1"] = curve
    return bundle


def _stage1_batch(bundle, opt, e, p, j, c, lr):
    """One mini-batch of stage-1 updates; returns the summed batch loss."""
    loss_p, gp = _mse_grad(bundle.pose_net(e), p)
    _apply(bundle.pose_net, opt, e, gp, lr)

    p_hat = bundle.pose_net(e)
    loss_j = _dual_term_update(bundle.jaw_net, opt,
                               np.hstack([e, p_hat]), np.hstack([e, p]),
                               j, lr)
    j_hat = bundle.jaw_net(np.hstack([e, p_hat]))
    loss_c = _dual_term_update(bundle.expr_net, opt,
                               np.hstack([e, p_hat, j_hat]),
                               np.hstack([e, p, j]), c, lr)
    return loss_p + loss_j + loss_c


def _apply(net, opt, x, grad_out, lr):
    _, acts = net.forward(x)
    wg, bg, _ = net.backward(acts, grad_out)
    opt.step(net, wg, bg, lr)


def _dual_term_update(net, opt, x_pred, x_truth, target, lr):
    """Sum the predicted-input and teacher-forced terms, update once."""
    out_a, acts_a = net.forward(x_pred)
    out_b, acts_b = net.forward(x_truth)
    loss_a, ga = _mse_grad(out_a, target)
    loss_b, gb = _mse_grad(out_b, target)
    wga, bga, _ = net.backward(acts_a, ga)
    wgb, bgb, _ = net.backward(acts_b, gb)
    wg = [a + b for a, b in zip(wga, wgb)]
    bg = [a + b for a, b in zip(bga, bgb)]
    opt.step(net, wg, bg, lr)
    return loss_a + loss_b


def train_stage2(bundle: RegressorBundle, synthetic: list,
                 config: TrainConfig | None = None) -> RegressorBundle:
    """Fit the landmark net; pose/jaw/expression stay bit-identical.

    Trains under the per-marker hinge on both the predicted parameter
    chain (held constant) and the ground-truth parameters."""
    config = config or TrainConfig()
    _require_truth(synthetic)
    e, p, j, c, m = _truth_arrays(bundle, synthetic)
    p_hat, j_hat, c_hat = bundle.predict_chain(e)
    x_pred = np.hstack([p_hat, j_hat, c_hat])
    x_truth = np.hstack([p, j, c])
    rng = np.random.default_rng(config.seed)
    net = bundle.landmark_net
    opt = _Momentum([net], config.momentum)
    curve = []
    lr = config.learning_rate
    for _ in range(config.epochs):
        total = 0.0
        nb = 0
        for idx in _batches(len(e), config.batch_size, rng):
            batch_loss = 0.0
            wg = [np.zeros_like(w) for w in net.weights]
            bg = [np.zeros_like(b) for b in net.biases]
            for x in (x_pred[idx], x_truth[idx]):
                out, acts = net.forward(x)
                loss, gm = hinge_landmark_loss(
                    out.reshape(-1, N_LANDMARKS, 2), m[idx], config.delta)
                w1, b1, _ = net.backward(acts, gm.reshape(len(idx), -1))
                wg = [a + b for a, b in zip(wg, w1)]
                bg = [a + b for a, b in zip(bg, b1)]
                batch_loss += loss
            opt.step(net, wg, bg, lr)
            total += batch_loss
            nb += 1
        curve.append(float(total / nb))
        lr *= config.decay
    bundle.history["stage2"] = curve
    return bundle


def train_stage3(bundle: RegressorBundle, synthetic: list, real: list,
                 config: TrainConfig | None = None) -> RegressorBundle:
    """Fine-tune pose/jaw/expression with landmark supervision.

    Synthetic samples keep their stage-1 losses; all samples add the
    hinge between their landmark estimates and the frozen landmark net
    applied to the predicted chain, backpropagated into the parameter
    nets.  The landmark net stays bit-identical."""
    config = config or TrainConfig()
    _require_truth(synthetic)
    samples = list(synthetic) + list(real)
    e = np.stack([s.latent for s in samples])
    m = np.stack([s.landmarks for s in samples])
    has_truth = np.array([s.has_truth for s in samples])
    p = bundle.normalize_pose(
        [s.pitch if s.has_truth else 0.0 for s in samples],
        [s.yaw if s.has_truth else 0.0 for s in samples])
    j = np.stack([s.jaw if s.has_truth
                  else np.zeros(len(bundle.jaw_indices)) for s in samples])
    c = np.stack([s.expression if s.has_truth
                  else np.zeros(len(bundle.expr_indices)) for s in samples])
    rng = np.random.default_rng(config.seed)
    nets = (bundle.pose_net, bundle.jaw_net, bundle.expr_net)
    opt = _Momentum(nets, config.momentum)
    curve = []
    lr = config.learning_rate
    for _ in range(config.epochs):
        total = 0.0
        nb = 0
        for idx in _batches(len(e), config.batch_size, rng):
            total += _stage3_batch(bundle, opt, e[idx], m[idx],
                                   has_truth[idx], p[idx], j[idx], c[idx],
                                   lr, config.delta)
            nb += 1
        curve.append(float(total / nb))
        lr *= config.decay
    bundle.history["stage3"] = curve
    return bundle


def _stage3_batch(bundle, opt, e, m, truth_mask, p, j, c, lr, delta):
    pose_net, jaw_net, expr_net = (bundle.pose_net, bundle.jaw_net,
                                   bundle.expr_net)
    lnet = bundle.landmark_net

    # forward the full chain, keeping caches
    p_hat, acts_p = pose_net.forward(e)
    xj = np.hstack([e, p_hat])
    j_hat, acts_j = jaw_net.forward(xj)
    xc = np.hstack([e, p_hat, j_hat])
    c_hat, acts_c = expr_net.forward(xc)
    xl = np.hstack([p_hat, j_hat, c_hat])
    l_hat, acts_l = lnet.forward(xl)

    hinge, gm = hinge_landmark_loss(l_hat.reshape(-1, N_LANDMARKS, 2), m,
                                    delta)
    # landmark gradient through the frozen landmark net into the chain
    _, _, gxl = lnet.backward(acts_l, gm.reshape(len(e), -1))
    nj = jaw_net.out_dim
    gp_l, gj_l, gc_l = gxl[:, :2], gxl[:, 2:2 + nj], gxl[:, 2 + nj:]

    wg_c, bg_c, gxc = expr_net.backward(acts_c, gc_l)
    gp_c = gxc[:, e.shape[1]:e.shape[1] + 2]
    gj_c = gxc[:, e.shape[1] + 2:]
    wg_j, bg_j, gxj = jaw_net.backward(acts_j, gj_l + gj_c)
    gp_j = gxj[:, e.shape[1]:]
    wg_p, bg_p, _ = pose_net.backward(acts_p, gp_l + gp_c + gp_j)

    loss = hinge
    if truth_mask.any():
        # stage-1 squared-error terms on the ground-truth subset, scaled
        # back to the full batch normalization
        frac = truth_mask.sum() / len(e)
        es, ps, js, cs = e[truth_mask], p[truth_mask], j[truth_mask], c[truth_mask]
        lp, gp = _mse_grad(pose_net(es), ps)
        _, acts = pose_net.forward(es)
        w1, b1, _ = pose_net.backward(acts, gp * frac)
        wg_p = [a + b for a, b in zip(wg_p, w1)]
        bg_p = [a + b for a, b in zip(bg_p, b1)]

        ph = pose_net(es)
        lj, (w1, b1) = _dual_term_grads(jaw_net, np.hstack([es, ph]),
                                        np.hstack([es, ps]), js, frac)
        wg_j = [a + b for a, b in zip(wg_j, w1)]
        bg_j = [a + b for a, b in zip(bg_j, b1)]

        jh = jaw_net(np.hstack([es, ph]))
        lc, (w1, b1) = _dual_term_grads(expr_net, np.hstack([es, ph, jh]),
                                        np.hstack([es, ps, js]), cs, frac)
        wg_c = [a + b for a, b in zip(wg_c, w1)]
        bg_c = [a + b for a, b in zip(bg_c, b1)]
        loss += frac * (lp + lj + lc)

    opt.step(pose_net, wg_p, bg_p, lr)
    opt.step(jaw_net, wg_j, bg_j, lr)
    opt.step(expr_net, wg_c, bg_c, lr)
    return loss


def _dual_term_grads(net, x_pred, x_truth, target, scale):
    out_a, acts_a = net.forward(x_pred)
    out_b, acts_b = net.forward(x_truth)
    loss_a, ga = _mse_grad(out_a, target)
    loss_b, gb = _mse_grad(out_b, target)
    wga, bga, _ = net.backward(acts_a, ga * scale)
    wgb, bgb, _ = net.backward(acts_b, gb * scale)
    return loss_a + loss_b, ([a + b for a, b in zip(wga, wgb)],
                             [a + b for a, b in zip(bga, bgb)])


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def latent_code(transfer, image: np.ndarray) -> np.ndarray:
    """Domain-roundtripped code: encode, re-render as synthetic, encode.

    Routing a real photo through the synthetic decoder first strips
    appearance the renderer cannot produce, so train and test inputs
    live in one domain."""
    return transfer.encode(transfer.decode_synthetic(transfer.encode(image)))


def infer(bundle: RegressorBundle, image: np.ndarray,
          transfer) -> PoseParams:
    """Regress pose and controls from a single image."""
    e = latent_code(transfer, image)
    p_norm, jaw, expr = bundle.predict_chain(e)
    pitch, yaw = bundle.denormalize_pose(p_norm[0])
    w = bundle.assemble_w(jaw, expr)[0]
    return PoseParams(pitch=float(pitch), yaw=float(yaw), w=w)


def normalize_landmarks(points: np.ndarray, width: int,
                        height: int) -> np.ndarray:
    """Pixel coordinates to [0,1]^2 screen coordinates."""
    pts = np.asarray(points, dtype=float)
    return pts / np.array([float(width), float(height)])
