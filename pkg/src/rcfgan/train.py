"""Alternating training loop for the reciprocal CF objective.

Each iteration runs one critic update then one generator update, each on its
own fresh data batch, latent draw, and frequency draw.

Critic update (theta_c, and theta_t when the scale mixture is on): descend

    -( D(f(g(z)), z) - D(f(x), z) ) + weight * mean ||z - f(g(z))||^2

where D is the CF distance in the critic's output space and z doubles as the
anchor sample set. Gradients through the generator are cut (its output is
detached), and the reciprocal term touches only theta_c.

Generator update (theta_g): descend D(f(g(z)), f(x)) with the critic's
parameters frozen by detaching its real-side embedding and cutting the
frequency gradient.

Telemetry records per-iteration scalars; a non-finite value aborts with the
recent telemetry window attached instead of training through NaNs.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .ecf import distance_between, ecf
from .freq import FreqSampler, LatentSpec, sample_latent
from .nets import build_default_nets, load_checkpoint, save_checkpoint
from .optim import Adam

TELEMETRY_COLUMNS = ("iteration", "critic_loss", "gen_loss",
                     "reciprocal_loss", "embed_dist")


class TrainingDiverged(RuntimeError):
    """A loss went non-finite; carries the recent telemetry window."""

    def __init__(self, message, telemetry_tail):
        super().__init__(message)
        self.telemetry_tail = telemetry_tail


@dataclass
class TrainConfig:
    """Hyperparameters of the training loop."""

    iterations: int = 5000
    latent_dim: int = 2
    hidden: int = 128
    batch_data: int = 64      # critic-side data batch
    batch_gen: int = 64       # generator-side data batch
    batch_freq: int = 64      # frequency draws per distance
    batch_sigma: int = 64     # noise rows feeding the t-net
    lr: float = 2e-4
    adam_betas: tuple = (0.5, 0.999)
    alpha: float = 0.5
    eps: float = 1e-12
    recip_weight: float = 1.0
    z_variance: float = 0.3
    t_variance: float = 1.0
    use_tnet: bool = True
    use_anchor: bool = True
    use_reciprocal: bool = True
    seed: int = 0
    checkpoint_interval: int = 1000

    def __post_init__(self):
        for name in ("batch_data", "batch_gen", "batch_freq", "batch_sigma"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.use_tnet and self.batch_freq != self.batch_sigma:
            raise ValueError("scale-mixture sampling pairs frequency and "
                             f"sigma rows; got batch_freq={self.batch_freq}, "
                             f"batch_sigma={self.batch_sigma}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.lr <= 0.0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.recip_weight < 0.0:
            raise ValueError(f"recip_weight must be >= 0, got {self.recip_weight}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.z_variance <= 0.0 or self.t_variance <= 0.0:
            raise ValueError("z_variance and t_variance must be > 0")
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")


class TrainTelemetry:
    """Per-iteration scalar log with CSV output and moving averages."""

    def __init__(self):
        self.rows = []

    def append(self, iteration, critic_loss, gen_loss, reciprocal_loss,
               embed_dist):
        self.rows.append((iteration, critic_loss, gen_loss,
                          reciprocal_loss, embed_dist))

    def column(self, name):
        idx = TELEMETRY_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    def moving_average(self, name, window=500, at_iteration=None):
        """Trailing mean over ``window`` rows, by default at the last row.

        ``at_iteration`` evaluates the same window ending at that recorded
        iteration instead, so early and late smoothed values can be compared.
        """
        values = self.column(name)
        if values.size == 0:
            raise ValueError("no telemetry recorded yet")
        if at_iteration is None:
            return float(values[-window:].mean())
        iters = self.column("iteration")
        mask = iters <= at_iteration
        if not mask.any():
            raise ValueError(f"no telemetry at or before {at_iteration}")
        return float(values[mask][-window:].mean())

    def tail(self, count=500):
        return self.rows[-count:]

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(TELEMETRY_COLUMNS) + "\n")
            for row in self.rows:
                iteration, rest = row[0], row[1:]
                fh.write(",".join([str(iteration)] + [repr(v) for v in rest])
                         + "\n")


@dataclass
class TrainerState:
    config: TrainConfig
    critic: object
    generator: object
    tnet: object
    freq_sampler: FreqSampler
    latent: LatentSpec
    critic_opt: Adam
    gen_opt: Adam
    tnet_opt: Adam
    rng: np.random.Generator
    telemetry: TrainTelemetry = field(default_factory=TrainTelemetry)
    iteration: int = 0


def init_state(config, data_dim, generator_output="identity", nets=None):
    """Build networks, optimizers, and samplers for a fresh run.

    ``nets`` may supply a prebuilt (critic, generator, tnet) triple for
    nonstandard topologies; the default comes from build_default_nets.
    """
    if nets is not None:
        critic, generator, tnet = nets
    else:
        critic, generator, tnet = build_default_nets(
            data_dim, config.latent_dim, hidden=config.hidden,
            generator_output=generator_output, seed=config.seed)
    if critic.spec.output_activation != "tanh":
        raise ValueError("critic embedding must be tanh-bounded")
    mode = "scale_mixture" if config.use_tnet else "fixed_gaussian"
    sampler = FreqSampler(dim=config.latent_dim, mode=mode,
                          base_variance=config.t_variance,
                          tnet=tnet if config.use_tnet else None)
    rng = np.random.default_rng(config.seed)
    return TrainerState(
        config=config, critic=critic, generator=generator, tnet=tnet,
        freq_sampler=sampler, latent=LatentSpec(config.latent_dim,
                                                config.z_variance),
        critic_opt=Adam(critic.parameters(), lr=config.lr,
                        betas=config.adam_betas),
        gen_opt=Adam(generator.parameters(), lr=config.lr,
                     betas=config.adam_betas),
        tnet_opt=Adam(tnet.parameters(), lr=config.lr,
                      betas=config.adam_betas),
        rng=rng)


def reciprocal_loss(z, critic, generator):
    """Mean squared reconstruction of the latent batch: ||z - f(g(z))||^2."""
    z = ad.as_tensor(z)
    recon = critic.forward(generator.forward(z))
    diff = ad.sub(z, recon)
    return ad.reduce_mean(ad.reduce_sum(ad.square(diff), axis=1))


def _mse_rows(a, b):
    diff = ad.sub(a, b)
    return ad.reduce_mean(ad.reduce_sum(ad.square(diff), axis=1))


def critic_step(state, real_batch):
    """One update of the critic (and t-net, if active). Returns scalars."""
    cfg = state.config
    state.critic_opt.zero_grad()
    if cfg.use_tnet:
        state.tnet_opt.zero_grad()

    # the fake path (and its reciprocal term) runs at the generator batch size
    z = sample_latent(cfg.batch_gen, state.latent, state.rng)
    freqs = state.freq_sampler.draw(cfg.batch_freq, state.rng, track_grad=True)
    real = ad.as_tensor(real_batch)

    fake = state.generator.forward(z).detach()
    emb_fake = state.critic.forward(fake)
    emb_real = state.critic.forward(real)

    ecf_fake = ecf(emb_fake, freqs)
    ecf_real = ecf(emb_real, freqs)

    if cfg.use_anchor:
        ecf_anchor = ecf(z, freqs)
        d_fake = distance_between(ecf_fake, ecf_anchor, cfg.alpha, cfg.eps)
        d_real = distance_between(ecf_real, ecf_anchor, cfg.alpha, cfg.eps)
        adversarial = ad.sub(d_real, d_fake)  # descend -(d_fake - d_real)
        embed_dist = d_real.item()
    else:
        d_pair = distance_between(ecf_fake, ecf_real, cfg.alpha, cfg.eps)
        adversarial = ad.neg(d_pair)
        with_anchor = distance_between(ecf(emb_real.detach(), freqs.detach()),
                                       ecf(z.detach(), freqs.detach()),
                                       cfg.alpha, cfg.eps)
        embed_dist = with_anchor.item()

    recip_value = 0.0
    total = adversarial
    if cfg.use_reciprocal and cfg.recip_weight > 0.0:
        recip = _mse_rows(z, emb_fake)
        recip_value = recip.item()
        total = ad.add(total, ad.scale(recip, cfg.recip_weight))

    critic_loss = total.item()
    if not np.isfinite(critic_loss):
        raise TrainingDiverged(
            f"critic loss went non-finite at iteration {state.iteration}",
            state.telemetry.tail())

    ad.backward(total)
    state.critic_opt.step()
    if cfg.use_tnet:
        state.tnet_opt.step()
    return {"critic_loss": critic_loss, "reciprocal_loss": recip_value,
            "embed_dist": embed_dist}


def generator_step(state, real_batch):
    """One update of the generator against the frozen critic."""
    cfg = state.config
    state.gen_opt.zero_grad()

    z = sample_latent(cfg.batch_gen, state.latent, state.rng)
    freqs = state.freq_sampler.draw(cfg.batch_freq, state.rng,
                                    track_grad=False)
    real = ad.as_tensor(real_batch)

    emb_fake = state.critic.forward(state.generator.forward(z))
    emb_real = state.critic.forward(real).detach()

    loss = distance_between(ecf(emb_fake, freqs), ecf(emb_real, freqs),
                            cfg.alpha, cfg.eps)
    gen_loss = loss.item()
    if not np.isfinite(gen_loss):
        raise TrainingDiverged(
            f"generator loss went non-finite at iteration {state.iteration}",
            state.telemetry.tail())

    ad.backward(loss)
    # only the generator moves; critic grads from this pass are dropped
    state.gen_opt.step()
    state.critic_opt.zero_grad()
    return {"gen_loss": gen_loss}


def train(config, stream, out_dir=None, generator_output="identity",
          state=None):
    """Run the full loop over a data stream; returns (state, telemetry).

    With out_dir set, writes telemetry.csv plus periodic and final
    checkpoints there. Zero iterations leaves the networks untouched.
    """
    if state is None:
        state = init_state(config, stream.dim, generator_output)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    for iteration in range(1, config.iterations + 1):
        state.iteration = iteration
        try:
            critic_metrics = critic_step(state,
                                         stream.next_batch(config.batch_data,
                                                           state.rng))
            gen_metrics = generator_step(state,
                                         stream.next_batch(config.batch_gen,
                                                           state.rng))
        except TrainingDiverged:
            if out_dir is not None:
                state.telemetry.write_csv(os.path.join(out_dir,
                                                       "telemetry.csv"))
            raise
        state.telemetry.append(iteration,
                               critic_metrics["critic_loss"],
                               gen_metrics["gen_loss"],
                               critic_metrics["reciprocal_loss"],
                               critic_metrics["embed_dist"])
        if out_dir is not None:
            if config.checkpoint_interval > 0 and \
                    iteration % config.checkpoint_interval == 0:
                save_run_checkpoint(state, os.path.join(
                    out_dir, f"checkpoint_{iteration:06d}.ckpt"))
            if iteration % 100 == 0:
                state.telemetry.write_csv(os.path.join(out_dir,
                                                       "telemetry.csv"))

    if out_dir is not None:
        state.telemetry.write_csv(os.path.join(out_dir, "telemetry.csv"))
        save_run_checkpoint(state, os.path.join(out_dir,
                                                "checkpoint_final.ckpt"))
    return state, state.telemetry


def save_run_checkpoint(state, path):
    save_checkpoint(path, {"critic": state.critic,
                           "generator": state.generator,
                           "tnet": state.tnet})


def load_run_checkpoint(state, path):
    load_checkpoint(path, {"critic": state.critic,
                           "generator": state.generator,
                           "tnet": state.tnet})


def generate(state, n, rng=None):
    """Sample n points from the trained generator as an (n, d) array."""
    rng = rng if rng is not None else state.rng
    z = sample_latent(n, state.latent, rng)
    return state.generator.forward(z).data.copy()


def reconstruct(state, samples):
    """g(f(x)) for an (n, d) array: the data-side reciprocal map."""
    emb = state.critic.forward(ad.as_tensor(samples))
    return state.generator.forward(emb.detach()).data.copy()
