"""Experiment runner: ``mdm train | sample | benchmark | verify``.

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 non-finite training loss, 4 checkpoint/architecture mismatch.
Set MDM_LOG=debug|info|warning to control verbosity.  ``--seed``,
``--out-dir`` and ``--threads`` override their config keys.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import LangevinConfig, dirichlet_from_cir, run_mla, run_pla, run_ula
from .categorical import (Argmax, CategoricalCodec, SequenceBatch, Vocabulary,
                          decode, encode_onehot, flatten_dual, load_dataset,
                          mirror_encode, unflatten_dual)
from .config import (ExperimentConfig, build_arch, build_cir_params,
                     build_domain, build_mirror_map, build_schedule,
                     build_target, build_training, write_manifest)
from .diffusion import sample_dual_ddpm, sample_mirror_corrected
from .domains import Domain
from .errors import (CheckpointError, ConfigError, MirrorDiffusionError,
                     NonFiniteLossError)
from .metrics import (MetricReport, SampleBatch, empirical_moments,
                      violation_count, wasserstein1_1d)
from .mirror import NegativeEntropyMap, softmax
from .mlp import load_checkpoint, save_checkpoint
from .rng import make_generator
from .scores import MlpScore, make_exact_score, train_dsm
from .targets import Empirical
from .verify import run_invariants

log = logging.getLogger("mdm")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _setup_logging()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteLossError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 3
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 4
    except MirrorDiffusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser():
    parser = argparse.ArgumentParser(prog="mdm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (
        ("train", cmd_train, True),
        ("sample", cmd_sample, True),
        ("benchmark", cmd_benchmark, True),
        ("verify", cmd_verify, False),
    ):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("config", help="path to the experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--threads", type=int, default=None)
        p.set_defaults(func=fn)
    return parser


def _setup_logging():
    level = os.environ.get("MDM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if args.out_dir is not None:
        cfg.set("output_dir", args.out_dir)
    if args.threads is not None:
        cfg.set("threads", args.threads)
    return cfg


def _out_dir(cfg: ExperimentConfig, args) -> Path:
    out = Path(cfg.get("output_dir", "runs/latest"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_samples_csv(path, samples: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain_id"] + [f"coord_{j}" for j in range(samples.shape[1])])
        for i, row in enumerate(samples):
            writer.writerow([i] + [f"{v:.17g}" for v in row])


def _sequence_mode(cfg: ExperimentConfig) -> bool:
    return "categorical.vocab" in cfg.entries


def _load_sequence_dual(cfg: ExperimentConfig):
    """Token dataset -> flattened dual vectors via the per-position mirror map."""
    batch = load_dataset(cfg.require("target.dataset"))
    d = cfg.get_int("categorical.vocab")
    length = cfg.get_int("categorical.length", batch.length)
    if batch.vocab.size != d or batch.length != length:
        raise ConfigError(
            f"dataset is vocab={batch.vocab.size} L={batch.length}, config says "
            f"vocab={d} L={length}")
    floor = cfg.get_float("categorical.floor", 1e-3)
    codec = CategoricalCodec(Vocabulary.of_size(d))
    mm_pos = NegativeEntropyMap(Domain.simplex(d), interior_floor=min(floor, 1e-3))
    dual = mirror_encode(mm_pos, encode_onehot(codec, batch), floor)
    return flatten_dual(dual), codec, length, d


# -- train -----------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg, args)
    domain = build_domain(cfg)
    sched = build_schedule(cfg)
    training = build_training(cfg)
    if _sequence_mode(cfg):
        dual, _, length, d = _load_sequence_dual(cfg)
        if domain.kind != "euclidean" or domain.dim != length * d:
            raise ConfigError(
                f"sequence training diffuses in R^(L*d): set domain.kind=euclidean "
                f"and domain.dim={length * d}")
        mm = build_mirror_map(cfg, domain)
        source = dual
    else:
        mm = build_mirror_map(cfg, domain)
        source = build_target(cfg, domain)
        if isinstance(source, Empirical):
            source = source.data
    arch = build_arch(cfg, domain.dim, sched.steps)
    log.info("training %s parameters for %d iterations",
             arch, training.iterations)
    model, curve = train_dsm(mm, source, sched, arch, training)
    ckpt = out / "checkpoint.mdm1"
    save_checkpoint(ckpt, model)
    loss_csv = out / "loss.csv"
    with open(loss_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "loss"])
        for it, loss in curve:
            writer.writerow([it, f"{loss:.17g}"])
    write_manifest(out / "manifest.json", cfg, [ckpt.name, loss_csv.name])
    print(f"wrote {ckpt} ({model.parameter_count()} parameters)")
    return 0


# -- sample ------------------------------------------------------------------

def _blocked_chains(run_block, n_chains: int, threads: int):
    """Run chains in [0, n_chains) in contiguous blocks, one per worker.

    ``run_block(lo, hi)`` must be a pure function of the chain range; the
    counter-based noise stream guarantees the concatenated result does not
    depend on the blocking, so any thread count yields identical output.
    """
    threads = max(1, threads)
    if threads == 1:
        return run_block(0, n_chains)
    bounds = np.linspace(0, n_chains, threads + 1).astype(int)
    ranges = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda r: run_block(*r), ranges))
    return np.concatenate(parts, axis=0)


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg, args)
    mode = cfg.require("sampling.mode")
    seed = cfg.get_int("seed", 0)
    n_chains = cfg.get_int("sampling.n_chains", 1000)
    threads = cfg.get_int("threads", 1)
    domain = build_domain(cfg)
    sched = build_schedule(cfg)
    artifacts = []

    sequences = None
    if mode == "cir":
        batch = dirichlet_from_cir(build_cir_params(cfg), n_chains, seed)
    elif mode in ("dual-ddpm", "mirror-corrected"):
        batch, sequences = _sample_diffusion(cfg, mode, domain, sched, n_chains,
                                             seed, threads)
    elif mode in ("mla", "ula", "pla"):
        batch = _sample_langevin(cfg, mode, domain, seed, n_chains)
    else:
        raise ConfigError(f"unknown sampling.mode {mode!r}")

    samples_csv = out / "samples.csv"
    _write_samples_csv(samples_csv, batch.samples)
    artifacts.append(samples_csv.name)

    report = MetricReport()
    violations = violation_count(batch)
    report.add("violation_count", violations, 0.0, violations == 0)
    mean, var = empirical_moments(batch)
    for j in range(batch.samples.shape[1]):
        report.add(f"mean_{j}", mean[j], None, True)
        report.add(f"variance_{j}", var[j], None, True)
    metrics_csv = out / "metrics.csv"
    report.write_csv(metrics_csv)
    artifacts.append(metrics_csv.name)

    if sequences is not None:
        seq_path = out / "sequences.txt"
        with open(seq_path, "w") as fh:
            fh.write(f"# vocab={sequences.vocab.size} L={sequences.length}\n")
            for row in sequences.tokens:
                fh.write(" ".join(str(int(t)) for t in row) + "\n")
        artifacts.append(seq_path.name)

    write_manifest(out / "manifest.json", cfg, artifacts)
    print(f"wrote {samples_csv} ({n_chains} chains, mode={mode}, "
          f"violations={violations})")
    return 0


def _sample_diffusion(cfg, mode, domain, sched, n_chains, seed, threads):
    mm = build_mirror_map(cfg, domain)
    seq = _sequence_mode(cfg)
    target = None
    if mode == "mirror-corrected" or not cfg.get("model.checkpoint"):
        target = build_target(cfg, domain)
        if not target.is_analytic:
            raise ConfigError("analytic target required")
    ckpt_path = cfg.get("model.checkpoint")
    if ckpt_path:
        model = load_checkpoint(ckpt_path)
        if model.arch.input_dim != domain.dim:
            raise CheckpointError(
                f"checkpoint is for dim {model.arch.input_dim}, domain has {domain.dim}")
        if model.arch.total_steps != sched.steps:
            raise CheckpointError(
                f"checkpoint was trained with T={model.arch.total_steps}, "
                f"config says T={sched.steps}")
        score_model = MlpScore(model, sched)
    else:
        score_model = make_exact_score(mode, mm, target, sched)

    if mode == "mirror-corrected":
        def run_block(lo, hi):
            y, _ = sample_mirror_corrected(sched, mm, target, score_model,
                                           hi - lo, seed, chain_offset=lo)
            return y
    else:
        def run_block(lo, hi):
            return sample_dual_ddpm(sched, score_model, domain.dim, hi - lo,
                                    seed, chain_offset=lo)

    y0 = _blocked_chains(run_block, n_chains, threads)

    if seq:
        d = cfg.get_int("categorical.vocab")
        length = cfg.get_int("categorical.length", domain.dim // d)
        probs = softmax(unflatten_dual(y0, length, d))
        codec = CategoricalCodec(Vocabulary.of_size(d))
        sequences = decode(codec, probs, Argmax())
        batch = SampleBatch(flatten_dual(probs), domain, provenance={
            "sampler": mode, "seed": seed, "steps": sched.steps,
            "config_hash": cfg.hash()})
        return batch, sequences
    x = mm.grad_conjugate(y0)
    batch = SampleBatch(x, domain, provenance={
        "sampler": mode, "seed": seed, "steps": sched.steps,
        "config_hash": cfg.hash()})
    return batch, None


def _domain_center(domain: Domain) -> np.ndarray:
    if domain.kind == "simplex":
        return np.full(domain.dim, 1.0 / domain.dim)
    if domain.kind == "box":
        return np.full(domain.dim, 0.5 * (domain.lower + domain.upper))
    return np.zeros(domain.dim)


def _sample_langevin(cfg, mode, domain, seed, n_chains):
    target = build_target(cfg, domain)
    if not target.is_analytic:
        raise ConfigError("analytic target required")
    lcfg = LangevinConfig(
        step_size=cfg.get_float("sampling.step_size", 1e-3),
        n_steps=cfg.get_int("sampling.n_steps", 10_000),
        n_chains=n_chains, seed=seed)
    x0 = np.tile(_domain_center(domain), (n_chains, 1))
    if mode == "mla":
        stats = run_mla(build_mirror_map(cfg, domain), target, x0, lcfg)
    elif mode == "pla":
        stats = run_pla(target, x0, lcfg)
    else:
        if domain.kind != "euclidean":
            raise ConfigError("ula runs on euclidean domains; use mla or pla")
        stats = run_ula(target, x0, lcfg)
    return stats.final


# -- benchmark -----------------------------------------------------------------

BENCHMARK_SAMPLERS = ("mla", "pla", "dual-ddpm", "mirror-corrected", "cir", "oracle")


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg, args)
    domain = build_domain(cfg)
    target = build_target(cfg, domain)
    if not target.is_analytic:
        raise ConfigError("analytic target required")
    names = [s.strip() for s in cfg.get("benchmark.samplers", "mla").split(",")]
    for name in names:
        if name not in BENCHMARK_SAMPLERS:
            raise ConfigError(f"unknown sampler {name!r} in benchmark.samplers")
    n = cfg.get_int("benchmark.n_samples", 10_000)
    seed = cfg.get_int("seed", 0)
    oracle = target.sample(n, make_generator(seed + 1))

    rows = []
    for name in names:
        t0 = time.perf_counter()
        samples = _benchmark_run(cfg, name, domain, target, n, seed)
        elapsed = time.perf_counter() - t0
        w1 = float(np.mean([
            wasserstein1_1d(samples[:, j], oracle[:, j])
            for j in range(domain.dim)]))
        batch = SampleBatch(samples, domain, provenance={"sampler": name})
        rows.append((name, w1, violation_count(batch), elapsed))

    path = out / "comparison.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sampler", "w1_to_oracle", "violation_count", "seconds"])
        for name, w1, viol, secs in rows:
            writer.writerow([name, f"{w1:.17g}", viol, f"{secs:.6f}"])
    write_manifest(out / "manifest.json", cfg, [path.name])
    for name, w1, viol, secs in rows:
        print(f"{name:>16}  W1={w1:.5f}  violations={viol}  {secs:.2f}s")
    return 0


def _benchmark_run(cfg, name, domain, target, n, seed):
    if name == "oracle":
        return target.sample(n, make_generator(seed + 2))
    if name == "cir":
        return dirichlet_from_cir(build_cir_params(cfg), n, seed).samples
    if name in ("mla", "pla"):
        lcfg = LangevinConfig(
            step_size=cfg.get_float("sampling.step_size", 1e-3),
            n_steps=cfg.get_int("sampling.n_steps", 5_000),
            n_chains=n, seed=seed)
        x0 = np.tile(_domain_center(domain), (n, 1))
        if name == "mla":
            stats = run_mla(build_mirror_map(cfg, domain), target, x0, lcfg)
        else:
            stats = run_pla(target, x0, lcfg)
        return stats.final.samples
    # diffusion modes with exact scores
    sched = build_schedule(cfg)
    mm = build_mirror_map(cfg, domain)
    score_model = make_exact_score(name, mm, target, sched)
    if name == "mirror-corrected":
        y0, _ = sample_mirror_corrected(sched, mm, target, score_model, n, seed)
    else:
        y0 = sample_dual_ddpm(sched, score_model, domain.dim, n, seed)
    return mm.grad_conjugate(y0)


# -- verify ---------------------------------------------------------------------

def cmd_verify(args) -> int:
    report = run_invariants()
    print(report.format_table())
    out = Path(args.out_dir) if args.out_dir else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "verify_report.csv")
    if report.all_passed:
        print("all invariants passed")
        return 0
    print("INVARIANT FAILURES DETECTED", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
