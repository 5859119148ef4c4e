"""Batch command-line front end: analysis, oracle extraction, reconstruction,
evaluation, and model inspection.

All randomness flows through a single PRNG seeded by ``--seed`` (falling back
to the PHASELINE_SEED environment variable, then 0), so repeated runs are
bit-identical.  On any error, partially written outputs are removed and the
exit code is nonzero.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import formats, metrics, nn, pghi, phasediff, wls
from .spectral import Spectrogram, StftConfig, istft, stft

METHODS = ("oracle", "rtpghi", "pghi", "dnn", "timeint", "gla-refine")


def _add_stft_args(parser):
    parser.add_argument("--window", choices=("hann", "gaussian"), default="hann")
    parser.add_argument("--win-length", type=int, default=1024)
    parser.add_argument("--hop", type=int, default=256)
    parser.add_argument("--fft-size", type=int, default=1024)
    parser.add_argument("--sigma", type=float, default=None,
                        help="gaussian window width in samples (default: length/8)")
    parser.add_argument("--beta", type=float, default=None,
                        help="override the window constant used by analytic estimators")
    parser.add_argument("--sample-rate", type=int, default=None,
                        help="expected input sample rate; mismatch is an error")


def _stft_config(args):
    if args.window == "gaussian":
        sigma = args.sigma if args.sigma is not None else args.win_length / 8
        return StftConfig.gaussian(args.win_length, args.hop, args.fft_size,
                                   sigma=sigma, beta=args.beta)
    return StftConfig.hann(args.win_length, args.hop, args.fft_size, beta=args.beta)


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PHASELINE_SEED")
    return int(env) if env else 0


def _load_input(path, args, config):
    """Read a WAV or PSPC input into (magnitude, complex-or-None, rate, length)."""
    if path.endswith(".pspc"):
        data = formats.read_pspc(path)
        if args.sample_rate is not None and data.sample_rate != args.sample_rate:
            raise ValueError(
                f"{path}: sample rate {data.sample_rate} != expected {args.sample_rate}"
            )
        if data.hop != config.hop or data.window_length != config.length:
            raise ValueError(
                f"{path}: stored analysis (hop={data.hop}, L={data.window_length}) "
                f"does not match requested (hop={config.hop}, L={config.length})"
            )
        if data.kind == formats.COMPLEX_KIND:
            return np.abs(data.data), data.data, data.sample_rate, None
        return data.data, None, data.sample_rate, None
    rate, samples = formats.read_wav(path, expected_rate=args.sample_rate)
    spec = stft(samples, config, rate)
    return spec.magnitude, spec.coefficients, rate, samples.size


def _bpd_dump(tpd, config):
    # PPDF stores the baseband form; the frame-0 slot is zeroed by convention.
    bpd = phasediff.tpd_to_bpd(tpd, config.hop, config.fft_size)
    return np.concatenate([np.zeros((bpd.shape[0], 1)), bpd], axis=1)


def _estimate_differences(method, magnitude, coefficients, config, args, rate):
    """First stage: (tpd, fpd, bpd_for_dump) grids for the chosen method."""
    if method == "oracle":
        if coefficients is None:
            raise ValueError("oracle differences need phase: supply a WAV or complex PSPC")
        spec = Spectrogram(coefficients, config, rate)
        tpd, fpd = phasediff.oracle_differences(spec)
        return tpd, fpd, _bpd_dump(tpd, config)
    if method == "dnn" or (method == "timeint" and args.model_bpd and args.model_fpd):
        if not (args.model_bpd and args.model_fpd):
            raise ValueError("--method dnn requires --model-bpd and --model-fpd")
        bpd_model = nn.load_model_file(args.model_bpd)
        fpd_model = nn.load_model_file(args.model_fpd)
        tpd, fpd, bpd = nn.estimate_differences_dnn(
            magnitude, bpd_model, fpd_model, config.hop, config.fft_size
        )
        return tpd, fpd, bpd
    # analytic causal estimates (timeint without models)
    stream = pghi.CausalDerivativeStream(config)
    tpd_cols, fpd_cols = [], []
    for n in range(magnitude.shape[1]):
        tpd, fpd = stream.step(magnitude[:, n])
        if tpd is not None:
            tpd_cols.append(tpd)
        fpd_cols.append(fpd)
    tpd = np.stack(tpd_cols, axis=1)
    fpd = np.stack(fpd_cols, axis=1)
    return tpd, fpd, _bpd_dump(tpd, config)


def _reconstruct_phase(method, magnitude, coefficients, config, args, rate, seed):
    if method == "gla-refine":
        base = args.base_method
        if base == "gla-refine":
            raise ValueError("--base-method must be a non-composite method")
        phase, diffs = _reconstruct_phase(
            base, magnitude, coefficients, config, args, rate, seed
        )
        spec = Spectrogram.from_magnitude(magnitude, config, rate, phase=phase)
        return wls.griffin_lim_refine(spec, args.gla_iters), diffs

    if method == "rtpghi":
        params = pghi.HeapIntegrationParams(args.tolerance, seed)
        estimator = pghi.CausalDerivativeStream(config)
        integrator = pghi.RtpghiIntegrator(params)
        phase_cols, tpd_cols, fpd_cols = [], [], []
        for n in range(magnitude.shape[1]):
            tpd_n, fpd_n = estimator.step(magnitude[:, n])
            phase_cols.append(integrator.step(magnitude[:, n], tpd_n, fpd_n))
            if tpd_n is not None:
                tpd_cols.append(tpd_n)
            fpd_cols.append(fpd_n)
        tpd = np.stack(tpd_cols, axis=1)
        fpd = np.stack(fpd_cols, axis=1)
        return np.stack(phase_cols, axis=1), (_bpd_dump(tpd, config), fpd)

    if method == "pghi":
        log_mag = phasediff.log_magnitude(magnitude)
        est = pghi.estimate_derivatives_centered(log_mag, config)
        tpd, fpd = pghi.average_to_backward_differences(est)
        params = pghi.HeapIntegrationParams(args.tolerance, seed)
        phase = pghi.pghi_reconstruct(magnitude, tpd, fpd, params)
        return phase, (_bpd_dump(tpd, config), fpd)

    tpd, fpd, bpd_dump = _estimate_differences(method, magnitude, coefficients, config, args, rate)
    if method == "timeint":
        phase = wls.reconstruct_time_integration(magnitude, tpd, fpd)
    else:
        phase = wls.reconstruct_wls(magnitude, tpd, fpd, p=args.p, gamma0=args.gamma0)
    return phase, (bpd_dump, fpd)


def _reconstruct_one(args, input_path, output_path):
    config = _stft_config(args)
    seed = _resolve_seed(args)
    magnitude, coefficients, rate, length = _load_input(input_path, args, config)
    phase, diffs = _reconstruct_phase(
        args.method, magnitude, coefficients, config, args, rate, seed
    )
    spec = Spectrogram.from_magnitude(
        magnitude, config, rate, phase=phase, signal_length=length
    )
    formats.write_wav(output_path, rate, istft(spec))
    if args.emit_diffs:
        if diffs is None:
            raise ValueError(f"--emit-diffs is not available for method {args.method!r}")
        formats.write_ppdf(args.emit_diffs, diffs[0], diffs[1])
    if args.emit_spec:
        formats.write_pspc(args.emit_spec, spec.coefficients, rate, config.hop, config.length)


def _plain_args(args):
    """Picklable copy of the parsed options (handlers stripped)."""
    return {k: v for k, v in vars(args).items() if k not in ("handler", "outputs")}


def _worker_reconstruct(payload):
    _reconstruct_one(argparse.Namespace(**payload["args"]), payload["input"], payload["output"])


def _worker_oracle(payload):
    _oracle_one(
        argparse.Namespace(**payload["args"]),
        payload["input"],
        payload["out_diffs"],
        payload["out_spec"],
    )


def _run_batch(jobs, worker, tasks):
    """One independent pipeline per file; failed files have their partial
    outputs removed and force a nonzero exit."""
    failures = []

    def handle_failure(payload, exc):
        for path in payload.get("cleanup", []):
            if path and os.path.exists(path):
                os.unlink(path)
        failures.append((payload["input"], exc))

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(worker, payload): payload for payload in tasks}
            for future, payload in futures.items():
                try:
                    future.result()
                except Exception as exc:
                    handle_failure(payload, exc)
    else:
        for payload in tasks:
            try:
                worker(payload)
            except Exception as exc:
                handle_failure(payload, exc)
    for name, exc in failures:
        print(f"error: {name}: {exc}", file=sys.stderr)
    return 1 if failures else 0


def cmd_reconstruct(args):
    if os.path.isdir(args.input):
        if args.emit_diffs or args.emit_spec:
            raise ValueError("--emit-diffs/--emit-spec need a single-file invocation")
        inputs = sorted(
            f for f in os.listdir(args.input) if f.endswith((".wav", ".pspc"))
        )
        if not inputs:
            raise ValueError(f"{args.input}: no .wav or .pspc files")
        os.makedirs(args.output, exist_ok=True)
        plain = _plain_args(args)
        tasks = []
        for name in inputs:
            out = os.path.join(args.output, os.path.splitext(name)[0] + ".wav")
            tasks.append(
                {
                    "args": plain,
                    "input": os.path.join(args.input, name),
                    "output": out,
                    "cleanup": [out],
                }
            )
        return _run_batch(args.jobs, _worker_reconstruct, tasks)

    _reconstruct_one(args, args.input, args.output)
    return 0


def _oracle_one(args, input_path, out_diffs, out_spec):
    config = _stft_config(args)
    rate, samples = formats.read_wav(input_path, expected_rate=args.sample_rate)
    spec = stft(samples, config, rate)
    tpd, fpd = phasediff.oracle_differences(spec)
    if out_diffs:
        formats.write_ppdf(out_diffs, _bpd_dump(tpd, config), fpd)
    if out_spec:
        grid = spec.coefficients if args.complex else spec.magnitude
        formats.write_pspc(out_spec, grid, rate, config.hop, config.length)


def cmd_oracle(args):
    if os.path.isdir(args.input):
        if args.out_diffs or args.out_spec:
            raise ValueError("directory input uses --out-dir, not --out-diffs/--out-spec")
        if not args.out_dir:
            raise ValueError("directory input requires --out-dir")
        inputs = sorted(f for f in os.listdir(args.input) if f.endswith(".wav"))
        if not inputs:
            raise ValueError(f"{args.input}: no .wav files")
        os.makedirs(args.out_dir, exist_ok=True)
        plain = _plain_args(args)
        tasks = []
        for name in inputs:
            stem = os.path.splitext(name)[0]
            diffs = os.path.join(args.out_dir, stem + ".ppdf")
            spec_path = os.path.join(args.out_dir, stem + ".pspc")
            tasks.append(
                {
                    "args": plain,
                    "input": os.path.join(args.input, name),
                    "out_diffs": diffs,
                    "out_spec": spec_path,
                    "cleanup": [diffs, spec_path],
                }
            )
        return _run_batch(args.jobs, _worker_oracle, tasks)

    _oracle_one(args, args.input, args.out_diffs, args.out_spec)
    return 0


def cmd_evaluate(args):
    config = _stft_config(args)
    rate_ref, ref = formats.read_wav(args.reference, expected_rate=args.sample_rate)
    rate_est, est = formats.read_wav(args.estimate, expected_rate=args.sample_rate)
    if rate_ref != rate_est:
        raise ValueError(
            f"sample rates differ: {rate_ref} (reference) vs {rate_est} (estimate)"
        )
    if ref.size != est.size:
        print(
            f"warning: trimming to {min(ref.size, est.size)} samples "
            f"(reference {ref.size}, estimate {est.size})",
            file=sys.stderr,
        )
        n = min(ref.size, est.size)
        ref, est = ref[:n], est[:n]
    ref_spec = stft(ref, config, rate_ref)
    est_spec = stft(est, config, rate_est)
    mask = None
    if args.mask_quantile is not None:
        mask = metrics.magnitude_quantile_mask(ref_spec.magnitude, args.mask_quantile)
    report = metrics.evaluate_pair(ref_spec, est_spec, path=args.estimate, magnitude_mask=mask)
    line = report.line()
    if args.report:
        with open(args.report, "a") as fh:
            fh.write(line + "\n")
    print(line)
    if args.emit_hist:
        formats.write_ppdh(args.emit_hist + ".bpd.ppdh", report.awe_bpd.histogram)
        formats.write_ppdh(args.emit_hist + ".fpd.ppdh", report.awe_fpd.histogram)
    return 0


def cmd_inspect_model(args):
    model = nn.load_model_file(args.model)
    if args.expect_head and model.head != args.expect_head:
        raise nn.ModelHeadError(
            f"model head is {model.head!r}, expected {args.expect_head!r}"
        )
    print(f"head: {model.head}")
    for i, layer in enumerate(model.layers):
        print(
            f"layer {i}: {layer.kind} in={layer.in_channels} "
            f"out={layer.out_channels} k={layer.kernel_size}"
        )
    print(f"params: {model.param_count}")
    print("crc: ok")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phaseline",
        description="STFT phase reconstruction from magnitude, frame by frame",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("reconstruct", help="estimate phase and write a waveform")
    rec.add_argument("input", help="input WAV or .pspc magnitude file")
    rec.add_argument("output", help="output WAV path")
    rec.add_argument("--method", choices=METHODS, default="rtpghi")
    rec.add_argument("--p", type=float, default=wls.DEFAULT_P)
    rec.add_argument("--gamma0", type=float, default=wls.DEFAULT_GAMMA0)
    rec.add_argument("--tolerance", type=float, default=1e-6)
    rec.add_argument("--seed", type=int, default=None)
    rec.add_argument("--model-bpd", default=None)
    rec.add_argument("--model-fpd", default=None)
    rec.add_argument("--gla-iters", type=int, default=100)
    rec.add_argument("--base-method", choices=METHODS, default="rtpghi")
    rec.add_argument("--emit-diffs", default=None, help="write the differences used (PPDF)")
    rec.add_argument("--emit-spec", default=None, help="write the estimated grid (PSPC)")
    rec.add_argument("--jobs", type=int, default=1,
                     help="parallel workers for directory inputs")
    _add_stft_args(rec)
    rec.set_defaults(handler=cmd_reconstruct,
                     outputs=lambda a: [a.output, a.emit_diffs, a.emit_spec])

    orc = sub.add_parser("oracle", help="dump true phase differences and magnitude")
    orc.add_argument("input", help="input WAV")
    orc.add_argument("--out-diffs", default=None, help="PPDF output path")
    orc.add_argument("--out-spec", default=None, help="PSPC output path")
    orc.add_argument("--out-dir", default=None, help="output directory (directory input)")
    orc.add_argument("--complex", action="store_true", help="store complex coefficients")
    orc.add_argument("--jobs", type=int, default=1,
                     help="parallel workers for directory inputs")
    _add_stft_args(orc)
    orc.set_defaults(handler=cmd_oracle, outputs=lambda a: [a.out_diffs, a.out_spec])

    ev = sub.add_parser("evaluate", help="score an estimate against a reference")
    ev.add_argument("reference")
    ev.add_argument("estimate")
    ev.add_argument("--report", default=None, help="append the record to this file")
    ev.add_argument("--emit-hist", default=None, help="write AWE histograms (PPDH prefix)")
    ev.add_argument("--mask-quantile", type=float, default=None)
    _add_stft_args(ev)
    ev.set_defaults(handler=cmd_evaluate,
                    outputs=lambda a: [a.emit_hist and a.emit_hist + ".bpd.ppdh",
                                       a.emit_hist and a.emit_hist + ".fpd.ppdh"])

    ins = sub.add_parser("inspect-model", help="summarize a PDNW weight container")
    ins.add_argument("model")
    ins.add_argument("--expect-head", choices=(nn.HEAD_BPD, nn.HEAD_FPD), default=None)
    ins.set_defaults(handler=cmd_inspect_model, outputs=lambda a: [])

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # single CLI error boundary
        for path in args.outputs(args):
            if path and os.path.isfile(path):
                os.unlink(path)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
